#include "inim/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <string>
#include <thread>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace inim {
namespace {

int resolve(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

int from_env() {
  const char* env = std::getenv("INIM_THREADS");
  if (env == nullptr) return resolve(0);
  try {
    return resolve(std::stoi(env));
  } catch (const std::exception&) {
    return resolve(0);
  }
}

std::atomic<int>& configured() {
  static std::atomic<int> value{from_env()};
  return value;
}

}  // namespace

int thread_count() { return configured().load(std::memory_order_relaxed); }

void set_thread_count(int threads) {
  configured().store(resolve(threads), std::memory_order_relaxed);
}

void tune_allocator() {
#if defined(__GLIBC__)
  mallopt(M_MMAP_THRESHOLD, 256 * 1024 * 1024);
  mallopt(M_TRIM_THRESHOLD, 1024 * 1024 * 1024);
#endif
}

}  // namespace inim
