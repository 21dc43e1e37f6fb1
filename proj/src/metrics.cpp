#include "inim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <unordered_set>

#include <json.hpp>

#include "inim/parallel.hpp"

namespace inim {
namespace {

double squared_distance(Point2 a, Point2 b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return dx * dx + dy * dy;
}

int sign(double v) { return (v > 0.0) - (v < 0.0); }

}  // namespace

double binned_stddev(std::span<const Point2> positions, int k) {
  if (k < 2) throw Error(ErrorCode::InvalidParams, "binning needs k >= 2");
  if (positions.empty()) return 0.0;
  const int bins_per_side = side_of(k) / 4;
  std::vector<std::uint64_t> counts(
      static_cast<std::size_t>(bins_per_side) * static_cast<std::size_t>(bins_per_side), 0);
  for (const Point2& p : positions) {
    const PixelIndex px = pixel_of(p, k);
    ++counts[static_cast<std::size_t>(px.j / 4) * static_cast<std::size_t>(bins_per_side) +
             static_cast<std::size_t>(px.i / 4)];
  }
  const double mean = static_cast<double>(positions.size()) / static_cast<double>(counts.size());
  double acc = 0.0;
  for (std::uint64_t c : counts) {
    const double diff = static_cast<double>(c) - mean;
    acc += diff * diff;
  }
  return std::sqrt(acc / static_cast<double>(counts.size()));
}

double overplotting(std::span<const Point2> positions, int k) {
  if (positions.empty()) throw Error(ErrorCode::EmptyDataset, "overplotting of an empty dataset");
  const int side = side_of(k);
  std::vector<std::uint8_t> occupied(static_cast<std::size_t>(side) * static_cast<std::size_t>(side), 0);
  std::size_t distinct = 0;
  for (const Point2& p : positions) {
    const PixelIndex px = pixel_of(p, k);
    auto& cell = occupied[static_cast<std::size_t>(px.j) * static_cast<std::size_t>(side) +
                          static_cast<std::size_t>(px.i)];
    if (cell == 0) {
      cell = 1;
      ++distinct;
    }
  }
  const double n = static_cast<double>(positions.size());
  return (n - static_cast<double>(distinct)) / n;
}

double trustworthiness(std::span<const Point2> original, std::span<const Point2> deformed,
                       int knn) {
  const std::size_t n = original.size();
  if (deformed.size() != n) {
    throw Error(ErrorCode::InvalidParams, "layouts differ in sample count");
  }
  if (knn < 1 || n <= static_cast<std::size_t>(knn)) {
    throw Error(ErrorCode::TooFewSamples, "trustworthiness needs more samples than neighbors");
  }
  const std::size_t k = static_cast<std::size_t>(knn);
  const std::size_t worst_members = std::min(k, n - 1 - k);
  double worst_per_sample = 0.0;
  for (std::size_t m = 0; m < worst_members; ++m) {
    worst_per_sample += static_cast<double>(n - 1 - m - k);
  }
  if (worst_per_sample == 0.0) return 1.0;

  std::vector<double> penalty(n, 0.0);
  const int threads = thread_count();
#pragma omp parallel num_threads(threads)
  {
    std::vector<std::size_t> order(n - 1);
    std::vector<double> deformed_dist(n);
    std::vector<double> original_dist(n);
#pragma omp for schedule(static)
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        deformed_dist[j] = squared_distance(deformed[i], deformed[j]);
        original_dist[j] = squared_distance(original[i], original[j]);
      }
      std::size_t w = 0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j != i) order[w++] = j;
      }
      const auto closer = [](const std::vector<double>& dist) {
        return [&dist](std::size_t a, std::size_t b) {
          return dist[a] < dist[b] || (dist[a] == dist[b] && a < b);
        };
      };
      std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                        closer(deformed_dist));
      double local = 0.0;
      const auto by_original = closer(original_dist);
      for (std::size_t m = 0; m < k; ++m) {
        const std::size_t j = order[m];
        std::size_t rank = 1;
        for (std::size_t l = 0; l < n; ++l) {
          if (l != i && l != j && by_original(l, j)) ++rank;
        }
        if (rank > k) local += static_cast<double>(rank - k);
      }
      penalty[i] = local;
    }
  }
  const double total = std::accumulate(penalty.begin(), penalty.end(), 0.0);
  return 1.0 - total / (static_cast<double>(n) * worst_per_sample);
}

std::vector<std::size_t> fixed_subsample(std::size_t n, std::size_t cap, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (n <= cap) return idx;
  std::mt19937_64 rng(seed);
  for (std::size_t m = 0; m < cap; ++m) {
    const std::size_t span = n - m;
    // Unbiased bounded draw without std::uniform_int_distribution, whose
    // output differs between standard libraries.
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
    std::uint64_t draw = rng();
    while (draw >= limit) draw = rng();
    std::swap(idx[m], idx[m + static_cast<std::size_t>(draw % span)]);
  }
  idx.resize(cap);
  std::sort(idx.begin(), idx.end());
  return idx;
}

double orthogonal_ordering(std::span<const Point2> original, std::span<const Point2> deformed,
                           std::size_t cap) {
  const std::size_t n = original.size();
  if (deformed.size() != n) {
    throw Error(ErrorCode::InvalidParams, "layouts differ in sample count");
  }
  const std::vector<std::size_t> idx = fixed_subsample(n, std::max<std::size_t>(cap, 2));
  const std::size_t m = idx.size();
  if (m < 2) return 1.0;

  std::vector<std::uint64_t> kept(m, 0);
  const int threads = thread_count();
#pragma omp parallel for num_threads(threads) schedule(dynamic, 64)
  for (std::size_t a = 0; a < m; ++a) {
    const Point2 oa = original[idx[a]];
    const Point2 da = deformed[idx[a]];
    std::uint64_t count = 0;
    for (std::size_t b = a + 1; b < m; ++b) {
      const Point2 ob = original[idx[b]];
      const Point2 db = deformed[idx[b]];
      if (sign(ob.x - oa.x) == sign(db.x - da.x) && sign(ob.y - oa.y) == sign(db.y - da.y)) {
        ++count;
      }
    }
    kept[a] = count;
  }
  const std::uint64_t total = std::accumulate(kept.begin(), kept.end(), std::uint64_t{0});
  const double pairs = static_cast<double>(m) * static_cast<double>(m - 1) / 2.0;
  return static_cast<double>(total) / pairs;
}

std::string to_json_line(const MetricRecord& record, bool include_wall_time) {
  nlohmann::ordered_json j;
  j["iteration"] = record.iteration;
  j["binned_stddev"] = record.binned_stddev;
  j["overplotting"] = record.overplotting;
  j["trustworthiness"] = record.trustworthiness;
  j["ordering"] = record.ordering;
  if (include_wall_time) j["wall_ms"] = record.wall_ms;
  return j.dump();
}

MetricRecord metric_record_from_json(const std::string& line) {
  try {
    const auto j = nlohmann::json::parse(line);
    MetricRecord r;
    r.iteration = j.at("iteration").get<std::size_t>();
    r.binned_stddev = j.at("binned_stddev").get<double>();
    r.overplotting = j.at("overplotting").get<double>();
    r.trustworthiness = j.at("trustworthiness").get<double>();
    r.ordering = j.at("ordering").get<double>();
    r.wall_ms = j.value("wall_ms", 0.0);
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::FormatError, std::string("bad metric record: ") + e.what());
  }
}

}  // namespace inim
