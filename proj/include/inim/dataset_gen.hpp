#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "inim/core.hpp"

namespace inim {

enum class GenKind { GaussianMixture, Diagonal, FixedFourCluster, LabeledRegions };

const char* to_string(GenKind kind);
std::optional<GenKind> parse_gen_kind(const std::string& name);

struct GenSpec {
  GenKind kind = GenKind::GaussianMixture;
  std::uint64_t seed = 1;
  std::size_t total_n = 10000;
  int min_clusters = 1;
  int max_clusters = 8;
  double min_sigma = 0.01;  // fraction of the domain width
  double max_sigma = 0.08;
  double margin = 0.15;     // cluster centers keep this distance from the boundary
  double band = 0.02;       // diagonal kind: half-width of the band around y = x
  bool desk_scale = false;  // fixed-four-cluster: divide the cluster sizes by 100

  /// Throws Error(InvalidSpec).
  void validate() const;
};

/// Portable random stream: std::mt19937_64 (whose output sequence is fixed
/// by the standard) with hand-written uniform and normal transforms, since
/// the standard distributions differ between library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();
  double uniform();                     // [0, 1)
  double uniform(double lo, double hi);  // [lo, hi)
  std::uint64_t below(std::uint64_t bound);
  double normal();

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// SplitMix64 finalizer, used to derive independent per-dataset seeds.
std::uint64_t mix_seed(std::uint64_t value);

/// Draws a dataset. Samples are redrawn until they land in [0,1]^2, and
/// cluster kinds label each sample with its cluster.
ScatterDataset generate(const GenSpec& spec);

/// Sizes used by the evaluation suite: 250k, 500k, ..., 3M.
std::vector<std::size_t> suite_sizes(bool desk_scale);

/// Specs of the evaluation suite: `count` Gaussian mixtures with 1 to 8
/// clusters, seeds derived per index, sizes cycling through suite_sizes().
std::vector<GenSpec> suite_specs(std::size_t count = 500, std::uint64_t seed = 2024,
                                 bool desk_scale = false);

/// Materializes suite_specs(); meant for desk-scale suites.
std::vector<ScatterDataset> generate_suite(std::size_t count = 500, std::uint64_t seed = 2024,
                                           bool desk_scale = true);

}  // namespace inim
