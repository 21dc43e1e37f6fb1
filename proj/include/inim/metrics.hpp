#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "inim/core.hpp"

namespace inim {

struct MetricRecord {
  std::size_t iteration = 0;
  double binned_stddev = 0.0;
  double overplotting = 0.0;
  double trustworthiness = 1.0;
  double ordering = 1.0;
  double wall_ms = 0.0;
};

/// Population standard deviation of sample counts over 4x4-pixel bins of the
/// 2^k grid. Zero for an empty dataset.
double binned_stddev(std::span<const Point2> positions, int k);

/// (n - occupied pixels) / n. Throws Error(EmptyDataset) for n = 0.
double overplotting(std::span<const Point2> positions, int k);

/// Trustworthiness of `deformed` with respect to `original` for neighborhood
/// size knn. Points that enter a sample's knn set in the deformed layout are
/// penalized by (original rank - knn). The normalizer is the largest
/// attainable penalty, which equals the usual knn (2n - 3 knn - 1) / 2 per
/// sample whenever n >= 2 knn + 1. Throws Error(TooFewSamples) unless
/// n > knn.
double trustworthiness(std::span<const Point2> original, std::span<const Point2> deformed,
                       int knn);

/// Fraction of sample pairs whose x-order sign and y-order sign both survive
/// the deformation. Exact for n <= cap, otherwise evaluated on a fixed-seed
/// subsample of size cap.
double orthogonal_ordering(std::span<const Point2> original, std::span<const Point2> deformed,
                           std::size_t cap = 4096);

/// Deterministic subsample of min(n, cap) distinct indices (sorted).
std::vector<std::size_t> fixed_subsample(std::size_t n, std::size_t cap,
                                         std::uint64_t seed = 0x5eedULL);

/// One line of the metrics export, keys in a stable order. Wall time is
/// left out unless requested so that exports stay reproducible.
std::string to_json_line(const MetricRecord& record, bool include_wall_time = false);
MetricRecord metric_record_from_json(const std::string& line);

}  // namespace inim
