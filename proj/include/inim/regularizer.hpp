#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include "inim/core.hpp"
#include "inim/deformation.hpp"
#include "inim/metrics.hpp"

namespace inim {

struct IterationResult {
  Positions positions;
  DeformationField field;
  DensityTexture density;
  FieldDiagnostics diagnostics;
};

/// One regularization step: density of the current positions, integral
/// tables, corrected field, and bilinear resampling of every sample.
IterationResult iterate_once(std::span<const Point2> positions, const RegularizationParams& params,
                             const DefectField& defect);
IterationResult iterate_once(std::span<const Point2> positions, const RegularizationParams& params);

/// Outcome of a regularization run. Frame 0 is the input; frame t is the
/// result of t steps and field t is the field that produced it. Frames beyond
/// the retention cap are recomputed on demand from the nearest stored frame.
/// A completed run is immutable apart from that internal recomputation.
class RegularizationRun {
 public:
  const ScatterDataset& original() const noexcept { return original_; }
  const RegularizationParams& params() const noexcept { return params_; }

  /// Iterations actually performed (may be below params().iterations when a
  /// displacement or time criterion fired).
  std::size_t iterations() const noexcept { return iterations_; }
  std::size_t frame_count() const noexcept { return iterations_ + 1; }

  std::shared_ptr<const Positions> frame(std::size_t t) const;

  /// Field that maps frame t - 1 to frame t, t in [1, iterations()].
  std::shared_ptr<const DeformationField> field(std::size_t t) const;

  bool frame_retained(std::size_t t) const;

  /// Density texture of the input samples.
  const DensityTexture& initial_density() const noexcept { return initial_density_; }

  /// One record per frame when metrics are enabled, otherwise empty.
  const std::vector<MetricRecord>& metrics() const noexcept { return metrics_; }

  /// Largest per-sample displacement of each step, index t - 1 for step t.
  const std::vector<double>& displacements() const noexcept { return displacements_; }

  /// Pre-clamp diagnostics per step.
  const std::vector<FieldDiagnostics>& diagnostics() const noexcept { return diagnostics_; }

  std::size_t memory_bytes() const;

 private:
  friend RegularizationRun run(const ScatterDataset& dataset, const RegularizationParams& params);

  struct Stored {
    std::shared_ptr<const Positions> positions;
    std::shared_ptr<const DeformationField> field;  // null for frame 0 or when not retained
  };

  Stored recompute(std::size_t t) const;

  ScatterDataset original_;
  RegularizationParams params_;
  std::shared_ptr<const DefectField> defect_;
  DensityTexture initial_density_;
  std::size_t iterations_ = 0;
  std::map<std::size_t, Stored> stored_;
  std::vector<MetricRecord> metrics_;
  std::vector<double> displacements_;
  std::vector<FieldDiagnostics> diagnostics_;
  std::unique_ptr<std::mutex> recompute_mutex_ = std::make_unique<std::mutex>();
};

/// Runs steps until the stopping criterion fires. The defect field is taken
/// once from the process-wide cache and reused for every step.
RegularizationRun run(const ScatterDataset& dataset, const RegularizationParams& params);

/// Per-sample linear blend of frames floor(level) and ceil(level). Throws
/// Error(OutOfRangeLevel) outside [0, iterations()].
Positions transition_positions(const RegularizationRun& run, double level);

/// Metric record of one frame against the original layout.
MetricRecord measure_frame(std::span<const Point2> original, std::span<const Point2> frame,
                           const RegularizationParams& params, std::size_t iteration);

}  // namespace inim
