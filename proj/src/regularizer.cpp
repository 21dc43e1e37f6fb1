#include "inim/regularizer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "inim/density.hpp"
#include "inim/integral_images.hpp"
#include "inim/parallel.hpp"

namespace inim {
namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

double max_displacement(std::span<const Point2> before, std::span<const Point2> after) {
  double worst = 0.0;
  for (std::size_t s = 0; s < before.size(); ++s) {
    worst = std::max(worst, std::hypot(after[s].x - before[s].x, after[s].y - before[s].y));
  }
  return worst;
}

// Frames kept in memory for a run of at most `max_iterations` steps.
bool retain_by_policy(std::size_t t, std::size_t max_iterations, const RegularizationParams& params) {
  if (t == 0) return true;
  if (std::find(params.keep_frames.begin(), params.keep_frames.end(), t) != params.keep_frames.end()) {
    return true;
  }
  const std::size_t frames = max_iterations + 1;
  if (frames <= params.frame_cap) return true;
  // Evenly spaced checkpoints bound the recomputation cost.
  const std::size_t stride = (frames + params.frame_cap - 2) / (params.frame_cap - 1);
  return t % stride == 0;
}

}  // namespace

IterationResult iterate_once(std::span<const Point2> positions, const RegularizationParams& params,
                             const DefectField& defect) {
  IterationResult result;
  result.density = build_density(positions, params);
  const IntegralSet tables = build_integral_set(result.density);
  result.field = build_field(tables, defect, &result.diagnostics);

  result.positions.resize(positions.size());
  const int threads = thread_count();
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(positions.size());
#pragma omp parallel for num_threads(threads) schedule(static)
  for (std::ptrdiff_t s = 0; s < n; ++s) {
    result.positions[static_cast<std::size_t>(s)] =
        interpolate(result.field, positions[static_cast<std::size_t>(s)]);
  }
  return result;
}

IterationResult iterate_once(std::span<const Point2> positions, const RegularizationParams& params) {
  return iterate_once(positions, params, *cached_defect(params.k));
}

MetricRecord measure_frame(std::span<const Point2> original, std::span<const Point2> frame,
                           const RegularizationParams& params, std::size_t iteration) {
  MetricRecord record;
  record.iteration = iteration;
  record.binned_stddev = binned_stddev(frame, params.k);
  record.overplotting = frame.empty() ? 0.0 : overplotting(frame, params.k);

  const std::vector<std::size_t> idx = fixed_subsample(
      frame.size(), static_cast<std::size_t>(std::max(params.quality_sample_cap, 2)));
  Positions sub_original;
  Positions sub_frame;
  sub_original.reserve(idx.size());
  sub_frame.reserve(idx.size());
  for (std::size_t i : idx) {
    sub_original.push_back(original[i]);
    sub_frame.push_back(frame[i]);
  }
  // Fewer samples than neighbors: every neighborhood is the whole set.
  record.trustworthiness = sub_frame.size() > static_cast<std::size_t>(params.knn)
                               ? trustworthiness(sub_original, sub_frame, params.knn)
                               : 1.0;
  record.ordering = orthogonal_ordering(sub_original, sub_frame, idx.size());
  return record;
}

RegularizationRun run(const ScatterDataset& dataset, const RegularizationParams& params) {
  params.validate();
  RegularizationRun result;
  result.original_ = dataset;
  result.params_ = params;
  result.defect_ = cached_defect(params.k);
  result.initial_density_ = build_density(dataset.samples, params);

  const std::size_t max_iterations = static_cast<std::size_t>(params.iterations);
  auto current = std::make_shared<const Positions>(dataset.samples);
  result.stored_[0] = {current, nullptr};
  if (params.record_metrics) {
    result.metrics_.push_back(measure_frame(dataset.samples, *current, params, 0));
  }

  const Clock::time_point started = Clock::now();
  for (std::size_t t = 1; t <= max_iterations; ++t) {
    const Clock::time_point step_start = Clock::now();
    IterationResult step = iterate_once(*current, params, *result.defect_);
    const double step_ms = elapsed_ms(step_start);

    auto next = std::make_shared<const Positions>(std::move(step.positions));
    const double moved = max_displacement(*current, *next);
    result.displacements_.push_back(moved);
    result.diagnostics_.push_back(step.diagnostics);
    result.iterations_ = t;

    if (params.record_metrics) {
      MetricRecord record = measure_frame(dataset.samples, *next, params, t);
      record.wall_ms = step_ms;
      result.metrics_.push_back(record);
    }

    bool stop = t == max_iterations;
    if (params.stop == StopCriterion::DisplacementBelowEpsilon && moved < params.epsilon) stop = true;
    if (params.stop == StopCriterion::TimeBudget && elapsed_ms(started) >= params.time_budget_ms) {
      stop = true;
    }

    if (stop || retain_by_policy(t, max_iterations, params)) {
      std::shared_ptr<const DeformationField> field;
      if (params.retain_fields) field = std::make_shared<const DeformationField>(std::move(step.field));
      result.stored_[t] = {next, std::move(field)};
    }
    current = std::move(next);
    if (stop) break;
  }
  return result;
}

RegularizationRun::Stored RegularizationRun::recompute(std::size_t t) const {
  std::lock_guard<std::mutex> lock(*recompute_mutex_);
  auto base = stored_.upper_bound(t);
  --base;  // frame 0 is always stored
  std::shared_ptr<const Positions> positions = base->second.positions;
  std::shared_ptr<const DeformationField> field = base->second.field;
  for (std::size_t step = base->first + 1; step <= t; ++step) {
    IterationResult r = iterate_once(*positions, params_, *defect_);
    positions = std::make_shared<const Positions>(std::move(r.positions));
    field = std::make_shared<const DeformationField>(std::move(r.field));
  }
  return {positions, field};
}

std::shared_ptr<const Positions> RegularizationRun::frame(std::size_t t) const {
  if (t > iterations_) {
    throw Error(ErrorCode::OutOfRangeLevel, "frame index beyond the completed iterations");
  }
  const auto it = stored_.find(t);
  if (it != stored_.end()) return it->second.positions;
  return recompute(t).positions;
}

std::shared_ptr<const DeformationField> RegularizationRun::field(std::size_t t) const {
  if (t == 0 || t > iterations_) {
    throw Error(ErrorCode::OutOfRangeLevel, "field index must lie in [1, iterations]");
  }
  const auto it = stored_.find(t);
  if (it != stored_.end() && it->second.field) return it->second.field;
  // Recompute from frame t - 1 so the field is the one that produced frame t.
  const std::shared_ptr<const Positions> previous = frame(t - 1);
  IterationResult r = iterate_once(*previous, params_, *defect_);
  return std::make_shared<const DeformationField>(std::move(r.field));
}

bool RegularizationRun::frame_retained(std::size_t t) const { return stored_.count(t) != 0; }

std::size_t RegularizationRun::memory_bytes() const {
  std::size_t bytes = original_.samples.size() * sizeof(Point2) +
                      initial_density_.grid.pixel_count() * sizeof(double);
  for (const auto& [t, s] : stored_) {
    if (s.positions) bytes += s.positions->size() * sizeof(Point2);
    if (s.field) bytes += s.field->pixel_count() * sizeof(Point2);
  }
  return bytes;
}

Positions transition_positions(const RegularizationRun& run, double level) {
  const double top = static_cast<double>(run.iterations());
  if (!(level >= 0.0 && level <= top)) {
    throw Error(ErrorCode::OutOfRangeLevel, "transition level outside [0, iterations]");
  }
  const std::size_t lo = static_cast<std::size_t>(std::floor(level));
  const std::size_t hi = static_cast<std::size_t>(std::ceil(level));
  const double w = level - static_cast<double>(lo);
  const auto a = run.frame(lo);
  if (hi == lo) return *a;
  const auto b = run.frame(hi);
  Positions out(a->size());
  for (std::size_t s = 0; s < out.size(); ++s) {
    out[s] = {(1.0 - w) * (*a)[s].x + w * (*b)[s].x, (1.0 - w) * (*a)[s].y + w * (*b)[s].y};
  }
  return out;
}

}  // namespace inim
