#include "inim/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace inim {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonFiniteCoordinate: return "NonFiniteCoordinate";
    case ErrorCode::LabelLengthMismatch: return "LabelLengthMismatch";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::ZeroBackground: return "ZeroBackground";
    case ErrorCode::SingularMass: return "SingularMass";
    case ErrorCode::OutOfRangeLevel: return "OutOfRangeLevel";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::LevelOutOfRange: return "LevelOutOfRange";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::InvalidParams: return "InvalidParams";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::Io: return "Io";
    case ErrorCode::FormatError: return "FormatError";
    case ErrorCode::PayloadTooLarge: return "PayloadTooLarge";
    case ErrorCode::UnknownSession: return "UnknownSession";
    case ErrorCode::UnknownKind: return "UnknownKind";
    case ErrorCode::DegeneratePolygon: return "DegeneratePolygon";
  }
  return "Unknown";
}

std::int32_t ScatterDataset::class_count() const {
  if (labels.empty()) return 0;
  return *std::max_element(labels.begin(), labels.end()) + 1;
}

ScatterDataset validate_dataset(Positions raw, std::vector<std::int32_t> labels,
                                const ValidateOptions& options) {
  if (raw.empty() && !options.allow_empty) {
    throw Error(ErrorCode::EmptyInput, "dataset has no samples");
  }
  if (!labels.empty() && labels.size() != raw.size()) {
    throw Error(ErrorCode::LabelLengthMismatch,
                "label count " + std::to_string(labels.size()) +
                    " does not match sample count " + std::to_string(raw.size()));
  }
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (!std::isfinite(raw[i].x) || !std::isfinite(raw[i].y)) {
      throw Error(ErrorCode::NonFiniteCoordinate,
                  "non-finite coordinate at row " + std::to_string(i));
    }
  }
  for (std::int32_t label : labels) {
    if (label < 0) throw Error(ErrorCode::InvalidSpec, "negative class id");
  }

  const auto in_unit_square = [&raw] {
    return std::all_of(raw.begin(), raw.end(), [](const Point2& p) {
      return p.x >= 0.0 && p.x <= 1.0 && p.y >= 0.0 && p.y <= 1.0;
    });
  };
  const bool normalize_now =
      options.auto_normalize && !(options.only_if_out_of_range && in_unit_square());

  if (normalize_now && !raw.empty()) {
    double min_x = std::numeric_limits<double>::infinity();
    double min_y = min_x;
    double max_x = -min_x;
    double max_y = -min_x;
    for (const Point2& p : raw) {
      min_x = std::min(min_x, p.x);
      max_x = std::max(max_x, p.x);
      min_y = std::min(min_y, p.y);
      max_y = std::max(max_y, p.y);
    }
    // An input that already spans exactly [0,1] is left bit-identical.
    const auto normalize = [](double v, double lo, double hi) {
      if (hi == lo) return 0.5;
      if (lo == 0.0 && hi == 1.0) return v;
      return std::clamp((v - lo) / (hi - lo), 0.0, 1.0);
    };
    for (Point2& p : raw) {
      p.x = normalize(p.x, min_x, max_x);
      p.y = normalize(p.y, min_y, max_y);
    }
  } else {
    for (std::size_t i = 0; i < raw.size(); ++i) {
      const Point2& p = raw[i];
      if (p.x < 0.0 || p.x > 1.0 || p.y < 0.0 || p.y > 1.0) {
        throw Error(ErrorCode::InvalidSpec,
                    "coordinate outside the unit square at row " + std::to_string(i));
      }
    }
  }

  ScatterDataset out;
  out.samples = std::move(raw);
  out.labels = std::move(labels);
  return out;
}

PixelIndex pixel_of(double x, double y, int k) {
  const int side = side_of(k);
  const auto index = [side](double v) {
    const double scaled = std::floor(v * static_cast<double>(side));
    if (!(scaled > 0.0)) return 0;
    if (scaled >= static_cast<double>(side - 1)) return side - 1;
    return static_cast<int>(scaled);
  };
  return {index(x), index(y)};
}

Point2 coord_of(PixelIndex p, int k) {
  const double scale = std::ldexp(1.0, -k);
  return {scale * p.i, scale * p.j};
}

TextureGrid::TextureGrid(int k, double fill)
    : k_(k), side_(side_of(k)),
      values_(static_cast<std::size_t>(side_) * static_cast<std::size_t>(side_), fill) {
  if (k < 1 || k > 14) throw Error(ErrorCode::InvalidParams, "texture exponent out of range");
}

double TextureGrid::sum() const {
  return std::accumulate(values_.begin(), values_.end(), 0.0);
}

double TextureGrid::min() const {
  return values_.empty() ? 0.0 : *std::min_element(values_.begin(), values_.end());
}

double TextureGrid::max() const {
  return values_.empty() ? 0.0 : *std::max_element(values_.begin(), values_.end());
}

DeformationField::DeformationField(int k)
    : k_(k), side_(side_of(k)),
      targets_(static_cast<std::size_t>(side_) * static_cast<std::size_t>(side_)) {
  if (k < 1 || k > 14) throw Error(ErrorCode::InvalidParams, "texture exponent out of range");
}

DeformationField DeformationField::identity(int k) {
  DeformationField field(k);
  for (int j = 0; j < field.side(); ++j) {
    for (int i = 0; i < field.side(); ++i) field.at(i, j) = coord_of({i, j}, k);
  }
  return field;
}

void RegularizationParams::validate() const {
  const auto fail = [](const std::string& what) {
    throw Error(ErrorCode::InvalidParams, what);
  };
  if (k < 2 || k > 13) fail("k must lie in [2, 13]");
  if (r < 1) fail("kernel size r must be >= 1");
  if (iterations < 0) fail("iterations must be >= 0");
  if (stop == StopCriterion::DisplacementBelowEpsilon && !(epsilon > 0.0)) {
    fail("epsilon must be > 0");
  }
  if (stop == StopCriterion::TimeBudget && !(time_budget_ms > 0.0)) {
    fail("time budget must be > 0");
  }
  if (d0_mode == BackgroundMode::Explicit && !(d0 > 0.0)) {
    throw Error(ErrorCode::ZeroBackground, "explicit background density must be > 0");
  }
  if (knn < 1) fail("knn must be >= 1");
  if (frame_cap < 2) fail("frame cap must be >= 2");
}

const char* to_string(StopCriterion stop) {
  switch (stop) {
    case StopCriterion::FixedCount: return "fixed";
    case StopCriterion::DisplacementBelowEpsilon: return "eps";
    case StopCriterion::TimeBudget: return "time";
  }
  return "fixed";
}

std::optional<StopCriterion> parse_stop_criterion(const std::string& name) {
  if (name == "fixed") return StopCriterion::FixedCount;
  if (name == "eps") return StopCriterion::DisplacementBelowEpsilon;
  if (name == "time") return StopCriterion::TimeBudget;
  return std::nullopt;
}

}  // namespace inim
