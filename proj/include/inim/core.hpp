#pragma once

// Shared domain types and coordinate conventions.
//
// Texture grids are square with side 2^k. Pixel (i, j) has i horizontal and
// j vertical with the origin at the top-left corner, and is identified with
// the texture coordinate (x, y) = 2^-k * (i, j). Values are stored row-major:
// index = j * side + i.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace inim {

enum class ErrorCode {
  NonFiniteCoordinate,
  LabelLengthMismatch,
  EmptyInput,
  ZeroBackground,
  SingularMass,
  OutOfRangeLevel,
  EmptyDataset,
  TooFewSamples,
  LevelOutOfRange,
  InvalidSpec,
  InvalidParams,
  ParseError,
  Io,
  FormatError,
  PayloadTooLarge,
  UnknownSession,
  UnknownKind,
  DegeneratePolygon,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

inline Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
inline Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
inline Point2 operator*(double s, Point2 p) { return {s * p.x, s * p.y}; }

using Positions = std::vector<Point2>;

struct PixelIndex {
  int i = 0;
  int j = 0;

  friend bool operator==(const PixelIndex&, const PixelIndex&) = default;
};

/// Samples in the unit square. Row i of the input keeps id i for the
/// lifetime of the dataset and every run derived from it.
struct ScatterDataset {
  Positions samples;
  std::vector<std::int32_t> labels;      // empty, or one class id per sample
  std::vector<std::string> label_names;  // optional names indexed by class id

  std::size_t size() const noexcept { return samples.size(); }
  bool has_labels() const noexcept { return !labels.empty(); }
  std::int32_t class_count() const;
};

struct ValidateOptions {
  bool auto_normalize = true;
  // With auto_normalize, leave data that already lies in [0,1]^2 untouched.
  bool only_if_out_of_range = false;
  bool allow_empty = false;
};

/// Validates raw coordinates and optionally min-max normalizes each axis
/// into [0,1]. A degenerate axis (max == min) maps to 0.5. Without
/// normalization, coordinates outside [0,1] are rejected.
ScatterDataset validate_dataset(Positions raw,
                                std::vector<std::int32_t> labels = {},
                                const ValidateOptions& options = {});

/// Side length 2^k of a texture.
inline int side_of(int k) { return 1 << k; }

/// Pixel containing (x, y); the right and bottom domain edges clamp into the
/// last pixel.
PixelIndex pixel_of(double x, double y, int k);
inline PixelIndex pixel_of(Point2 p, int k) { return pixel_of(p.x, p.y, k); }

/// Texture coordinate 2^-k * (i, j) of a pixel.
Point2 coord_of(PixelIndex p, int k);

/// Square scalar grid of side 2^k, row-major, top-left origin.
class TextureGrid {
 public:
  TextureGrid() = default;
  explicit TextureGrid(int k, double fill = 0.0);

  int k() const noexcept { return k_; }
  int side() const noexcept { return side_; }
  std::size_t pixel_count() const noexcept { return values_.size(); }

  double& operator()(int i, int j) { return values_[index(i, j)]; }
  double operator()(int i, int j) const { return values_[index(i, j)]; }

  std::size_t index(int i, int j) const noexcept {
    return static_cast<std::size_t>(j) * static_cast<std::size_t>(side_) +
           static_cast<std::size_t>(i);
  }

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }
  double* row(int j) noexcept { return values_.data() + index(0, j); }
  const double* row(int j) const noexcept { return values_.data() + index(0, j); }

  double sum() const;
  double min() const;
  double max() const;

  friend bool operator==(const TextureGrid&, const TextureGrid&) = default;

 private:
  int k_ = 0;
  int side_ = 0;
  std::vector<double> values_;
};

struct DensityTexture {
  TextureGrid grid;
  int r = 0;           // smoothing-kernel dilation in pixels
  double d0 = 0.0;     // background density per pixel
  std::size_t n = 0;   // sample count represented
};

/// The eight integral tables and the total mass C. Tables share the grid
/// shape of the density they were built from.
struct IntegralSet {
  TextureGrid alpha, beta, gamma, delta;
  TextureGrid alpha_t, beta_t, gamma_t, delta_t;
  double total = 0.0;

  int k() const noexcept { return alpha.k(); }
};

/// Per-pixel target coordinates of the deformation, interleaved (x, y).
class DeformationField {
 public:
  DeformationField() = default;
  explicit DeformationField(int k);

  /// Identity map: every pixel targets its own texture coordinate.
  static DeformationField identity(int k);

  int k() const noexcept { return k_; }
  int side() const noexcept { return side_; }
  std::size_t pixel_count() const noexcept { return targets_.size(); }

  Point2& at(int i, int j) { return targets_[index(i, j)]; }
  const Point2& at(int i, int j) const { return targets_[index(i, j)]; }
  std::span<Point2> targets() noexcept { return targets_; }
  std::span<const Point2> targets() const noexcept { return targets_; }

  std::size_t index(int i, int j) const noexcept {
    return static_cast<std::size_t>(j) * static_cast<std::size_t>(side_) +
           static_cast<std::size_t>(i);
  }

  friend bool operator==(const DeformationField&, const DeformationField&) = default;

 private:
  int k_ = 0;
  int side_ = 0;
  std::vector<Point2> targets_;
};

enum class StopCriterion { FixedCount, DisplacementBelowEpsilon, TimeBudget };

enum class BackgroundMode { Auto, Explicit };

struct RegularizationParams {
  int k = 10;
  int r = 8;
  int iterations = 16;
  StopCriterion stop = StopCriterion::FixedCount;
  double epsilon = 1e-4;          // texture coordinates
  double time_budget_ms = 1000.0;
  BackgroundMode d0_mode = BackgroundMode::Auto;
  double d0 = 0.0;                // used when d0_mode == Explicit

  // Run bookkeeping.
  bool record_metrics = true;
  int quality_sample_cap = 1024;  // subsample for trustworthiness / ordering
  int knn = 10;
  std::size_t frame_cap = 64;
  bool retain_fields = true;
  std::vector<std::size_t> keep_frames;  // always retained beyond the cap

  /// Throws Error(InvalidParams) on violated invariants.
  void validate() const;
};

const char* to_string(StopCriterion stop);
std::optional<StopCriterion> parse_stop_criterion(const std::string& name);

}  // namespace inim
