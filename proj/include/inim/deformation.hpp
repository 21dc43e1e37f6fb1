#pragma once

#include <cstddef>
#include <memory>

#include "inim/core.hpp"

namespace inim {

/// Boundary points of the unit square toward which the four classical
/// integrals pull a location. Piecewise linear in (x, y) with seams on the
/// diagonals y = x and x + y = 1.
struct AnchorSet {
  Point2 q1, q2, q3, q4;
};

AnchorSet anchors(double x, double y);

/// Global map of a location given the integral tables of a positive texture:
///
///   (alpha q1 + beta q2 + gamma q3 + delta q4
///    + alpha_t (x, 1) + beta_t (1, y) + gamma_t (x, 0) + delta_t (0, y)) / 2C
///
/// with all tables read at the pixel containing (x, y). Throws
/// Error(SingularMass) when C <= 0.
Point2 raw_map(double x, double y, const IntegralSet& tables);

/// Image of every pixel under raw_map for the constant texture. The map is
/// homogeneous of degree 0 in the texture, so this depends only on k.
struct DefectField {
  DeformationField field;
};

/// Builds the defect field for 2^k textures. Each call counts toward
/// defect_build_count().
DefectField build_defect(int k);

/// Process-wide defect cache keyed by k. Thread-safe.
std::shared_ptr<const DefectField> cached_defect(int k);
void clear_defect_cache();

/// Number of defect fields constructed so far in this process.
std::size_t defect_build_count();

/// Pre-clamp bookkeeping of a field build.
struct FieldDiagnostics {
  double max_excursion = 0.0;  // largest distance outside [0,1] before clamping
  std::size_t clamped = 0;     // coordinates that needed clamping
};

/// (x, y) + raw_map(x, y; d) - defect(x, y), clamped to [0,1]^2. The
/// defect is read at the pixel of (x, y).
Point2 corrected_map(double x, double y, const IntegralSet& tables, const DefectField& defect,
                     FieldDiagnostics* diagnostics = nullptr);

/// corrected_map at every pixel coordinate 2^-k (i, j).
DeformationField build_field(const IntegralSet& tables, const DefectField& defect,
                             FieldDiagnostics* diagnostics = nullptr);

/// Bilinear interpolation of the per-pixel targets. Exact at pixel
/// coordinates; the band between the last pixel and the domain edge uses the
/// last cell one-sidedly. The result is clamped to [0,1]^2.
Point2 interpolate(const DeformationField& field, Point2 p);

/// Order and smoothness witness of a field: target x must not decrease along
/// rows and target y must not decrease along columns.
struct FieldOrderReport {
  std::size_t row_violations = 0;
  std::size_t column_violations = 0;
  double max_adjacent_jump = 0.0;

  bool monotone() const noexcept { return row_violations == 0 && column_violations == 0; }
};

FieldOrderReport check_field_order(const DeformationField& field);

}  // namespace inim
