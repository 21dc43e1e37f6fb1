#pragma once

// Integral tables of a density texture, computed with log-step doubling
// scans: column integrals first, then the classical tables by accumulating
// column integrals along rows, the four triangle integrals by accumulating
// column integrals along the diagonals, and finally the tilted tables by
// arithmetic on triangles and columns.
//
// Every scan over a 2^k-side texture finishes in exactly k doubling steps.
// Each step is parallel over rows with a barrier between steps, so results do
// not depend on the worker count.

#include "inim/core.hpp"

namespace inim {

/// upper(i, j) = sum_{j' <= j} d(i, j'); lower(i, j) = sum_{j' > j} d(i, j').
struct ColumnIntegrals {
  TextureGrid upper;
  TextureGrid lower;
};

/// Column integrals accumulated along the diagonals through each pixel:
///   upper_left(i, j)  = sum_{m>=0} upper(i - m, j - m)
///   upper_right(i, j) = sum_{m>=0} upper(i + m, j - m)
///   lower_left(i, j)  = sum_{m>=0} lower(i - m, j + m)
///   lower_right(i, j) = sum_{m>=0} lower(i + m, j + m)
struct TriangleIntegrals {
  TextureGrid upper_left;
  TextureGrid upper_right;
  TextureGrid lower_left;
  TextureGrid lower_right;
};

struct ClassicalInims {
  TextureGrid alpha, beta, gamma, delta;
};

struct TiltedInims {
  TextureGrid alpha_t, beta_t, gamma_t, delta_t;
};

/// Doubling steps performed per stage by the most recent calls that were
/// handed this object.
struct ScanStats {
  int column_steps = 0;
  int row_steps = 0;
  int diagonal_steps = 0;
};

ColumnIntegrals column_integrals(const TextureGrid& d, ScanStats* stats = nullptr);

ClassicalInims classical_inims(const ColumnIntegrals& cols, ScanStats* stats = nullptr);

TriangleIntegrals triangle_integrals(const ColumnIntegrals& cols, ScanStats* stats = nullptr);

/// alpha_t = upper_left + upper_right - upper and gamma_t likewise from the
/// lower triangles; beta_t and delta_t are the left and right half-planes
/// minus the two triangles that bound the side wedge.
TiltedInims tilted_inims(const TriangleIntegrals& tri, const ColumnIntegrals& cols);

IntegralSet build_integral_set(const TextureGrid& d, ScanStats* stats = nullptr);
inline IntegralSet build_integral_set(const DensityTexture& d, ScanStats* stats = nullptr) {
  return build_integral_set(d.grid, stats);
}

}  // namespace inim
