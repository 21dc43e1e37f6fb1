#pragma once

#include <span>
#include <vector>

#include "inim/core.hpp"

namespace inim {

/// Nearest-pixel sample counts on a 2^k grid. The grid sums to n exactly.
TextureGrid accumulate(std::span<const Point2> positions, int k);
inline TextureGrid accumulate(const ScatterDataset& dataset, int k) {
  return accumulate(dataset.samples, k);
}

/// Normalized 1D Gaussian taps for kernel size r: sigma = r / 2, truncated
/// at radius 3r. Element m holds the weight at offset m - 3r.
std::vector<double> gaussian_taps(int r);

/// Maps an out-of-range index back into [0, n) by mirror reflection about
/// the pixel edges (period 2n).
int reflect_index(int index, int n);

/// Separable Gaussian smoothing: horizontal pass then vertical pass. Kernel
/// mass falling outside the domain is folded back by reflection, so the
/// operator preserves both constants and total mass.
TextureGrid gaussian_smooth(const TextureGrid& grid, int r);

/// Background density actually used for the given params and sample count.
double background_density(const RegularizationParams& params, std::size_t n);

/// gaussian_smooth(accumulate(...)) + d0.
DensityTexture build_density(std::span<const Point2> positions,
                             const RegularizationParams& params);
inline DensityTexture build_density(const ScatterDataset& dataset,
                                    const RegularizationParams& params) {
  return build_density(dataset.samples, params);
}

}  // namespace inim
