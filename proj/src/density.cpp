#include "inim/density.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "inim/parallel.hpp"

namespace inim {

TextureGrid accumulate(std::span<const Point2> positions, int k) {
  const int side = side_of(k);
  const std::size_t pixels = static_cast<std::size_t>(side) * static_cast<std::size_t>(side);
  const int threads = thread_count();
  const std::size_t n = positions.size();

  // Integer partial grids per worker keep the reduction exact.
  std::vector<std::vector<std::uint32_t>> partial(static_cast<std::size_t>(threads));
#pragma omp parallel for num_threads(threads) schedule(static)
  for (int t = 0; t < threads; ++t) {
    auto& counts = partial[static_cast<std::size_t>(t)];
    counts.assign(pixels, 0u);
    const std::size_t begin = n * static_cast<std::size_t>(t) / static_cast<std::size_t>(threads);
    const std::size_t end = n * static_cast<std::size_t>(t + 1) / static_cast<std::size_t>(threads);
    for (std::size_t s = begin; s < end; ++s) {
      const PixelIndex p = pixel_of(positions[s], k);
      ++counts[static_cast<std::size_t>(p.j) * static_cast<std::size_t>(side) +
               static_cast<std::size_t>(p.i)];
    }
  }

  TextureGrid grid(k);
  auto values = grid.values();
  for (const auto& counts : partial) {
    for (std::size_t p = 0; p < pixels; ++p) values[p] += static_cast<double>(counts[p]);
  }
  return grid;
}

std::vector<double> gaussian_taps(int r) {
  if (r < 1) throw Error(ErrorCode::InvalidParams, "kernel size r must be >= 1");
  const int radius = 3 * r;
  const double sigma = 0.5 * static_cast<double>(r);
  std::vector<double> taps(static_cast<std::size_t>(2 * radius + 1));
  double total = 0.0;
  for (int m = -radius; m <= radius; ++m) {
    const double w = std::exp(-0.5 * (m * m) / (sigma * sigma));
    taps[static_cast<std::size_t>(m + radius)] = w;
    total += w;
  }
  for (double& w : taps) w /= total;
  return taps;
}

int reflect_index(int index, int n) {
  const int period = 2 * n;
  int m = index % period;
  if (m < 0) m += period;
  return m < n ? m : period - 1 - m;
}

namespace {

// Kept out of the OpenMP bodies so the loops see plain local bounds.
void axpy(double* __restrict dst, const double* __restrict src, double w, int n) {
  for (int x = 0; x < n; ++x) dst[x] += w * src[x];
}

// dst[x] = sum_m taps[m] * padded[x + m], accumulated tap by tap.
void accumulate_taps(double* dst, const double* padded, int n, const std::vector<double>& taps) {
  for (std::size_t m = 0; m < taps.size(); ++m) axpy(dst, padded + m, taps[m], n);
}

}  // namespace

TextureGrid gaussian_smooth(const TextureGrid& grid, int r) {
  const std::vector<double> taps = gaussian_taps(r);
  const int radius = 3 * r;
  const int side = grid.side();
  const int threads = thread_count();

  // Horizontal pass over a reflected, padded copy of each row; taps run in
  // the outer loop so the pixel loop vectorizes.
  TextureGrid horizontal(grid.k());
#pragma omp parallel num_threads(threads)
  {
    std::vector<double> padded(static_cast<std::size_t>(side + 2 * radius));
#pragma omp for schedule(static)
    for (int j = 0; j < side; ++j) {
      const double* src = grid.row(j);
      for (int x = -radius; x < side + radius; ++x) {
        padded[static_cast<std::size_t>(x + radius)] = src[reflect_index(x, side)];
      }
      accumulate_taps(horizontal.row(j), padded.data(), side, taps);
    }
  }

  // Vertical pass over blocks of columns so each inner loop runs contiguous.
  TextureGrid out(grid.k());
  constexpr int kBlock = 64;
  const int blocks = (side + kBlock - 1) / kBlock;
#pragma omp parallel for num_threads(threads) schedule(static)
  for (int b = 0; b < blocks; ++b) {
    const int i0 = b * kBlock;
    const int i1 = std::min(side, i0 + kBlock);
    for (int j = 0; j < side; ++j) {
      double* dst = out.row(j) + i0;
      for (int m = -radius; m <= radius; ++m) {
        const double* src = horizontal.row(reflect_index(j + m, side)) + i0;
        axpy(dst, src, taps[static_cast<std::size_t>(m + radius)], i1 - i0);
      }
    }
  }
  return out;
}

double background_density(const RegularizationParams& params, std::size_t n) {
  if (params.d0_mode == BackgroundMode::Explicit) {
    if (!(params.d0 > 0.0)) {
      throw Error(ErrorCode::ZeroBackground, "explicit background density must be > 0");
    }
    return params.d0;
  }
  const double pixels = std::ldexp(1.0, 2 * params.k);
  const double d0 = static_cast<double>(n) / pixels;
  if (!(d0 > 0.0)) {
    throw Error(ErrorCode::ZeroBackground,
                "automatic background density is zero for an empty dataset; set d0 explicitly");
  }
  return d0;
}

DensityTexture build_density(std::span<const Point2> positions,
                             const RegularizationParams& params) {
  const double d0 = background_density(params, positions.size());
  DensityTexture density;
  density.grid = gaussian_smooth(accumulate(positions, params.k), params.r);
  for (double& v : density.grid.values()) v += d0;
  density.r = params.r;
  density.d0 = d0;
  density.n = positions.size();
  return density;
}

}  // namespace inim
