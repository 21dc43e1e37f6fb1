#include "inim/integral_images.hpp"

#include <algorithm>
#include <utility>
#include <vector>

#include "inim/parallel.hpp"

namespace inim {
namespace {

// Doubling scan of every line of `in` running in direction (di, dj), written
// to `out`. Line positions are p0 + m * (di, dj); after the call
//   inclusive: out(p_m) = sum_{m' <= m} in(p_m')
//   exclusive: out(p_m) = sum_{m' <  m} in(p_m')
// Every line takes Hillis-Steele steps (offset 2^s, s < k), each reading only
// values of the previous step, so a 2^k-side grid takes exactly k steps.
// Lines are independent and run in parallel; the step loop is the barrier.
int line_scan(const TextureGrid& in, TextureGrid& out, int di, int dj, bool exclusive) {
  const int side = in.side();
  int steps = 0;
  for (int offset = 1; offset < side; offset <<= 1) ++steps;

  // Ping-pong between `buf` and `aux` so each step is a plain vector add.
  const auto scan = [side, exclusive](double* buf, double* aux, int len) {
    double* cur = buf;
    double* nxt = aux;
    for (int offset = 1; offset < side; offset <<= 1) {
      const int head = std::min(offset, len);
      std::copy(cur, cur + head, nxt);
      for (int m = head; m < len; ++m) nxt[m] = cur[m] + cur[m - offset];
      std::swap(cur, nxt);
    }
    if (exclusive && len > 0) {
      std::copy(cur, cur + len - 1, nxt + 1);
      nxt[0] = 0.0;
      std::swap(cur, nxt);
    }
    if (cur != buf) std::copy(cur, cur + len, buf);
  };
  const int threads = thread_count();

  if (dj == 0) {
    // Rows: contiguous, reversed for di < 0.
#pragma omp parallel num_threads(threads)
    {
      std::vector<double> buf(static_cast<std::size_t>(side));
      std::vector<double> aux(static_cast<std::size_t>(side));
#pragma omp for schedule(static)
      for (int j = 0; j < side; ++j) {
        const double* src = in.row(j);
        double* dst = out.row(j);
        if (di > 0) {
          std::copy(src, src + side, buf.begin());
          scan(buf.data(), aux.data(), side);
          std::copy(buf.begin(), buf.end(), dst);
        } else {
          std::reverse_copy(src, src + side, buf.begin());
          scan(buf.data(), aux.data(), side);
          std::reverse_copy(buf.begin(), buf.end(), dst);
        }
      }
    }
    return steps;
  }

  if (di == 0) {
    // Columns, scanned a block of adjacent columns at a time.
    const int width = std::min(16, side);
    const int blocks = side / width;
#pragma omp parallel num_threads(threads)
    {
      std::vector<double> tile(static_cast<std::size_t>(side) * static_cast<std::size_t>(width));
      const auto line_row = [&](int m) { return dj > 0 ? m : side - 1 - m; };
      const auto tile_row = [&](int m) { return tile.data() + static_cast<std::ptrdiff_t>(m) * width; };
#pragma omp for schedule(static)
      for (int b = 0; b < blocks; ++b) {
        const int i0 = b * width;
        for (int m = 0; m < side; ++m) {
          const double* src = in.row(line_row(m)) + i0;
          std::copy(src, src + width, tile_row(m));
        }
        for (int offset = 1; offset < side; offset <<= 1) {
          for (int m = side - 1; m >= offset; --m) {
            double* row = tile_row(m);
            const double* prev = tile_row(m - offset);
            for (int c = 0; c < width; ++c) row[c] += prev[c];
          }
        }
        if (exclusive) {
          for (int m = side - 1; m >= 1; --m) std::copy_n(tile_row(m - 1), width, tile_row(m));
          std::fill_n(tile_row(0), width, 0.0);
        }
        for (int m = 0; m < side; ++m) std::copy_n(tile_row(m), width, out.row(line_row(m)) + i0);
      }
    }
    return steps;
  }

  // Diagonals: whole-row ping-pong steps, next(i, j) = cur(i, j) +
  // cur(i - di * o, j - dj * o), which vectorizes along rows.
  TextureGrid tmp(in.k());
  out = in;
  TextureGrid* cur = &out;
  TextureGrid* next = &tmp;
  for (int offset = 1; offset < side; offset <<= 1) {
#pragma omp parallel for num_threads(threads) schedule(static)
    for (int j = 0; j < side; ++j) {
      const double* src = cur->row(j);
      double* dst = next->row(j);
      const int jp = j - dj * offset;
      if (jp < 0 || jp >= side) {
        std::copy(src, src + side, dst);
        continue;
      }
      const double* prev = cur->row(jp);
      if (di > 0) {
        std::copy(src, src + offset, dst);
        for (int i = offset; i < side; ++i) dst[i] = src[i] + prev[i - offset];
      } else {
        for (int i = 0; i < side - offset; ++i) dst[i] = src[i] + prev[i + offset];
        std::copy(src + side - offset, src + side, dst + side - offset);
      }
    }
    std::swap(cur, next);
  }
  if (cur != &out) out = std::move(*cur);
  return steps;
}

TextureGrid scanned(const TextureGrid& in, int di, int dj, bool exclusive, int* steps = nullptr) {
  TextureGrid out(in.k());
  const int s = line_scan(in, out, di, dj, exclusive);
  if (steps != nullptr) *steps = s;
  return out;
}

void record(int* slot, int steps) {
  if (slot != nullptr) *slot = steps;
}

}  // namespace

ColumnIntegrals column_integrals(const TextureGrid& d, ScanStats* stats) {
  ColumnIntegrals cols;
  int steps = 0;
  cols.upper = scanned(d, 0, 1, false, &steps);
  cols.lower = scanned(d, 0, -1, true);
  record(stats ? &stats->column_steps : nullptr, steps);
  return cols;
}

ClassicalInims classical_inims(const ColumnIntegrals& cols, ScanStats* stats) {
  ClassicalInims out;
  int steps = 0;
  out.alpha = scanned(cols.upper, 1, 0, false, &steps);
  out.beta = scanned(cols.lower, 1, 0, false);
  out.gamma = scanned(cols.lower, -1, 0, true);
  out.delta = scanned(cols.upper, -1, 0, true);
  record(stats ? &stats->row_steps : nullptr, steps);
  return out;
}

TriangleIntegrals triangle_integrals(const ColumnIntegrals& cols, ScanStats* stats) {
  TriangleIntegrals tri;
  int steps = 0;
  tri.upper_left = scanned(cols.upper, 1, 1, false, &steps);
  tri.upper_right = scanned(cols.upper, -1, 1, false);
  tri.lower_left = scanned(cols.lower, 1, -1, false);
  tri.lower_right = scanned(cols.lower, -1, -1, false);
  record(stats ? &stats->diagonal_steps : nullptr, steps);
  return tri;
}

TiltedInims tilted_inims(const TriangleIntegrals& tri, const ColumnIntegrals& cols) {
  const int k = cols.upper.k();
  const int side = cols.upper.side();

  // Mass strictly left / strictly right of each column.
  std::vector<double> left(static_cast<std::size_t>(side), 0.0);
  std::vector<double> right(static_cast<std::size_t>(side), 0.0);
  const double* totals = cols.upper.row(side - 1);
  for (int i = 1; i < side; ++i) {
    left[static_cast<std::size_t>(i)] = left[static_cast<std::size_t>(i - 1)] + totals[i - 1];
  }
  for (int i = side - 2; i >= 0; --i) {
    right[static_cast<std::size_t>(i)] = right[static_cast<std::size_t>(i + 1)] + totals[i + 1];
  }

  TiltedInims out{TextureGrid(k), TextureGrid(k), TextureGrid(k), TextureGrid(k)};
  const int threads = thread_count();
#pragma omp parallel for num_threads(threads) schedule(static)
  for (int j = 0; j < side; ++j) {
    const double* ul = tri.upper_left.row(j);
    const double* ur = tri.upper_right.row(j);
    const double* ll = tri.lower_left.row(j);
    const double* lr = tri.lower_right.row(j);
    const double* up = cols.upper.row(j);
    const double* lo = cols.lower.row(j);
    // Triangles on the neighbouring rows; absent rows contribute nothing.
    const double* ul_above = j > 0 ? tri.upper_left.row(j - 1) : nullptr;
    const double* ur_above = j > 0 ? tri.upper_right.row(j - 1) : nullptr;
    const double* ll_below = j + 1 < side ? tri.lower_left.row(j + 1) : nullptr;
    const double* lr_below = j + 1 < side ? tri.lower_right.row(j + 1) : nullptr;
    double* at = out.alpha_t.row(j);
    double* bt = out.beta_t.row(j);
    double* gt = out.gamma_t.row(j);
    double* dt = out.delta_t.row(j);
    for (int i = 0; i < side; ++i) {
      at[i] = ul[i] + ur[i] - up[i];
      gt[i] = ll[i] + lr[i] - lo[i];
      double b = left[static_cast<std::size_t>(i)];
      double d = right[static_cast<std::size_t>(i)];
      if (i > 0) {
        if (ul_above) b -= ul_above[i - 1];
        if (ll_below) b -= ll_below[i - 1];
      }
      if (i + 1 < side) {
        if (ur_above) d -= ur_above[i + 1];
        if (lr_below) d -= lr_below[i + 1];
      }
      bt[i] = b;
      dt[i] = d;
    }
  }
  return out;
}

IntegralSet build_integral_set(const TextureGrid& d, ScanStats* stats) {
  const ColumnIntegrals cols = column_integrals(d, stats);
  ClassicalInims classical = classical_inims(cols, stats);
  TiltedInims tilted = tilted_inims(triangle_integrals(cols, stats), cols);

  IntegralSet set;
  set.total = classical.alpha(d.side() - 1, d.side() - 1);
  set.alpha = std::move(classical.alpha);
  set.beta = std::move(classical.beta);
  set.gamma = std::move(classical.gamma);
  set.delta = std::move(classical.delta);
  set.alpha_t = std::move(tilted.alpha_t);
  set.beta_t = std::move(tilted.beta_t);
  set.gamma_t = std::move(tilted.gamma_t);
  set.delta_t = std::move(tilted.delta_t);
  return set;
}

}  // namespace inim
