#include "inim/encodings.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <unordered_map>

#include "inim/deformation.hpp"
#include "inim/parallel.hpp"

namespace inim {

FieldChain field_chain(const RegularizationRun& run, std::size_t level) {
  if (level > run.iterations()) {
    throw Error(ErrorCode::OutOfRangeLevel, "encoding level beyond the completed iterations");
  }
  FieldChain chain;
  chain.reserve(level);
  for (std::size_t t = 1; t <= level; ++t) chain.push_back(run.field(t));
  return chain;
}

Positions map_points(const FieldChain& chain, std::span<const Point2> points) {
  Positions out(points.begin(), points.end());
  const int threads = thread_count();
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(out.size());
#pragma omp parallel for num_threads(threads) schedule(static)
  for (std::ptrdiff_t s = 0; s < n; ++s) {
    Point2 p = out[static_cast<std::size_t>(s)];
    for (const auto& field : chain) p = interpolate(*field, p);
    out[static_cast<std::size_t>(s)] = p;
  }
  return out;
}

// ---- grid ----------------------------------------------------------------

int default_grid_spacing(int k) {
  const int shift = k - 10;
  const int spacing = shift >= 0 ? 32 << shift : 32 >> -shift;
  return std::max(spacing, 2);
}

GridOverlay regular_grid(int k, int spacing, int subdivision) {
  if (spacing < 2) throw Error(ErrorCode::InvalidParams, "grid spacing must be >= 2 pixels");
  if (subdivision < 1) throw Error(ErrorCode::InvalidParams, "grid subdivision must be >= 1");
  const double side = static_cast<double>(side_of(k));

  // Line offsets in pixels; the far edge is always included.
  std::vector<double> offsets;
  for (int m = 0; m * spacing < side_of(k); ++m) offsets.push_back(m * spacing);
  offsets.push_back(side);
  std::vector<double> along;
  for (std::size_t c = 0; c + 1 < offsets.size(); ++c) {
    for (int s = 0; s < subdivision; ++s) {
      along.push_back(offsets[c] + (offsets[c + 1] - offsets[c]) * s / subdivision);
    }
  }
  along.push_back(side);

  GridOverlay grid;
  grid.spacing = spacing;
  grid.subdivision = subdivision;
  for (double y : offsets) {
    Positions line;
    for (double x : along) line.push_back({x / side, y / side});
    grid.lines.push_back(std::move(line));
  }
  for (double x : offsets) {
    Positions line;
    for (double y : along) line.push_back({x / side, y / side});
    grid.lines.push_back(std::move(line));
  }
  return grid;
}

GridOverlay deform_grid(const FieldChain& chain, int k, int spacing, int subdivision) {
  GridOverlay grid = regular_grid(k, spacing, subdivision);
  for (Positions& line : grid.lines) line = map_points(chain, line);
  return grid;
}

GridOverlay deform_grid(const RegularizationRun& run, std::size_t level, int spacing,
                        int subdivision) {
  const int k = run.params().k;
  if (spacing == 0) spacing = default_grid_spacing(k);
  return deform_grid(field_chain(run, level), k, spacing, subdivision);
}

// ---- background ----------------------------------------------------------

BackgroundTexture deform_background(const DensityTexture& density, const FieldChain& chain) {
  const TextureGrid& source = density.grid;
  const int k = source.k();
  const int side = source.side();
  const double s = static_cast<double>(side);

  Positions nodes(source.pixel_count());
  for (int j = 0; j < side; ++j) {
    for (int i = 0; i < side; ++i) nodes[source.index(i, j)] = {i / s, j / s};
  }
  const Positions mapped = map_points(chain, nodes);

  TextureGrid weighted(k);
  TextureGrid weight(k);
  const auto cell = [side, s](double v, int& lo, int& hi, double& frac) {
    const double scaled = v * s;
    lo = std::clamp(static_cast<int>(std::floor(scaled)), 0, side - 1);
    hi = std::min(lo + 1, side - 1);
    frac = std::clamp(scaled - lo, 0.0, 1.0);
  };
  BackgroundTexture out;
  for (std::size_t n = 0; n < mapped.size(); ++n) {
    const double value = source.values()[n];
    int i0 = 0, i1 = 0, j0 = 0, j1 = 0;
    double fx = 0.0, fy = 0.0;
    cell(mapped[n].x, i0, i1, fx);
    cell(mapped[n].y, j0, j1, fy);
    const double w[4] = {(1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy, fx * fy};
    const int is[4] = {i0, i1, i0, i1};
    const int js[4] = {j0, j0, j1, j1};
    for (int c = 0; c < 4; ++c) {
      weighted(is[c], js[c]) += w[c] * value;
      weight(is[c], js[c]) += w[c];
    }
  }

  // Normalize, then fill empty pixels breadth-first from filled ones.
  out.values = TextureGrid(k);
  std::vector<char> valid(source.pixel_count(), 0);
  std::deque<std::size_t> queue;
  for (std::size_t n = 0; n < valid.size(); ++n) {
    const double w = weight.values()[n];
    out.painted_mass += weighted.values()[n];
    if (w > 1e-12) {
      out.values.values()[n] = weighted.values()[n] / w;
      valid[n] = 1;
      queue.push_back(n);
    }
  }
  while (!queue.empty()) {
    const std::size_t n = queue.front();
    queue.pop_front();
    const int i = static_cast<int>(n % static_cast<std::size_t>(side));
    const int j = static_cast<int>(n / static_cast<std::size_t>(side));
    const int di[4] = {1, -1, 0, 0};
    const int dj[4] = {0, 0, 1, -1};
    for (int c = 0; c < 4; ++c) {
      const int ni = i + di[c];
      const int nj = j + dj[c];
      if (ni < 0 || nj < 0 || ni >= side || nj >= side) continue;
      const std::size_t m = source.index(ni, nj);
      if (valid[m]) continue;
      valid[m] = 1;
      out.values.values()[m] = out.values.values()[n];
      queue.push_back(m);
    }
  }
  out.min_value = out.values.min();
  out.max_value = out.values.max();
  return out;
}

BackgroundTexture deform_background(const RegularizationRun& run, std::size_t level) {
  return deform_background(run.initial_density(), field_chain(run, level));
}

// ---- contours ------------------------------------------------------------

std::vector<double> default_contour_levels(const DensityTexture& density) {
  const double top = density.grid.max();
  const double base = density.d0;
  return {base + (top - base) / 16.0, base + (top - base) / 4.0, base + (top - base) / 2.0};
}

namespace {

// Edge ids: 2 * pixel index for the edge to the right neighbour, +1 for the
// edge to the neighbour below.
std::int64_t horizontal_edge(int i, int j, int side) {
  return 2 * (static_cast<std::int64_t>(j) * side + i);
}
std::int64_t vertical_edge(int i, int j, int side) { return horizontal_edge(i, j, side) + 1; }

Point2 edge_crossing(const TextureGrid& v, std::int64_t edge, double level) {
  const int side = v.side();
  const std::int64_t pixel = edge / 2;
  const int i = static_cast<int>(pixel % side);
  const int j = static_cast<int>(pixel / side);
  const int i2 = (edge % 2 == 0) ? i + 1 : i;
  const int j2 = (edge % 2 == 0) ? j : j + 1;
  const double a = v(i, j);
  const double b = v(i2, j2);
  const double t = (level - a) / (b - a);
  const double s = static_cast<double>(side);
  return {(i + t * (i2 - i)) / s, (j + t * (j2 - j)) / s};
}

std::vector<ContourLine> contours_at(const TextureGrid& v, double level) {
  const int side = v.side();
  std::vector<std::pair<std::int64_t, std::int64_t>> segments;
  for (int j = 0; j + 1 < side; ++j) {
    for (int i = 0; i + 1 < side; ++i) {
      const bool a = v(i, j) >= level;
      const bool b = v(i + 1, j) >= level;
      const bool c = v(i + 1, j + 1) >= level;
      const bool d = v(i, j + 1) >= level;
      const std::int64_t top = horizontal_edge(i, j, side);
      const std::int64_t bottom = horizontal_edge(i, j + 1, side);
      const std::int64_t left = vertical_edge(i, j, side);
      const std::int64_t right = vertical_edge(i + 1, j, side);
      if (a == c && b == d && a != b) {
        if (a) {
          segments.emplace_back(top, left);
          segments.emplace_back(right, bottom);
        } else {
          segments.emplace_back(top, right);
          segments.emplace_back(bottom, left);
        }
        continue;
      }
      std::int64_t crossed[4];
      int count = 0;
      if (a != b) crossed[count++] = top;
      if (b != c) crossed[count++] = right;
      if (c != d) crossed[count++] = bottom;
      if (d != a) crossed[count++] = left;
      if (count == 2) segments.emplace_back(crossed[0], crossed[1]);
    }
  }

  std::unordered_map<std::int64_t, std::vector<std::size_t>> at_edge;
  at_edge.reserve(segments.size() * 2);
  for (std::size_t s = 0; s < segments.size(); ++s) {
    at_edge[segments[s].first].push_back(s);
    at_edge[segments[s].second].push_back(s);
  }
  std::vector<char> used(segments.size(), 0);
  const auto next_segment = [&](std::int64_t edge) -> std::ptrdiff_t {
    for (std::size_t s : at_edge[edge]) {
      if (!used[s]) return static_cast<std::ptrdiff_t>(s);
    }
    return -1;
  };
  std::vector<ContourLine> lines;
  const auto trace = [&](std::int64_t start) {
    ContourLine line;
    line.level = level;
    line.points.push_back(edge_crossing(v, start, level));
    std::int64_t edge = start;
    for (std::ptrdiff_t s = next_segment(edge); s >= 0; s = next_segment(edge)) {
      used[static_cast<std::size_t>(s)] = 1;
      const auto& seg = segments[static_cast<std::size_t>(s)];
      edge = seg.first == edge ? seg.second : seg.first;
      line.points.push_back(edge_crossing(v, edge, level));
      if (edge == start) {
        line.closed = true;
        break;
      }
    }
    lines.push_back(std::move(line));
  };

  // Open lines start at their border ends, lowest edge id first.
  std::vector<std::int64_t> ends;
  for (const auto& [edge, list] : at_edge) {
    if (list.size() == 1) ends.push_back(edge);
  }
  std::sort(ends.begin(), ends.end());
  for (std::int64_t edge : ends) {
    if (next_segment(edge) >= 0) trace(edge);
  }
  for (std::size_t s = 0; s < segments.size(); ++s) {
    if (!used[s]) trace(segments[s].first);
  }
  return lines;
}

}  // namespace

ContourSet extract_contours(const TextureGrid& values, const std::vector<double>& levels) {
  const double lo = values.min();
  const double hi = values.max();
  ContourSet out;
  out.levels = levels;
  for (double level : levels) {
    if (!(level > lo && level < hi)) {
      throw Error(ErrorCode::LevelOutOfRange, "contour level must lie strictly between min and max");
    }
  }
  for (double level : levels) {
    std::vector<ContourLine> lines = contours_at(values, level);
    for (ContourLine& line : lines) out.lines.push_back(std::move(line));
  }
  return out;
}

ContourSet extract_contours(const DensityTexture& density, const std::vector<double>& levels) {
  return extract_contours(density.grid, levels);
}

ContourSet deform_contours(const ContourSet& contours, const FieldChain& chain) {
  ContourSet out = contours;
  for (ContourLine& line : out.lines) line.points = map_points(chain, line.points);
  return out;
}

ContourSet deform_contours(const ContourSet& contours, const RegularizationRun& run,
                           std::size_t level) {
  return deform_contours(contours, field_chain(run, level));
}

// ---- geometry ------------------------------------------------------------

bool point_in_polygon(std::span<const Point2> polygon, Point2 p) {
  bool inside = false;
  const std::size_t n = polygon.size();
  for (std::size_t a = 0, b = n - 1; a < n; b = a++) {
    const Point2& u = polygon[a];
    const Point2& w = polygon[b];
    if ((u.y > p.y) != (w.y > p.y)) {
      const double x = (w.x - u.x) * (p.y - u.y) / (w.y - u.y) + u.x;
      if (p.x < x) inside = !inside;
    }
  }
  return inside;
}

double polygon_area(std::span<const Point2> polygon) {
  double twice = 0.0;
  const std::size_t n = polygon.size();
  for (std::size_t a = 0; a < n; ++a) {
    const Point2& u = polygon[a];
    const Point2& w = polygon[(a + 1) % n];
    twice += u.x * w.y - w.x * u.y;
  }
  return 0.5 * twice;
}

// ---- serialization -------------------------------------------------------

namespace {

nlohmann::ordered_json points_json(const Positions& points) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const Point2& p : points) arr.push_back({p.x, p.y});
  return arr;
}

}  // namespace

nlohmann::ordered_json to_json(const GridOverlay& grid) {
  nlohmann::ordered_json j;
  j["kind"] = "grid";
  j["spacing"] = grid.spacing;
  j["subdivision"] = grid.subdivision;
  j["lines"] = nlohmann::ordered_json::array();
  for (const Positions& line : grid.lines) j["lines"].push_back(points_json(line));
  return j;
}

nlohmann::ordered_json to_json(const ContourSet& contours) {
  nlohmann::ordered_json j;
  j["kind"] = "contours";
  j["levels"] = contours.levels;
  j["lines"] = nlohmann::ordered_json::array();
  for (const ContourLine& line : contours.lines) {
    nlohmann::ordered_json l;
    l["level"] = line.level;
    l["closed"] = line.closed;
    l["points"] = points_json(line.points);
    j["lines"].push_back(std::move(l));
  }
  return j;
}

nlohmann::ordered_json to_json(const BackgroundTexture& background) {
  nlohmann::ordered_json j;
  j["kind"] = "density";
  j["k"] = background.values.k();
  j["side"] = background.values.side();
  j["min"] = background.min_value;
  j["max"] = background.max_value;
  j["painted_mass"] = background.painted_mass;
  j["transfer"] = background.transfer;
  const auto values = background.values.values();
  j["values"] = std::vector<double>(values.begin(), values.end());
  return j;
}

}  // namespace inim
