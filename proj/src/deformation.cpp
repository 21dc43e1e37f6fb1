#include "inim/deformation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <mutex>

#include "inim/integral_images.hpp"
#include "inim/parallel.hpp"

namespace inim {
namespace {

std::atomic<std::size_t> g_defect_builds{0};

std::mutex& cache_mutex() {
  static std::mutex m;
  return m;
}

std::map<int, std::shared_ptr<const DefectField>>& cache() {
  static std::map<int, std::shared_ptr<const DefectField>> c;
  return c;
}

double clamp_unit(double v, FieldDiagnostics* diagnostics) {
  if (v >= 0.0 && v <= 1.0) return v;
  if (diagnostics != nullptr) {
    const double excursion = v < 0.0 ? -v : v - 1.0;
    diagnostics->max_excursion = std::max(diagnostics->max_excursion, excursion);
    ++diagnostics->clamped;
  }
  return std::clamp(v, 0.0, 1.0);
}

Point2 raw_map_at(double x, double y, int i, int j, const IntegralSet& t) {
  const AnchorSet q = anchors(x, y);
  const double a = t.alpha(i, j);
  const double b = t.beta(i, j);
  const double g = t.gamma(i, j);
  const double d = t.delta(i, j);
  const double at = t.alpha_t(i, j);
  const double bt = t.beta_t(i, j);
  const double gt = t.gamma_t(i, j);
  const double dt = t.delta_t(i, j);
  const double scale = 1.0 / (2.0 * t.total);
  const double px = a * q.q1.x + b * q.q2.x + g * q.q3.x + d * q.q4.x +
                    at * x + bt + gt * x;
  const double py = a * q.q1.y + b * q.q2.y + g * q.q3.y + d * q.q4.y +
                    at + bt * y + dt * y;
  return {px * scale, py * scale};
}

void require_mass(const IntegralSet& tables) {
  if (!(tables.total > 0.0)) {
    throw Error(ErrorCode::SingularMass, "integral set has non-positive total mass");
  }
}

}  // namespace

AnchorSet anchors(double x, double y) {
  AnchorSet q;
  if (y < x) {
    q.q1 = {1.0, 1.0 + y - x};
    q.q3 = {x - y, 0.0};
  } else {
    q.q1 = {1.0 - y + x, 1.0};
    q.q3 = {0.0, y - x};
  }
  const double s = x + y;
  if (s < 1.0) {
    q.q2 = {s, 0.0};
    q.q4 = {0.0, s};
  } else {
    q.q2 = {1.0, s - 1.0};
    q.q4 = {s - 1.0, 1.0};
  }
  return q;
}

Point2 raw_map(double x, double y, const IntegralSet& tables) {
  require_mass(tables);
  const PixelIndex p = pixel_of(x, y, tables.k());
  return raw_map_at(x, y, p.i, p.j, tables);
}

DefectField build_defect(int k) {
  const IntegralSet constant = build_integral_set(TextureGrid(k, 1.0));
  DefectField defect{DeformationField(k)};
  const int side = side_of(k);
  for (int j = 0; j < side; ++j) {
    for (int i = 0; i < side; ++i) {
      const Point2 c = coord_of({i, j}, k);
      defect.field.at(i, j) = raw_map_at(c.x, c.y, i, j, constant);
    }
  }
  g_defect_builds.fetch_add(1, std::memory_order_relaxed);
  return defect;
}

std::shared_ptr<const DefectField> cached_defect(int k) {
  std::lock_guard<std::mutex> lock(cache_mutex());
  auto& entry = cache()[k];
  if (!entry) entry = std::make_shared<const DefectField>(build_defect(k));
  return entry;
}

void clear_defect_cache() {
  std::lock_guard<std::mutex> lock(cache_mutex());
  cache().clear();
}

std::size_t defect_build_count() { return g_defect_builds.load(std::memory_order_relaxed); }

Point2 corrected_map(double x, double y, const IntegralSet& tables, const DefectField& defect,
                     FieldDiagnostics* diagnostics) {
  require_mass(tables);
  const PixelIndex p = pixel_of(x, y, tables.k());
  const Point2 raw = raw_map_at(x, y, p.i, p.j, tables);
  const Point2 base = defect.field.at(p.i, p.j);
  return {clamp_unit(x + (raw.x - base.x), diagnostics),
          clamp_unit(y + (raw.y - base.y), diagnostics)};
}

DeformationField build_field(const IntegralSet& tables, const DefectField& defect,
                             FieldDiagnostics* diagnostics) {
  require_mass(tables);
  const int k = tables.k();
  if (defect.field.k() != k) {
    throw Error(ErrorCode::InvalidParams, "defect field resolution does not match tables");
  }
  const int side = side_of(k);
  DeformationField field(k);
  const int threads = thread_count();
  std::vector<FieldDiagnostics> rows(static_cast<std::size_t>(side));
#pragma omp parallel for num_threads(threads) schedule(static)
  for (int j = 0; j < side; ++j) {
    FieldDiagnostics& local = rows[static_cast<std::size_t>(j)];
    for (int i = 0; i < side; ++i) {
      const Point2 c = coord_of({i, j}, k);
      const Point2 raw = raw_map_at(c.x, c.y, i, j, tables);
      const Point2 base = defect.field.at(i, j);
      field.at(i, j) = {clamp_unit(c.x + (raw.x - base.x), &local),
                        clamp_unit(c.y + (raw.y - base.y), &local)};
    }
  }
  if (diagnostics != nullptr) {
    for (const FieldDiagnostics& d : rows) {
      diagnostics->max_excursion = std::max(diagnostics->max_excursion, d.max_excursion);
      diagnostics->clamped += d.clamped;
    }
  }
  return field;
}

Point2 interpolate(const DeformationField& field, Point2 p) {
  const int side = field.side();
  const double s = static_cast<double>(side);
  const auto cell = [side, s](double v, int& lo, double& frac) {
    const double scaled = std::clamp(v, 0.0, 1.0) * s;
    lo = std::clamp(static_cast<int>(std::floor(scaled)), 0, side - 2);
    frac = scaled - lo;
  };
  int i0 = 0;
  int j0 = 0;
  double fx = 0.0;
  double fy = 0.0;
  cell(p.x, i0, fx);
  cell(p.y, j0, fy);
  const Point2& a = field.at(i0, j0);
  const Point2& b = field.at(i0 + 1, j0);
  const Point2& c = field.at(i0, j0 + 1);
  const Point2& d = field.at(i0 + 1, j0 + 1);
  const double w00 = (1.0 - fx) * (1.0 - fy);
  const double w10 = fx * (1.0 - fy);
  const double w01 = (1.0 - fx) * fy;
  const double w11 = fx * fy;
  const double x = w00 * a.x + w10 * b.x + w01 * c.x + w11 * d.x;
  const double y = w00 * a.y + w10 * b.y + w01 * c.y + w11 * d.y;
  return {std::clamp(x, 0.0, 1.0), std::clamp(y, 0.0, 1.0)};
}

FieldOrderReport check_field_order(const DeformationField& field) {
  FieldOrderReport report;
  const int side = field.side();
  for (int j = 0; j < side; ++j) {
    for (int i = 0; i < side; ++i) {
      const Point2& here = field.at(i, j);
      if (i + 1 < side) {
        const Point2& next = field.at(i + 1, j);
        if (next.x < here.x) ++report.row_violations;
        report.max_adjacent_jump =
            std::max(report.max_adjacent_jump, std::hypot(next.x - here.x, next.y - here.y));
      }
      if (j + 1 < side) {
        const Point2& next = field.at(i, j + 1);
        if (next.y < here.y) ++report.column_violations;
        report.max_adjacent_jump =
            std::max(report.max_adjacent_jump, std::hypot(next.x - here.x, next.y - here.y));
      }
    }
  }
  return report;
}

}  // namespace inim
