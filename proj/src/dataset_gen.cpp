#include "inim/dataset_gen.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

namespace inim {

const char* to_string(GenKind kind) {
  switch (kind) {
    case GenKind::GaussianMixture: return "gaussian-mixture";
    case GenKind::Diagonal: return "diagonal";
    case GenKind::FixedFourCluster: return "four-cluster";
    case GenKind::LabeledRegions: return "labeled-regions";
  }
  return "gaussian-mixture";
}

std::optional<GenKind> parse_gen_kind(const std::string& name) {
  if (name == "gaussian-mixture" || name == "mixture") return GenKind::GaussianMixture;
  if (name == "diagonal") return GenKind::Diagonal;
  if (name == "four-cluster" || name == "fixed-four-cluster") return GenKind::FixedFourCluster;
  if (name == "labeled-regions" || name == "regions") return GenKind::LabeledRegions;
  return std::nullopt;
}

void GenSpec::validate() const {
  const auto fail = [](const char* what) { throw Error(ErrorCode::InvalidSpec, what); };
  if (min_clusters < 1 || max_clusters < min_clusters) fail("cluster count range is empty");
  if (!(min_sigma > 0.0) || max_sigma < min_sigma) fail("sigma range is invalid");
  if (!(margin >= 0.0) || margin >= 0.5) fail("margin must lie in [0, 0.5)");
  if (!(band > 0.0) || band > 1.0) fail("band must lie in (0, 1]");
  if (kind != GenKind::FixedFourCluster && total_n == 0) fail("total_n must be positive");
}

Rng::Rng(std::uint64_t seed) : engine_(seed) {}

std::uint64_t Rng::next_u64() { return engine_(); }

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

std::uint64_t Rng::below(std::uint64_t bound) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t draw = engine_();
  while (draw >= limit) draw = engine_();
  return draw % bound;
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // Box-Muller on (0, 1] to keep the logarithm finite.
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

std::uint64_t mix_seed(std::uint64_t value) {
  std::uint64_t z = value + 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace {

struct Cluster {
  Point2 center;
  double sigma_x;
  double sigma_y;
  std::size_t count;
};

Point2 draw_inside(Rng& rng, const Cluster& c) {
  for (;;) {
    const Point2 p{c.center.x + c.sigma_x * rng.normal(), c.center.y + c.sigma_y * rng.normal()};
    if (p.x >= 0.0 && p.x <= 1.0 && p.y >= 0.0 && p.y <= 1.0) return p;
  }
}

// Splits total into counts proportional to weights (largest remainder).
std::vector<std::size_t> apportion(std::size_t total, const std::vector<double>& weights) {
  double sum = 0.0;
  for (double w : weights) sum += w;
  std::vector<std::size_t> counts(weights.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < weights.size(); ++c) {
    const double exact = static_cast<double>(total) * weights[c] / sum;
    counts[c] = static_cast<std::size_t>(std::floor(exact));
    assigned += counts[c];
    remainders.emplace_back(exact - std::floor(exact), c);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t m = 0; assigned < total; ++m, ++assigned) {
    ++counts[remainders[m % remainders.size()].second];
  }
  return counts;
}

ScatterDataset sample_clusters(Rng& rng, const std::vector<Cluster>& clusters) {
  ScatterDataset out;
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    for (std::size_t s = 0; s < clusters[c].count; ++s) {
      out.samples.push_back(draw_inside(rng, clusters[c]));
      out.labels.push_back(static_cast<std::int32_t>(c));
    }
    out.label_names.push_back("cluster" + std::to_string(c));
  }
  return out;
}

ScatterDataset gaussian_mixture(const GenSpec& spec, Rng& rng) {
  const int span = spec.max_clusters - spec.min_clusters + 1;
  const int count = spec.min_clusters + static_cast<int>(rng.below(static_cast<std::uint64_t>(span)));
  std::vector<double> weights;
  std::vector<Cluster> clusters;
  for (int c = 0; c < count; ++c) {
    Cluster cluster;
    cluster.center = {rng.uniform(spec.margin, 1.0 - spec.margin),
                      rng.uniform(spec.margin, 1.0 - spec.margin)};
    const double sigma = rng.uniform(spec.min_sigma, spec.max_sigma);
    cluster.sigma_x = sigma;
    cluster.sigma_y = sigma;
    clusters.push_back(cluster);
    weights.push_back(rng.uniform(0.2, 1.0));
  }
  const std::vector<std::size_t> counts = apportion(spec.total_n, weights);
  for (std::size_t c = 0; c < clusters.size(); ++c) clusters[c].count = counts[c];
  return sample_clusters(rng, clusters);
}

ScatterDataset four_clusters(const GenSpec& spec, Rng& rng) {
  const std::size_t scale = spec.desk_scale ? 1000 : 100000;
  const std::array<Cluster, 4> clusters{{
      {{0.30, 0.30}, 0.060, 0.060, 4 * scale},
      {{0.70, 0.32}, 0.055, 0.050, 3 * scale},
      {{0.32, 0.70}, 0.050, 0.055, 2 * scale},
      {{0.70, 0.70}, 0.040, 0.040, 1 * scale},
  }};
  return sample_clusters(rng, {clusters.begin(), clusters.end()});
}

ScatterDataset diagonal(const GenSpec& spec, Rng& rng) {
  ScatterDataset out;
  out.samples.reserve(spec.total_n);
  while (out.samples.size() < spec.total_n) {
    const double x = rng.uniform();
    const double y = x + rng.uniform(-spec.band, spec.band);
    if (y >= 0.0 && y <= 1.0) out.samples.push_back({x, y});
  }
  return out;
}

// Three clusters with a selected region of a different shape inside each;
// label 0 marks unselected samples.
ScatterDataset labeled_regions(const GenSpec& spec, Rng& rng) {
  const std::size_t per_cluster = spec.total_n / 3;
  const std::array<Cluster, 3> clusters{{
      {{0.28, 0.35}, 0.09, 0.07, per_cluster},
      {{0.70, 0.30}, 0.07, 0.09, per_cluster},
      {{0.50, 0.74}, 0.10, 0.06, spec.total_n - 2 * per_cluster},
  }};
  ScatterDataset out;
  out.label_names = {"unselected", "disc", "rectangle", "triangle"};
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    for (std::size_t s = 0; s < clusters[c].count; ++s) {
      const Point2 p = draw_inside(rng, clusters[c]);
      const Point2 d = p - clusters[c].center;
      std::int32_t label = 0;
      if (c == 0 && d.x * d.x + d.y * d.y < 0.04 * 0.04) label = 1;
      if (c == 1 && std::abs(d.x) < 0.02 && std::abs(d.y) < 0.06) label = 2;
      if (c == 2 && d.y > -0.03 && d.y < 0.04 && std::abs(d.x) < 0.5 * (0.04 - d.y)) label = 3;
      out.samples.push_back(p);
      out.labels.push_back(label);
    }
  }
  return out;
}

}  // namespace

ScatterDataset generate(const GenSpec& spec) {
  spec.validate();
  Rng rng(mix_seed(spec.seed));
  switch (spec.kind) {
    case GenKind::GaussianMixture: return gaussian_mixture(spec, rng);
    case GenKind::Diagonal: return diagonal(spec, rng);
    case GenKind::FixedFourCluster: return four_clusters(spec, rng);
    case GenKind::LabeledRegions: return labeled_regions(spec, rng);
  }
  throw Error(ErrorCode::InvalidSpec, "unknown generator kind");
}

std::vector<std::size_t> suite_sizes(bool desk_scale) {
  std::vector<std::size_t> sizes;
  const std::size_t step = desk_scale ? 2500 : 250000;
  for (std::size_t m = 1; m <= 12; ++m) sizes.push_back(m * step);
  return sizes;
}

std::vector<GenSpec> suite_specs(std::size_t count, std::uint64_t seed, bool desk_scale) {
  const std::vector<std::size_t> sizes = suite_sizes(desk_scale);
  std::vector<GenSpec> specs;
  specs.reserve(count);
  for (std::size_t idx = 0; idx < count; ++idx) {
    GenSpec spec;
    spec.kind = GenKind::GaussianMixture;
    spec.seed = mix_seed(seed ^ mix_seed(idx));
    spec.total_n = sizes[idx % sizes.size()];
    spec.desk_scale = desk_scale;
    specs.push_back(spec);
  }
  return specs;
}

std::vector<ScatterDataset> generate_suite(std::size_t count, std::uint64_t seed, bool desk_scale) {
  std::vector<ScatterDataset> out;
  out.reserve(count);
  for (const GenSpec& spec : suite_specs(count, seed, desk_scale)) out.push_back(generate(spec));
  return out;
}

}  // namespace inim
