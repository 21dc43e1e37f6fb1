#include "inim/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>

#include "inim/cli_io.hpp"
#include "inim/dataset_gen.hpp"
#include "inim/encodings.hpp"
#include "inim/metrics.hpp"
#include "inim/parallel.hpp"
#include "inim/regularizer.hpp"
#include "inim/session_service.hpp"

namespace inim {
namespace {

namespace fs = std::filesystem;

struct SourceOptions {
  std::string input;
  std::string gen;
  std::size_t n = 10000;
  std::uint64_t seed = 1;
  bool desk_scale = false;
};

struct RunOptions {
  SourceOptions source;
  int iters = 16;
  int k = 10;
  int kernel = 8;
  std::string d0 = "auto";
  std::string stop = "fixed";
  double epsilon = 1e-4;
  double time_budget_ms = 1000.0;
  std::string encodings;
  std::string out = "out";
  std::string exports = "frames,metrics";
  int image_size = 512;
  int point_radius = 0;
  bool wall_times = false;
};

std::set<std::string> split_list(const std::string& text) {
  std::set<std::string> items;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) items.insert(item);
  }
  return items;
}

void require_subset(const std::set<std::string>& items, const std::set<std::string>& allowed, const char* what) {
  for (const std::string& item : items) {
    if (!allowed.count(item)) throw Error(ErrorCode::InvalidParams, std::string("unknown ") + what + " '" + item + "'");
  }
}

void add_source_options(CLI::App* cmd, SourceOptions& o) {
  cmd->add_option("--input", o.input, "CSV file with header x,y or x,y,label");
  cmd->add_option("--gen", o.gen, "Generator: gaussian-mixture, diagonal, four-cluster, labeled-regions");
  cmd->add_option("--n", o.n, "Sample count for generated datasets")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", o.seed, "Generator seed");
  cmd->add_flag("--desk-scale", o.desk_scale, "Scale generated cluster sizes down by 100");
}

ScatterDataset load_source(const SourceOptions& o) {
  if (!o.input.empty() && !o.gen.empty()) throw Error(ErrorCode::InvalidParams, "--input and --gen are exclusive");
  if (!o.input.empty()) {
    ValidateOptions options;
    options.only_if_out_of_range = true;
    return load_csv(o.input, options);
  }
  if (o.gen.empty()) throw Error(ErrorCode::InvalidParams, "one of --input or --gen is required");
  const auto kind = parse_gen_kind(o.gen);
  if (!kind) throw Error(ErrorCode::InvalidParams, "unknown generator '" + o.gen + "'");
  GenSpec spec;
  spec.kind = *kind;
  spec.seed = o.seed;
  spec.total_n = o.n;
  spec.desk_scale = o.desk_scale;
  return generate(spec);
}

RegularizationParams params_of(const RunOptions& o) {
  RegularizationParams p;
  p.k = o.k;
  p.r = o.kernel;
  p.iterations = o.iters;
  const auto stop = parse_stop_criterion(o.stop);
  if (!stop) throw Error(ErrorCode::InvalidParams, "unknown stop criterion '" + o.stop + "'");
  p.stop = *stop;
  p.epsilon = o.epsilon;
  p.time_budget_ms = o.time_budget_ms;
  if (o.d0 != "auto") {
    p.d0_mode = BackgroundMode::Explicit;
    try {
      std::size_t used = 0;
      p.d0 = std::stod(o.d0, &used);
      if (used != o.d0.size()) throw std::invalid_argument(o.d0);
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidParams, "--d0 must be 'auto' or a number");
    }
  }
  p.validate();
  return p;
}

std::string numbered(const char* stem, std::size_t t, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%03zu%s", stem, t, ext);
  return buf;
}

int command_run(const RunOptions& o, std::ostream& out) {
  const RegularizationParams params = params_of(o);
  const std::set<std::string> encodings = split_list(o.encodings);
  const std::set<std::string> exports = split_list(o.exports);
  require_subset(encodings, {"grid", "density", "contours"}, "encoding");
  require_subset(exports, {"frames", "fields", "metrics", "encodings"}, "export");
  if (o.image_size < 1 || o.point_radius < 0) throw Error(ErrorCode::InvalidParams, "bad image settings");

  const ScatterDataset dataset = load_source(o.source);
  const fs::path dir(o.out);
  fs::create_directories(dir);

  const RegularizationRun result = run(dataset, params);
  const std::size_t last = result.iterations();

  if (exports.count("metrics")) {
    write_metrics_jsonl(result.metrics(), dir / "metrics.jsonl");
    if (o.wall_times) write_timings_jsonl(result.metrics(), dir / "timings.jsonl");
  }
  if (exports.count("fields")) {
    for (std::size_t t = 1; t <= last; ++t) {
      export_field(*result.field(t), static_cast<std::uint32_t>(t), dir / numbered("field", t, ".bin"));
    }
  }

  std::shared_ptr<const ContourSet> base_contours;
  if (encodings.count("contours")) {
    base_contours = std::make_shared<const ContourSet>(
        extract_contours(result.initial_density(), default_contour_levels(result.initial_density())));
  }
  const auto layers_at = [&](std::size_t t, BackgroundTexture& bg, ContourSet& contours, GridOverlay& grid) {
    RenderLayers layers;
    const FieldChain chain = field_chain(result, t);
    if (encodings.count("density")) {
      bg = deform_background(result.initial_density(), chain);
      layers.background = &bg;
    }
    if (base_contours) {
      contours = deform_contours(*base_contours, chain);
      layers.contours = &contours;
    }
    if (encodings.count("grid")) {
      grid = deform_grid(chain, params.k, default_grid_spacing(params.k), 8);
      layers.grid = &grid;
    }
    return layers;
  };

  if (exports.count("frames")) {
    RenderOptions ropt;
    ropt.size = o.image_size;
    ropt.point_radius = o.point_radius;
    for (std::size_t t = 0; t <= last; ++t) {
      BackgroundTexture bg;
      ContourSet contours;
      GridOverlay grid;
      const RenderLayers layers = layers_at(t, bg, contours, grid);
      write_png(render_frame(*result.frame(t), dataset.labels, layers, ropt), dir / numbered("frame", t, ".png"));
    }
  }
  ScatterDataset final_positions = dataset;
  final_positions.samples = *result.frame(last);
  save_csv(final_positions, dir / "positions_final.csv");
  if (exports.count("encodings") && !encodings.empty()) {
    BackgroundTexture bg;
    ContourSet contours;
    GridOverlay grid;
    const RenderLayers layers = layers_at(last, bg, contours, grid);
    if (layers.grid) std::ofstream(dir / "encoding_grid.json") << to_json(grid).dump() << '\n';
    if (layers.contours) std::ofstream(dir / "encoding_contours.json") << to_json(contours).dump() << '\n';
    if (layers.background) std::ofstream(dir / "encoding_density.json") << to_json(bg).dump() << '\n';
  }

  out << "samples " << dataset.size() << ", iterations " << last << ", output " << dir.string() << '\n';
  if (!result.metrics().empty()) {
    const MetricRecord& first = result.metrics().front();
    const MetricRecord& final = result.metrics().back();
    out << "binned std-dev " << first.binned_stddev << " -> " << final.binned_stddev << ", overplotting "
        << first.overplotting << " -> " << final.overplotting << '\n';
  }
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Scatterplot de-cluttering by density-equalizing domain deformation", "inim"};
  app.require_subcommand(1);

  RunOptions run_opts;
  CLI::App* run_cmd = app.add_subcommand("run", "Regularize a dataset and export frames, fields and metrics");
  add_source_options(run_cmd, run_opts.source);
  run_cmd->add_option("--iters", run_opts.iters, "Iterations")->check(CLI::NonNegativeNumber);
  run_cmd->add_option("--k", run_opts.k, "Texture resolution exponent (side 2^k)")->check(CLI::Range(6, 13));
  run_cmd->add_option("--kernel", run_opts.kernel, "Smoothing kernel size r in pixels")->check(CLI::PositiveNumber);
  run_cmd->add_option("--d0", run_opts.d0, "Background density: auto or a positive number");
  run_cmd->add_option("--stop", run_opts.stop, "Stopping criterion")->check(CLI::IsMember({"fixed", "eps", "time"}));
  run_cmd->add_option("--epsilon", run_opts.epsilon, "Displacement threshold for --stop eps");
  run_cmd->add_option("--time-budget", run_opts.time_budget_ms, "Milliseconds for --stop time");
  run_cmd->add_option("--encodings", run_opts.encodings, "Comma list of grid, density, contours");
  run_cmd->add_option("--out", run_opts.out, "Output directory");
  run_cmd->add_option("--export", run_opts.exports, "Comma list of frames, fields, metrics, encodings");
  run_cmd->add_option("--image-size", run_opts.image_size, "Frame image side in pixels");
  run_cmd->add_option("--point-radius", run_opts.point_radius, "Point square radius in pixels");
  run_cmd->add_flag("--wall-times", run_opts.wall_times, "Also write timings.jsonl");

  SourceOptions gen_opts;
  gen_opts.gen = "four-cluster";
  std::string gen_out;
  std::size_t suite = 0;
  CLI::App* gen_cmd = app.add_subcommand("generate", "Write a synthetic dataset as CSV");
  add_source_options(gen_cmd, gen_opts);
  gen_cmd->add_option("--out", gen_out, "Output CSV file, or directory with --suite")->required();
  gen_cmd->add_option("--suite", suite, "Write this many evaluation-suite datasets instead");

  std::string metrics_input;
  std::string metrics_against;
  int metrics_knn = 10;
  int metrics_k = 10;
  CLI::App* metrics_cmd = app.add_subcommand("metrics", "Compare a layout against its original");
  metrics_cmd->add_option("--input", metrics_input, "Original layout CSV")->required();
  metrics_cmd->add_option("--against", metrics_against, "Deformed layout CSV, same sample order")->required();
  metrics_cmd->add_option("--knn", metrics_knn, "Neighborhood size")->check(CLI::PositiveNumber);
  metrics_cmd->add_option("--k", metrics_k, "Grid exponent for binned metrics")->check(CLI::Range(2, 13));

  int port = 8080;
  std::string host = "127.0.0.1";
  CLI::App* serve_cmd = app.add_subcommand("serve", "Serve interactive sessions over HTTP");
  serve_cmd->add_option("--port", port, "TCP port")->check(CLI::Range(1, 65535));
  serve_cmd->add_option("--host", host, "Bind address");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }

  tune_allocator();
  try {
    if (run_cmd->parsed()) return command_run(run_opts, out);
    if (gen_cmd->parsed()) {
      if (suite > 0) {
        fs::create_directories(gen_out);
        const std::vector<GenSpec> specs = suite_specs(suite, gen_opts.seed, gen_opts.desk_scale);
        for (std::size_t i = 0; i < specs.size(); ++i) {
          save_csv(generate(specs[i]), fs::path(gen_out) / numbered("suite", i, ".csv"));
        }
        out << "wrote " << specs.size() << " datasets to " << gen_out << '\n';
      } else {
        const ScatterDataset dataset = load_source(gen_opts);
        save_csv(dataset, gen_out);
        out << "wrote " << dataset.size() << " samples to " << gen_out << '\n';
      }
      return kExitOk;
    }
    if (metrics_cmd->parsed()) {
      ValidateOptions options;
      options.only_if_out_of_range = true;
      const ScatterDataset a = load_csv(metrics_input, options);
      const ScatterDataset b = load_csv(metrics_against, options);
      if (a.size() != b.size()) throw Error(ErrorCode::InvalidParams, "layouts differ in sample count");
      MetricRecord record;
      record.binned_stddev = binned_stddev(b.samples, metrics_k);
      record.overplotting = overplotting(b.samples, metrics_k);
      record.trustworthiness = trustworthiness(a.samples, b.samples, metrics_knn);
      record.ordering = orthogonal_ordering(a.samples, b.samples);
      out << to_json_line(record) << '\n';
      return kExitOk;
    }
    if (serve_cmd->parsed()) {
      SessionService service;
      out << "listening on " << host << ':' << port << std::endl;
      if (serve(service, host, port) != 0) {
        err << "error: cannot listen on " << host << ':' << port << '\n';
        return kExitRuntime;
      }
      return kExitOk;
    }
  } catch (const Error& e) {
    err << "error: " << to_string(e.code()) << ": " << e.what() << '\n';
    const ErrorCode c = e.code();
    const bool config = c == ErrorCode::InvalidParams || c == ErrorCode::InvalidSpec || c == ErrorCode::ZeroBackground;
    return config ? kExitConfig : kExitRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitConfig;
}

}  // namespace inim
