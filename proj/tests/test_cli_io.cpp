#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "inim/cli.hpp"
#include "inim/cli_io.hpp"
#include "inim/dataset_gen.hpp"

using namespace inim;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("inim_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int cli(std::vector<std::string> args, std::string* out_text = nullptr) {
  args.insert(args.begin(), "inim");
  std::vector<const char*> argv;
  for (const std::string& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  if (out_text) *out_text = out.str();
  return code;
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::Io;
}

}  // namespace

TEST(Csv, MinimalFile) {
  const ScatterDataset ds = parse_csv_text("x,y\n0.1,0.2\n");
  ASSERT_EQ(ds.size(), 1u);
  EXPECT_FALSE(ds.has_labels());
}

TEST(Csv, LabelsBecomeClasses) {
  const ScatterDataset ds = parse_csv_text("x,y,label\n0.1,0.2,A\n0.3,0.4,B\n0.5,0.5,A\n");
  ASSERT_EQ(ds.size(), 3u);
  EXPECT_EQ(ds.class_count(), 2);
  EXPECT_EQ(ds.labels, (std::vector<std::int32_t>{0, 1, 0}));
  EXPECT_EQ(ds.label_names, (std::vector<std::string>{"A", "B"}));
}

TEST(Csv, ShortRowReportsLine) {
  try {
    parse_csv_text("x,y\n0.1\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ParseError);
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
  EXPECT_EQ(code_of([] { parse_csv_text("x,y\n0.1,0.2\n0.3,abc\n"); }), ErrorCode::ParseError);
  EXPECT_EQ(code_of([] { parse_csv_text(""); }), ErrorCode::ParseError);
}

TEST(Csv, RoundTripKeepsFullPrecision) {
  ScatterDataset ds = generate({.kind = GenKind::GaussianMixture, .seed = 3, .total_n = 500});
  const fs::path dir = scratch_dir("csv");
  save_csv(ds, dir / "a.csv");
  const ScatterDataset back = load_csv(dir / "a.csv", {.only_if_out_of_range = true});
  EXPECT_EQ(back.samples, ds.samples);
  EXPECT_EQ(back.labels, ds.labels);
  EXPECT_EQ(code_of([&] { load_csv(dir / "missing.csv"); }), ErrorCode::Io);
}

TEST(FieldDump, SizeFollowsLayout) {
  const fs::path dir = scratch_dir("field");
  export_field(DeformationField::identity(2), 3, dir / "f.bin");
  EXPECT_EQ(fs::file_size(dir / "f.bin"), 16u + 2 * 16 * 4);
  const std::string bytes = slurp(dir / "f.bin");
  EXPECT_EQ(bytes.substr(0, 8), std::string("INIMFLD\0", 8));
  EXPECT_EQ(static_cast<unsigned char>(bytes[8]), 2);
  EXPECT_EQ(static_cast<unsigned char>(bytes[12]), 3);
}

TEST(FieldDump, RoundTripWithinFloatPrecision) {
  const fs::path dir = scratch_dir("field_rt");
  DeformationField f = DeformationField::identity(5);
  f.at(3, 4) = {0.123456789, 0.987654321};
  export_field(f, 7, dir / "f.bin");
  const FieldDump back = read_field(dir / "f.bin");
  EXPECT_EQ(back.iteration, 7u);
  ASSERT_EQ(back.field.k(), 5);
  for (std::size_t n = 0; n < f.pixel_count(); ++n) {
    EXPECT_NEAR(back.field.targets()[n].x, f.targets()[n].x, 6e-8);
    EXPECT_NEAR(back.field.targets()[n].y, f.targets()[n].y, 6e-8);
  }
}

TEST(FieldDump, BadFilesAreRejected) {
  const fs::path dir = scratch_dir("field_bad");
  export_field(DeformationField::identity(2), 0, dir / "good.bin");
  std::string bytes = slurp(dir / "good.bin");
  bytes[0] = 'X';
  std::ofstream(dir / "magic.bin", std::ios::binary) << bytes;
  EXPECT_EQ(code_of([&] { read_field(dir / "magic.bin"); }), ErrorCode::FormatError);
  std::ofstream(dir / "short.bin", std::ios::binary) << slurp(dir / "good.bin").substr(0, 100);
  EXPECT_EQ(code_of([&] { read_field(dir / "short.bin"); }), ErrorCode::FormatError);
  EXPECT_EQ(code_of([&] { read_field(dir / "none.bin"); }), ErrorCode::Io);
}

TEST(Render, EmptyDatasetIsBackgroundOnly) {
  const Image img = render_frame({}, {});
  ASSERT_EQ(img.width, 512);
  ASSERT_EQ(img.height, 512);
  for (std::uint8_t v : img.rgb) EXPECT_EQ(v, 255);
}

TEST(Render, CentredSampleSetsCentrePixelBlock) {
  const Image dot = render_frame({{0.5, 0.5}}, {});
  std::size_t set = 0;
  for (int y = 0; y < 512; ++y) {
    for (int x = 0; x < 512; ++x) {
      if (!(dot.at(x, y) == Rgb{255, 255, 255})) {
        ++set;
        EXPECT_EQ(x, 256);
        EXPECT_EQ(y, 256);
      }
    }
  }
  EXPECT_EQ(set, 1u);
  EXPECT_EQ(dot.at(256, 256), palette_color(-1));

  const Image block = render_frame({{0.5, 0.5}}, {2}, {}, {.point_radius = 2});
  std::size_t coloured = 0;
  for (int y = 0; y < 512; ++y) {
    for (int x = 0; x < 512; ++x) {
      if (block.at(x, y) == palette_color(2)) {
        ++coloured;
        EXPECT_LE(std::abs(x - 256), 2);
        EXPECT_LE(std::abs(y - 256), 2);
      }
    }
  }
  EXPECT_EQ(coloured, 25u);
}

TEST(Render, PngRoundTrip) {
  const ScatterDataset ds = generate({.kind = GenKind::FixedFourCluster, .seed = 2, .desk_scale = true});
  const Image img = render_frame(ds.samples, ds.labels, {}, {.size = 200});
  const std::vector<std::uint8_t> png = encode_png(img);
  EXPECT_EQ(png, encode_png(img));
  const Image back = decode_png(png);
  EXPECT_EQ(back.width, 200);
  EXPECT_EQ(back.rgb, img.rgb);
  EXPECT_EQ(code_of([] { decode_png({1, 2, 3}); }), ErrorCode::FormatError);
}

TEST(Render, GoldenFourClusterFrame) {
  const fs::path dir = scratch_dir("golden");
  ASSERT_EQ(cli({"run", "--gen", "four-cluster", "--desk-scale", "--seed", "1", "--iters", "0", "--k", "8",
                 "--image-size", "256", "--out", dir.string()}),
            0);
  const fs::path golden = fs::path(INIM_TEST_DATA_DIR) / "four_cluster_iter0_256.png";
  EXPECT_EQ(read_png(dir / "frame_000.png").rgb, read_png(golden).rgb);
}

TEST(Render, PaletteIsDistinct) {
  for (int a = 0; a < 10; ++a) {
    for (int b = a + 1; b < 10; ++b) EXPECT_FALSE(palette_color(a) == palette_color(b));
  }
  EXPECT_EQ(image_pixel(0.0, 512), 0);
  EXPECT_EQ(image_pixel(1.0, 512), 511);
  EXPECT_EQ(image_pixel(0.5, 512), 256);
}

TEST(MetricsFile, RoundTripWithoutWallTime) {
  const fs::path dir = scratch_dir("metrics");
  std::vector<MetricRecord> records(3);
  for (std::size_t t = 0; t < 3; ++t) {
    records[t].iteration = t;
    records[t].binned_stddev = 1.0 / (t + 1.0);
    records[t].wall_ms = 5.0 + t;
  }
  write_metrics_jsonl(records, dir / "m.jsonl");
  EXPECT_EQ(slurp(dir / "m.jsonl").find("wall_ms"), std::string::npos);
  const auto back = read_metrics_jsonl(dir / "m.jsonl");
  ASSERT_EQ(back.size(), 3u);
  EXPECT_EQ(back[2].binned_stddev, 1.0 / 3.0);
  write_timings_jsonl(records, dir / "t.jsonl");
  EXPECT_NE(slurp(dir / "t.jsonl").find("wall_ms"), std::string::npos);
}

TEST(Cli, RunWritesFramesAndMetrics) {
  const fs::path dir = scratch_dir("cli_run");
  ASSERT_EQ(cli({"run", "--gen", "four-cluster", "--desk-scale", "--iters", "3", "--k", "7", "--encodings",
                 "grid,density,contours", "--export", "frames,metrics,fields,encodings", "--image-size", "128",
                 "--out", dir.string()}),
            0);
  for (const char* name : {"frame_000.png", "frame_003.png", "metrics.jsonl", "field_001.bin", "field_003.bin",
                           "positions_final.csv", "encoding_grid.json", "encoding_contours.json",
                           "encoding_density.json"}) {
    EXPECT_TRUE(fs::exists(dir / name)) << name;
  }
  EXPECT_FALSE(fs::exists(dir / "timings.jsonl"));
  const auto metrics = read_metrics_jsonl(dir / "metrics.jsonl");
  ASSERT_EQ(metrics.size(), 4u);
  EXPECT_LT(metrics.back().binned_stddev, metrics.front().binned_stddev);
  EXPECT_EQ(read_field(dir / "field_002.bin").iteration, 2u);
}

TEST(Cli, InvalidArgumentsExitTwo) {
  const fs::path dir = scratch_dir("cli_bad");
  EXPECT_EQ(cli({"run", "--gen", "four-cluster", "--iters", "-1", "--out", dir.string()}), kExitConfig);
  EXPECT_EQ(cli({"run", "--gen", "four-cluster", "--k", "3", "--out", dir.string()}), kExitConfig);
  EXPECT_EQ(cli({"run", "--gen", "spiral", "--out", dir.string()}), kExitConfig);
  EXPECT_EQ(cli({"frobnicate"}), kExitConfig);
  EXPECT_EQ(cli({"run", "--input", (dir / "missing.csv").string(), "--out", dir.string()}), kExitRuntime);
}

TEST(Cli, MetricsCommandPrintsJson) {
  const fs::path dir = scratch_dir("cli_metrics");
  ASSERT_EQ(cli({"generate", "--gen", "gaussian-mixture", "--n", "300", "--seed", "4", "--out",
                 (dir / "a.csv").string()}),
            0);
  ASSERT_EQ(cli({"run", "--input", (dir / "a.csv").string(), "--iters", "2", "--k", "7", "--export", "metrics",
                 "--out", (dir / "run").string()}),
            0);
  std::string out;
  ASSERT_EQ(cli({"metrics", "--input", (dir / "a.csv").string(), "--against",
                 (dir / "run" / "positions_final.csv").string()},
                &out),
            0);
  EXPECT_NE(out.find("trustworthiness"), std::string::npos);
  EXPECT_NE(out.find("ordering"), std::string::npos);
  std::string self;
  ASSERT_EQ(cli({"metrics", "--input", (dir / "a.csv").string(), "--against", (dir / "a.csv").string()}, &self), 0);
  EXPECT_NE(self.find("\"trustworthiness\":1.0"), std::string::npos) << self;
}

TEST(Cli, GenerateSuite) {
  const fs::path dir = scratch_dir("cli_suite");
  ASSERT_EQ(cli({"generate", "--suite", "3", "--desk-scale", "--out", dir.string()}), 0);
  EXPECT_TRUE(fs::exists(dir / "suite_000.csv"));
  EXPECT_TRUE(fs::exists(dir / "suite_002.csv"));
  EXPECT_EQ(load_csv(dir / "suite_001.csv").size(), suite_sizes(true)[1]);
}

TEST(Cli, RunsAreByteIdentical) {
  const fs::path a = scratch_dir("cli_det_a");
  const fs::path b = scratch_dir("cli_det_b");
  const std::vector<std::string> common = {"run", "--gen", "gaussian-mixture", "--n", "4000", "--seed", "11",
                                           "--iters", "3", "--k", "7", "--encodings", "grid,contours",
                                           "--image-size", "128", "--out"};
  auto args_a = common;
  args_a.push_back(a.string());
  auto args_b = common;
  args_b.push_back(b.string());
  ASSERT_EQ(cli(args_a), 0);
  ASSERT_EQ(cli(args_b), 0);
  for (const auto& entry : fs::directory_iterator(a)) {
    EXPECT_EQ(slurp(entry.path()), slurp(b / entry.path().filename())) << entry.path().filename();
  }
}
