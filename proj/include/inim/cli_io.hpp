#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "inim/core.hpp"
#include "inim/encodings.hpp"
#include "inim/metrics.hpp"

namespace inim {

// ---- CSV -----------------------------------------------------------------

/// Parses `x,y` or `x,y,label` text (header required). Labels are arbitrary
/// tokens mapped to class ids in order of first appearance. The result goes
/// through validate_dataset() with `options`. Throws Error(ParseError) with
/// the 1-based line number in the message.
ScatterDataset parse_csv(std::istream& in, const ValidateOptions& options = {});
ScatterDataset parse_csv_text(const std::string& text, const ValidateOptions& options = {});

/// Reads a file; throws Error(Io) when it cannot be opened.
ScatterDataset load_csv(const std::filesystem::path& path, const ValidateOptions& options = {});

/// Writes samples with full round-trip precision; labels are written by name
/// when names exist, otherwise as class ids.
void write_csv(std::ostream& out, const ScatterDataset& dataset);
void save_csv(const ScatterDataset& dataset, const std::filesystem::path& path);

// ---- field dumps ---------------------------------------------------------

/// "INIMFLD\0", u32 k, u32 iteration, then x,y float32 per pixel, row-major,
/// all little-endian.
void export_field(const DeformationField& field, std::uint32_t iteration,
                  const std::filesystem::path& path);

struct FieldDump {
  DeformationField field;
  std::uint32_t iteration = 0;
};

/// Throws Error(Io) or Error(FormatError).
FieldDump read_field(const std::filesystem::path& path);

// ---- raster output -------------------------------------------------------

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;  // row-major, 3 bytes per pixel

  Rgb at(int x, int y) const;
  void set(int x, int y, Rgb c);
};

struct RenderOptions {
  int size = 512;
  int point_radius = 0;  // 0 draws 1-pixel points; r draws (2r+1)^2 squares
  Rgb background{255, 255, 255};
};

/// Optional encodings drawn beneath the points, in this order.
struct RenderLayers {
  const BackgroundTexture* background = nullptr;
  const ContourSet* contours = nullptr;
  const GridOverlay* grid = nullptr;
};

/// Categorical color of class id c (unlabeled samples use id -1).
Rgb palette_color(std::int32_t c);

/// Pixel of a domain coordinate on a size x size image.
int image_pixel(double v, int size);

Image render_frame(const Positions& positions, const std::vector<std::int32_t>& labels,
                   const RenderLayers& layers = {}, const RenderOptions& options = {});

/// Lossless PNG with fixed settings so identical images give identical files.
std::vector<std::uint8_t> encode_png(const Image& image);
Image decode_png(const std::vector<std::uint8_t>& bytes);
void write_png(const Image& image, const std::filesystem::path& path);
Image read_png(const std::filesystem::path& path);

// ---- metrics -------------------------------------------------------------

/// One JSON line per record, without wall time.
void write_metrics_jsonl(const std::vector<MetricRecord>& records, const std::filesystem::path& path);
std::vector<MetricRecord> read_metrics_jsonl(const std::filesystem::path& path);

/// Wall times per iteration, kept apart from the reproducible metrics.
void write_timings_jsonl(const std::vector<MetricRecord>& records, const std::filesystem::path& path);

}  // namespace inim
