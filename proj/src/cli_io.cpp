#include "inim/cli_io.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

namespace inim {

// ---- CSV -----------------------------------------------------------------

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    fields.push_back(trim(std::string_view(line).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return fields;
}

[[noreturn]] void parse_error(std::size_t line, const std::string& what) {
  throw Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": " + what);
}

double parse_double(const std::string& token, std::size_t line) {
  double value = 0.0;
  const char* begin = token.data();
  const char* end = begin + token.size();
  if (!token.empty() && *begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || token.empty()) {
    parse_error(line, "not a decimal number: '" + token + "'");
  }
  return value;
}

std::string format_double(double v) {
  std::array<char, 32> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

}  // namespace

ScatterDataset parse_csv(std::istream& in, const ValidateOptions& options) {
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  bool labeled = false;
  while (!have_header && std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::vector<std::string> header = split_fields(line);
    if (header.size() == 2 && header[0] == "x" && header[1] == "y") {
      labeled = false;
    } else if (header.size() == 3 && header[0] == "x" && header[1] == "y" && header[2] == "label") {
      labeled = true;
    } else {
      parse_error(line_no, "expected header 'x,y' or 'x,y,label'");
    }
    have_header = true;
  }
  if (!have_header) parse_error(line_no + 1, "missing header");

  Positions raw;
  std::vector<std::int32_t> labels;
  std::vector<std::string> names;
  std::map<std::string, std::int32_t> ids;
  const std::size_t arity = labeled ? 3 : 2;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::vector<std::string> fields = split_fields(line);
    if (fields.size() != arity) {
      parse_error(line_no, "expected " + std::to_string(arity) + " fields, found " +
                               std::to_string(fields.size()));
    }
    raw.push_back({parse_double(fields[0], line_no), parse_double(fields[1], line_no)});
    if (labeled) {
      const auto [it, inserted] = ids.emplace(fields[2], static_cast<std::int32_t>(names.size()));
      if (inserted) names.push_back(fields[2]);
      labels.push_back(it->second);
    }
  }
  if (in.bad()) throw Error(ErrorCode::Io, "read failure");
  ScatterDataset out = validate_dataset(std::move(raw), std::move(labels), options);
  out.label_names = std::move(names);
  return out;
}

ScatterDataset parse_csv_text(const std::string& text, const ValidateOptions& options) {
  std::istringstream in(text);
  return parse_csv(in, options);
}

ScatterDataset load_csv(const std::filesystem::path& path, const ValidateOptions& options) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  return parse_csv(in, options);
}

void write_csv(std::ostream& out, const ScatterDataset& dataset) {
  const bool labeled = dataset.has_labels();
  out << (labeled ? "x,y,label\n" : "x,y\n");
  for (std::size_t s = 0; s < dataset.size(); ++s) {
    out << format_double(dataset.samples[s].x) << ',' << format_double(dataset.samples[s].y);
    if (labeled) {
      const std::int32_t c = dataset.labels[s];
      out << ',';
      if (static_cast<std::size_t>(c) < dataset.label_names.size()) {
        out << dataset.label_names[static_cast<std::size_t>(c)];
      } else {
        out << c;
      }
    }
    out << '\n';
  }
}

void save_csv(const ScatterDataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  write_csv(out, dataset);
  if (!out) throw Error(ErrorCode::Io, "write failure on " + path.string());
}

// ---- field dumps ---------------------------------------------------------

namespace {

constexpr std::array<char, 8> kFieldMagic{'I', 'N', 'I', 'M', 'F', 'L', 'D', '\0'};

void put_u32(std::string& buf, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) buf.push_back(static_cast<char>((v >> (8 * b)) & 0xffu));
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

void put_f32(std::string& buf, double v) {
  const float f = static_cast<float>(v);
  std::uint32_t bits = 0;
  std::memcpy(&bits, &f, sizeof bits);
  put_u32(buf, bits);
}

float get_f32(const unsigned char* p) {
  const std::uint32_t bits = get_u32(p);
  float f = 0.0f;
  std::memcpy(&f, &bits, sizeof f);
  return f;
}

}  // namespace

void export_field(const DeformationField& field, std::uint32_t iteration,
                  const std::filesystem::path& path) {
  std::string buf(kFieldMagic.begin(), kFieldMagic.end());
  buf.reserve(16 + field.pixel_count() * 8);
  put_u32(buf, static_cast<std::uint32_t>(field.k()));
  put_u32(buf, iteration);
  for (const Point2& p : field.targets()) {
    put_f32(buf, p.x);
    put_f32(buf, p.y);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw Error(ErrorCode::Io, "write failure on " + path.string());
}

FieldDump read_field(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < 16 || !std::equal(kFieldMagic.begin(), kFieldMagic.end(), bytes.begin())) {
    throw Error(ErrorCode::FormatError, "not a field dump: bad magic");
  }
  const auto* data = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::uint32_t k = get_u32(data + 8);
  if (k < 1 || k > 14) throw Error(ErrorCode::FormatError, "field dump has invalid k");
  FieldDump dump;
  dump.iteration = get_u32(data + 12);
  dump.field = DeformationField(static_cast<int>(k));
  const std::size_t expected = 16 + dump.field.pixel_count() * 8;
  if (bytes.size() != expected) throw Error(ErrorCode::FormatError, "field dump has wrong length");
  const unsigned char* p = data + 16;
  for (Point2& t : dump.field.targets()) {
    t = {get_f32(p), get_f32(p + 4)};
    p += 8;
  }
  return dump;
}

// ---- raster output -------------------------------------------------------

Rgb Image::at(int x, int y) const {
  const std::size_t o = (static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
                         static_cast<std::size_t>(x)) * 3;
  return {rgb[o], rgb[o + 1], rgb[o + 2]};
}

void Image::set(int x, int y, Rgb c) {
  if (x < 0 || y < 0 || x >= width || y >= height) return;
  const std::size_t o = (static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
                         static_cast<std::size_t>(x)) * 3;
  rgb[o] = c.r;
  rgb[o + 1] = c.g;
  rgb[o + 2] = c.b;
}

Rgb palette_color(std::int32_t c) {
  static constexpr std::array<Rgb, 10> kPalette{{
      {31, 119, 180}, {214, 39, 40}, {44, 160, 44}, {255, 127, 14}, {148, 103, 189},
      {140, 86, 75}, {227, 119, 194}, {127, 127, 127}, {188, 189, 34}, {23, 190, 207},
  }};
  if (c < 0) return {40, 40, 60};
  return kPalette[static_cast<std::size_t>(c) % kPalette.size()];
}

int image_pixel(double v, int size) {
  return std::clamp(static_cast<int>(std::floor(v * size)), 0, size - 1);
}

namespace {

void draw_polyline(Image& image, const Positions& points, Rgb color) {
  const int size = image.width;
  for (std::size_t m = 0; m + 1 < points.size(); ++m) {
    const double x0 = points[m].x * size;
    const double y0 = points[m].y * size;
    const double x1 = points[m + 1].x * size;
    const double y1 = points[m + 1].y * size;
    const int steps = std::max(1, static_cast<int>(std::ceil(std::max(std::abs(x1 - x0), std::abs(y1 - y0)))));
    for (int s = 0; s <= steps; ++s) {
      const double t = static_cast<double>(s) / steps;
      image.set(image_pixel((x0 + t * (x1 - x0)) / size, size),
                image_pixel((y0 + t * (y1 - y0)) / size, size), color);
    }
  }
}

void draw_background(Image& image, const BackgroundTexture& background) {
  const TextureGrid& v = background.values;
  const int side = v.side();
  const double range = background.max_value - background.min_value;
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      const int i = std::min(side - 1, static_cast<int>(static_cast<long long>(x) * side / image.width));
      const int j = std::min(side - 1, static_cast<int>(static_cast<long long>(y) * side / image.height));
      const double t = range > 0.0 ? (v(i, j) - background.min_value) / range : 0.0;
      // White to saturated blue, one hue.
      const auto ramp = [t](int from, int to) {
        return static_cast<std::uint8_t>(std::lround(from + (to - from) * std::clamp(t, 0.0, 1.0)));
      };
      image.set(x, y, {ramp(255, 66), ramp(255, 110), ramp(255, 190)});
    }
  }
}

}  // namespace

Image render_frame(const Positions& positions, const std::vector<std::int32_t>& labels,
                   const RenderLayers& layers, const RenderOptions& options) {
  if (options.size < 1) throw Error(ErrorCode::InvalidParams, "image size must be positive");
  Image image;
  image.width = options.size;
  image.height = options.size;
  image.rgb.resize(static_cast<std::size_t>(options.size) * static_cast<std::size_t>(options.size) * 3);
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) image.set(x, y, options.background);
  }
  if (layers.background != nullptr) draw_background(image, *layers.background);
  if (layers.contours != nullptr) {
    for (const ContourLine& line : layers.contours->lines) draw_polyline(image, line.points, {150, 30, 90});
  }
  if (layers.grid != nullptr) {
    for (const Positions& line : layers.grid->lines) draw_polyline(image, line, {170, 170, 170});
  }
  const int r = options.point_radius;
  for (std::size_t s = 0; s < positions.size(); ++s) {
    const Rgb color = palette_color(labels.empty() ? -1 : labels[s]);
    const int px = image_pixel(positions[s].x, options.size);
    const int py = image_pixel(positions[s].y, options.size);
    for (int dy = -r; dy <= r; ++dy) {
      for (int dx = -r; dx <= r; ++dx) image.set(px + dx, py + dy, color);
    }
  }
  return image;
}

namespace {

void png_write_to_vector(png_structp png, png_bytep data, png_size_t length) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + length);
}

void png_flush_noop(png_structp) {}

struct PngReadCursor {
  const std::vector<std::uint8_t>* bytes;
  std::size_t offset;
};

void png_read_from_vector(png_structp png, png_bytep data, png_size_t length) {
  auto* cursor = static_cast<PngReadCursor*>(png_get_io_ptr(png));
  if (cursor->offset + length > cursor->bytes->size()) png_error(png, "truncated PNG");
  std::memcpy(data, cursor->bytes->data() + cursor->offset, length);
  cursor->offset += length;
}

}  // namespace

std::vector<std::uint8_t> encode_png(const Image& image) {
  std::vector<std::uint8_t> out;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (png == nullptr) throw Error(ErrorCode::Io, "png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (info == nullptr || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::Io, "PNG encoding failed");
  }
  png_set_write_fn(png, &out, png_write_to_vector, png_flush_noop);
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width), static_cast<png_uint_32>(image.height), 8,
               PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_set_compression_level(png, 6);
  png_set_filter(png, PNG_FILTER_TYPE_BASE, PNG_FILTER_NONE);
  png_write_info(png, info);
  for (int y = 0; y < image.height; ++y) {
    png_write_row(png, const_cast<png_bytep>(image.rgb.data() + static_cast<std::size_t>(y) * image.width * 3));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

Image decode_png(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) {
    throw Error(ErrorCode::FormatError, "not a PNG file");
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (png == nullptr) throw Error(ErrorCode::Io, "png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  Image image;
  if (info == nullptr || setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::FormatError, "PNG decoding failed");
  }
  PngReadCursor cursor{&bytes, 0};
  png_set_read_fn(png, &cursor, png_read_from_vector);
  png_read_info(png, info);
  png_set_expand(png);
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  png_set_gray_to_rgb(png);
  png_read_update_info(png, info);
  image.width = static_cast<int>(png_get_image_width(png, info));
  image.height = static_cast<int>(png_get_image_height(png, info));
  image.rgb.resize(static_cast<std::size_t>(image.width) * static_cast<std::size_t>(image.height) * 3);
  for (int y = 0; y < image.height; ++y) {
    png_read_row(png, image.rgb.data() + static_cast<std::size_t>(y) * image.width * 3, nullptr);
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return image;
}

void write_png(const Image& image, const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = encode_png(image);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::Io, "write failure on " + path.string());
}

Image read_png(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_png(bytes);
}

// ---- metrics -------------------------------------------------------------

void write_metrics_jsonl(const std::vector<MetricRecord>& records, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  for (const MetricRecord& r : records) out << to_json_line(r) << '\n';
  if (!out) throw Error(ErrorCode::Io, "write failure on " + path.string());
}

std::vector<MetricRecord> read_metrics_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::vector<MetricRecord> records;
  std::string line;
  while (std::getline(in, line)) {
    if (!trim(line).empty()) records.push_back(metric_record_from_json(line));
  }
  return records;
}

void write_timings_jsonl(const std::vector<MetricRecord>& records, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  for (const MetricRecord& r : records) {
    out << "{\"iteration\":" << r.iteration << ",\"wall_ms\":" << format_double(r.wall_ms) << "}\n";
  }
}

}  // namespace inim
