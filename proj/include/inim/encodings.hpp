#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "inim/core.hpp"
#include "inim/regularizer.hpp"

namespace inim {

/// Fields 1..level of a run, in run order.
using FieldChain = std::vector<std::shared_ptr<const DeformationField>>;

/// Throws Error(OutOfRangeLevel) unless level <= run.iterations().
FieldChain field_chain(const RegularizationRun& run, std::size_t level);

/// Pushes points through every field of the chain with interpolate(), the
/// same way samples are moved by the run.
Positions map_points(const FieldChain& chain, std::span<const Point2> points);

struct GridOverlay {
  std::vector<Positions> lines;  // horizontal lines first, then vertical
  int spacing = 0;               // pixels between lines
  int subdivision = 0;           // vertices per cell edge
};

/// 32 pixels at k = 10, scaled with the resolution (never below 2).
int default_grid_spacing(int k);

/// Straight lines every `spacing` pixels, including the domain edges.
/// Throws Error(InvalidParams) for spacing < 2 or subdivision < 1.
GridOverlay regular_grid(int k, int spacing, int subdivision);

GridOverlay deform_grid(const FieldChain& chain, int k, int spacing, int subdivision);
GridOverlay deform_grid(const RegularizationRun& run, std::size_t level, int spacing = 0,
                        int subdivision = 8);

struct BackgroundTexture {
  TextureGrid values;
  double min_value = 0.0;
  double max_value = 0.0;
  double painted_mass = 0.0;  // sum of splatted value * weight
  std::string transfer = "luminance";
};

/// Forward push of the original density: every source pixel is mapped
/// through the chain and splatted with bilinear weights; the output is the
/// weight-normalized average, and pixels without weight take the value of
/// the nearest pixel that received some.
BackgroundTexture deform_background(const DensityTexture& density, const FieldChain& chain);
BackgroundTexture deform_background(const RegularizationRun& run, std::size_t level);

struct ContourLine {
  Positions points;  // closed lines repeat their first vertex at the end
  double level = 0.0;
  bool closed = false;
};

struct ContourSet {
  std::vector<ContourLine> lines;
  std::vector<double> levels;
};

/// d0 + {1/16, 1/4, 1/2} * (max - d0).
std::vector<double> default_contour_levels(const DensityTexture& density);

/// Marching squares over pixel coordinates with linear interpolation along
/// cell edges. Ambiguous cells keep the high corners apart, so each line
/// bounds one 4-connected component of pixels >= level. Throws
/// Error(LevelOutOfRange) unless min < level < max.
ContourSet extract_contours(const TextureGrid& values, const std::vector<double>& levels);
ContourSet extract_contours(const DensityTexture& density, const std::vector<double>& levels);

ContourSet deform_contours(const ContourSet& contours, const FieldChain& chain);
ContourSet deform_contours(const ContourSet& contours, const RegularizationRun& run,
                           std::size_t level);

/// Even-odd rule point in polygon; the polygon may or may not repeat its
/// first vertex.
bool point_in_polygon(std::span<const Point2> polygon, Point2 p);

/// Signed shoelace area (positive for counter-clockwise in x-right/y-up).
double polygon_area(std::span<const Point2> polygon);

nlohmann::ordered_json to_json(const GridOverlay& grid);
nlohmann::ordered_json to_json(const ContourSet& contours);
nlohmann::ordered_json to_json(const BackgroundTexture& background);

}  // namespace inim
