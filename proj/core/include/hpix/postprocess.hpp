#pragma once

#include <array>
#include <opencv2/core.hpp>
#include <vector>

// Map annotation: road intersections from a road mask, building size classes
// from a footprint mask, and their composition onto a generated map tile.
namespace hpix {

struct PixelCoord {
  int row = 0;
  int col = 0;
  auto operator<=>(const PixelCoord&) const = default;
};

using IntersectionSet = std::vector<PixelCoord>;

struct RoadIntersectionOptions {
  int binary_threshold = 128;
  int blur_kernel = 31;
  int dilate_iterations = 5;
  int blurred_threshold = 25;
  int erode_iterations = 5;
  // Branch points closer than this (pixels) collapse into their centroid.
  double merge_distance = 10.0;
};

// Intermediate rasters of the intersection pipeline, all CV_8UC1 {0,255}
// except `blurred`.
struct RoadStages {
  cv::Mat gray;
  cv::Mat binary;
  cv::Mat blurred;
  cv::Mat dilated;
  cv::Mat thresholded;
  cv::Mat eroded;
  cv::Mat skeleton;
};

// grayscale -> binarize -> Gaussian blur -> dilate xN -> threshold -> erode xN
// -> skeletonize -> branch points merged into intersections.
IntersectionSet road_intersections(const cv::Mat& mask_or_rgb,
                                   const RoadIntersectionOptions& options = {},
                                   RoadStages* stages = nullptr);

// Gaussian sigma used for a k-tap kernel when none is given.
double default_gaussian_sigma(int kernel);

// Zhang-Suen thinning of a {0,255} mask; pixels on the image border are
// treated as having background outside.
cv::Mat zhang_suen_thin(const cv::Mat& binary);

// Foreground skeleton pixels with three or more 8-neighbours.
std::vector<PixelCoord> branch_points(const cv::Mat& skeleton);

// Single-linkage merge of points closer than `distance`; each cluster is
// replaced by its rounded centroid. Output sorted.
IntersectionSet merge_points(const std::vector<PixelCoord>& points, double distance);

enum class BuildingClass : unsigned char { none = 0, small = 1, medium = 2, large = 3 };

struct Building {
  BuildingClass label = BuildingClass::none;
  double area_m2 = 0.0;
  cv::Rect bbox;
};

struct BuildingThresholds {
  double small_m2 = 250.0;
  double medium_m2 = 500.0;
};

struct BuildingLabelMap {
  cv::Mat labels;  // CV_8UC1, values 0..3
  double resolution = 1.0;
  BuildingThresholds thresholds;
  std::vector<Building> buildings;
};

// Outer contours of 8-connected foreground regions (holes filled) are
// measured as pixel_count * resolution^2 and painted with their class.
BuildingLabelMap classify_buildings(const cv::Mat& mask, double resolution = 1.0,
                                    BuildingThresholds thresholds = {});

BuildingClass classify_area(double area_m2, const BuildingThresholds& thresholds);

struct OverlayStyle {
  std::array<cv::Vec3b, 3> class_colors{cv::Vec3b{255, 0, 0}, cv::Vec3b{0, 255, 0},
                                        cv::Vec3b{0, 0, 255}};
  cv::Vec3b marker_color{255, 255, 0};
  int marker_radius = 4;
};

// Buildings are recoloured first, then intersection discs
// (dr^2 + dc^2 <= radius^2) are drawn on top.
cv::Mat compose_overlay(const cv::Mat& map_tile, const IntersectionSet& roads,
                        const BuildingLabelMap& buildings, const OverlayStyle& style = {});

}  // namespace hpix
