#include "hpix/postprocess.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <opencv2/imgproc.hpp>

#include "hpix/error.hpp"

namespace hpix {
namespace {

constexpr int kNeighbourRows[8] = {-1, -1, 0, 1, 1, 1, 0, -1};
constexpr int kNeighbourCols[8] = {0, 1, 1, 1, 0, -1, -1, -1};

cv::Mat to_gray(const cv::Mat& in) {
  if (in.empty()) throw InputError("road_intersections: empty image");
  cv::Mat src = in;
  if (in.depth() != CV_8U) in.convertTo(src, CV_8U);
  cv::Mat gray;
  switch (src.channels()) {
    case 1: gray = src.clone(); break;
    case 3: cv::cvtColor(src, gray, cv::COLOR_RGB2GRAY); break;
    case 4: cv::cvtColor(src, gray, cv::COLOR_RGBA2GRAY); break;
    default: throw InputError("road_intersections: unsupported channel count");
  }
  return gray;
}

// Neighbour values P2..P9 (clockwise from north) as 0/1.
std::array<int, 8> neighbours(const cv::Mat& img, int r, int c) {
  std::array<int, 8> p{};
  for (int k = 0; k < 8; ++k) {
    const int rr = r + kNeighbourRows[k];
    const int cc = c + kNeighbourCols[k];
    p[k] = (rr >= 0 && rr < img.rows && cc >= 0 && cc < img.cols && img.at<uchar>(rr, cc)) ? 1 : 0;
  }
  return p;
}

struct DisjointSet {
  std::vector<std::size_t> parent;
  explicit DisjointSet(std::size_t n) : parent(n) {
    std::iota(parent.begin(), parent.end(), std::size_t{0});
  }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

}  // namespace

double default_gaussian_sigma(int kernel) {
  return 0.3 * ((kernel - 1) * 0.5 - 1.0) + 0.8;
}

cv::Mat zhang_suen_thin(const cv::Mat& binary) {
  CV_Assert(binary.type() == CV_8UC1);
  cv::Mat img;
  cv::threshold(binary, img, 0, 1, cv::THRESH_BINARY);
  std::vector<cv::Point> marked;
  bool changed = true;
  while (changed) {
    changed = false;
    for (int pass = 0; pass < 2; ++pass) {
      marked.clear();
      for (int r = 0; r < img.rows; ++r) {
        const uchar* row = img.ptr<uchar>(r);
        for (int c = 0; c < img.cols; ++c) {
          if (!row[c]) continue;
          const auto p = neighbours(img, r, c);
          const int b = std::accumulate(p.begin(), p.end(), 0);
          if (b < 2 || b > 6) continue;
          int a = 0;
          for (int k = 0; k < 8; ++k) a += (p[k] == 0 && p[(k + 1) % 8] == 1) ? 1 : 0;
          if (a != 1) continue;
          // p[0]=P2 (N), p[2]=P4 (E), p[4]=P6 (S), p[6]=P8 (W).
          const bool cond = pass == 0 ? (p[0] * p[2] * p[4] == 0 && p[2] * p[4] * p[6] == 0)
                                      : (p[0] * p[2] * p[6] == 0 && p[0] * p[4] * p[6] == 0);
          if (cond) marked.emplace_back(c, r);
        }
      }
      for (const auto& pt : marked) img.at<uchar>(pt) = 0;
      changed = changed || !marked.empty();
    }
  }
  return img * 255;
}

std::vector<PixelCoord> branch_points(const cv::Mat& skeleton) {
  CV_Assert(skeleton.type() == CV_8UC1);
  std::vector<PixelCoord> out;
  for (int r = 0; r < skeleton.rows; ++r) {
    for (int c = 0; c < skeleton.cols; ++c) {
      if (!skeleton.at<uchar>(r, c)) continue;
      const auto p = neighbours(skeleton, r, c);
      if (std::accumulate(p.begin(), p.end(), 0) >= 3) out.push_back({r, c});
    }
  }
  return out;
}

IntersectionSet merge_points(const std::vector<PixelCoord>& points, double distance) {
  DisjointSet sets(points.size());
  const double d2 = distance * distance;
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t j = i + 1; j < points.size(); ++j) {
      const double dr = points[i].row - points[j].row;
      const double dc = points[i].col - points[j].col;
      if (dr * dr + dc * dc < d2) sets.unite(i, j);
    }
  }
  std::vector<double> sum_r(points.size(), 0.0);
  std::vector<double> sum_c(points.size(), 0.0);
  std::vector<int> count(points.size(), 0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const std::size_t root = sets.find(i);
    sum_r[root] += points[i].row;
    sum_c[root] += points[i].col;
    ++count[root];
  }
  IntersectionSet out;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (count[i] == 0) continue;
    out.push_back({static_cast<int>(std::lround(sum_r[i] / count[i])),
                   static_cast<int>(std::lround(sum_c[i] / count[i]))});
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

IntersectionSet road_intersections(const cv::Mat& mask_or_rgb, const RoadIntersectionOptions& o,
                                   RoadStages* stages) {
  RoadStages s;
  s.gray = to_gray(mask_or_rgb);
  cv::threshold(s.gray, s.binary, o.binary_threshold - 1, 255, cv::THRESH_BINARY);
  const double sigma = default_gaussian_sigma(o.blur_kernel);
  cv::GaussianBlur(s.binary, s.blurred, cv::Size(o.blur_kernel, o.blur_kernel), sigma, sigma);
  const cv::Mat kernel = cv::getStructuringElement(cv::MORPH_RECT, cv::Size(3, 3));
  s.dilated = s.blurred.clone();
  for (int i = 0; i < o.dilate_iterations; ++i) cv::dilate(s.dilated, s.dilated, kernel);
  cv::threshold(s.dilated, s.thresholded, o.blurred_threshold, 255, cv::THRESH_BINARY);
  s.eroded = s.thresholded.clone();
  for (int i = 0; i < o.erode_iterations; ++i) cv::erode(s.eroded, s.eroded, kernel);
  s.skeleton = zhang_suen_thin(s.eroded);
  IntersectionSet out = merge_points(branch_points(s.skeleton), o.merge_distance);
  if (stages != nullptr) *stages = std::move(s);
  return out;
}

BuildingClass classify_area(double area_m2, const BuildingThresholds& t) {
  if (area_m2 < t.small_m2) return BuildingClass::small;
  if (area_m2 < t.medium_m2) return BuildingClass::medium;
  return BuildingClass::large;
}

BuildingLabelMap classify_buildings(const cv::Mat& mask, double resolution,
                                    BuildingThresholds thresholds) {
  if (mask.empty() || mask.type() != CV_8UC1) {
    throw InputError("classify_buildings: expected a single-channel 8-bit mask");
  }
  for (int r = 0; r < mask.rows; ++r) {
    const uchar* row = mask.ptr<uchar>(r);
    for (int c = 0; c < mask.cols; ++c) {
      if (row[c] != 0 && row[c] != 255) {
        throw InputError("classify_buildings: mask is not binary {0,255}");
      }
    }
  }
  if (!(resolution > 0.0) || !std::isfinite(resolution)) {
    throw InputError("classify_buildings: resolution must be positive");
  }
  if (!(thresholds.small_m2 < thresholds.medium_m2)) {
    throw InputError("classify_buildings: thresholds must be ascending");
  }

  BuildingLabelMap out;
  out.labels = cv::Mat::zeros(mask.size(), CV_8UC1);
  out.resolution = resolution;
  out.thresholds = thresholds;

  std::vector<std::vector<cv::Point>> contours;
  cv::findContours(mask.clone(), contours, cv::RETR_EXTERNAL, cv::CHAIN_APPROX_NONE);
  for (std::size_t i = 0; i < contours.size(); ++i) {
    const cv::Rect box = cv::boundingRect(contours[i]);
    cv::Mat region = cv::Mat::zeros(box.size(), CV_8UC1);
    cv::drawContours(region, contours, static_cast<int>(i), cv::Scalar(255), cv::FILLED,
                     cv::LINE_8, cv::noArray(), 0, -box.tl());
    const int pixels = cv::countNonZero(region);
    Building b;
    b.area_m2 = pixels * resolution * resolution;
    b.label = classify_area(b.area_m2, thresholds);
    b.bbox = box;
    out.labels(box).setTo(static_cast<int>(b.label), region);
    out.buildings.push_back(b);
  }
  return out;
}

cv::Mat compose_overlay(const cv::Mat& map_tile, const IntersectionSet& roads,
                        const BuildingLabelMap& buildings, const OverlayStyle& style) {
  if (map_tile.empty() || map_tile.type() != CV_8UC3) {
    throw InputError("compose_overlay: map tile must be 8-bit RGB");
  }
  if (!buildings.labels.empty() && buildings.labels.size() != map_tile.size()) {
    throw ShapeError("compose_overlay: building labels and map tile differ in size");
  }
  cv::Mat out = map_tile.clone();
  if (!buildings.labels.empty()) {
    for (int r = 0; r < out.rows; ++r) {
      const uchar* lab = buildings.labels.ptr<uchar>(r);
      auto* px = out.ptr<cv::Vec3b>(r);
      for (int c = 0; c < out.cols; ++c) {
        if (lab[c] >= 1 && lab[c] <= 3) px[c] = style.class_colors[lab[c] - 1];
      }
    }
  }
  const int rad = style.marker_radius;
  for (const auto& p : roads) {
    if (p.row < 0 || p.row >= out.rows || p.col < 0 || p.col >= out.cols) {
      throw ShapeError("compose_overlay: intersection outside the map tile");
    }
    for (int dr = -rad; dr <= rad; ++dr) {
      for (int dc = -rad; dc <= rad; ++dc) {
        if (dr * dr + dc * dc > rad * rad) continue;
        const int r = p.row + dr;
        const int c = p.col + dc;
        if (r >= 0 && r < out.rows && c >= 0 && c < out.cols) {
          out.at<cv::Vec3b>(r, c) = style.marker_color;
        }
      }
    }
  }
  return out;
}

}  // namespace hpix
