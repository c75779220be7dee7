#include "fixtures.hpp"

#include <cmath>
#include <cstdio>
#include <opencv2/imgproc.hpp>

#include "hpix/image.hpp"

namespace hpix::test {

cv::Mat synthetic_satellite(int size, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  cv::Mat img(size, size, CV_8UC3, cv::Scalar(70, 110, 60));
  const int roads = 2 + static_cast<int>(u(rng) * 3);
  for (int k = 0; k < roads; ++k) {
    const int pos = static_cast<int>(u(rng) * size);
    const int width = 4 + static_cast<int>(u(rng) * 6);
    if (k % 2 == 0) {
      cv::rectangle(img, {0, pos}, {size - 1, pos + width}, cv::Scalar(180, 180, 175), cv::FILLED);
    } else {
      cv::rectangle(img, {pos, 0}, {pos + width, size - 1}, cv::Scalar(180, 180, 175), cv::FILLED);
    }
  }
  for (int k = 0; k < 6; ++k) {
    const int r = static_cast<int>(u(rng) * (size - 20));
    const int c = static_cast<int>(u(rng) * (size - 20));
    cv::rectangle(img, {c, r}, {c + 8 + k, r + 10}, cv::Scalar(140, 90, 80), cv::FILLED);
  }
  cv::GaussianBlur(img, img, {5, 5}, 1.0);
  return img;
}

cv::Mat synthetic_map(const cv::Mat& satellite) {
  cv::Mat map(satellite.size(), CV_8UC3);
  for (int r = 0; r < satellite.rows; ++r) {
    for (int c = 0; c < satellite.cols; ++c) {
      const auto p = satellite.at<cv::Vec3b>(r, c);
      const int bright = (p[0] + p[1] + p[2]) / 3;
      if (bright > 150) {
        map.at<cv::Vec3b>(r, c) = {255, 255, 255};
      } else if (p[0] > p[1]) {
        map.at<cv::Vec3b>(r, c) = {230, 220, 210};
      } else {
        map.at<cv::Vec3b>(r, c) = {200, 230, 180};
      }
    }
  }
  return map;
}

void write_synthetic_dataset(const std::filesystem::path& root, const std::string& split_dir,
                             int count, int size, std::uint64_t seed) {
  const auto dir = root / split_dir;
  std::filesystem::create_directories(dir);
  for (int i = 0; i < count; ++i) {
    const cv::Mat sat = synthetic_satellite(size, seed * 1000 + i);
    cv::Mat frame;
    cv::hconcat(sat, synthetic_map(sat), frame);
    char name[32];
    std::snprintf(name, sizeof(name), "%04d.png", i + 1);
    write_png(dir / name, frame);
  }
}

}  // namespace hpix::test
