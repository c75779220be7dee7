#pragma once

#include <filesystem>
#include <random>
#include <string>

#include <opencv2/core.hpp>

#include "hpix/tensor.hpp"

namespace hpix::test {

inline cv::Mat random_image(std::mt19937_64& rng, int rows, int cols, int type = CV_8UC3) {
  cv::Mat m(rows, cols, type);
  std::uniform_int_distribution<int> d(0, 255);
  for (int r = 0; r < rows; ++r) {
    auto* p = m.ptr<unsigned char>(r);
    for (int i = 0; i < cols * m.channels(); ++i) p[i] = static_cast<unsigned char>(d(rng));
  }
  return m;
}

inline Tensor random_tensor(std::mt19937_64& rng, Shape s, double lo = -1.0, double hi = 1.0) {
  Tensor t(s);
  std::uniform_real_distribution<double> d(lo, hi);
  for (double& v : t.values()) v = d(rng);
  return t;
}

// Unique scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("hpix_" + tag + "_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

// Smooth synthetic satellite tile and a "map" that is a simple function of it,
// so a generator has something learnable.
cv::Mat synthetic_satellite(int size, std::uint64_t seed);
cv::Mat synthetic_map(const cv::Mat& satellite);

// Writes `count` side-by-side frames (size x 2*size) into <root>/<split dir>.
void write_synthetic_dataset(const std::filesystem::path& root, const std::string& split_dir,
                             int count, int size, std::uint64_t seed);

}  // namespace hpix::test
