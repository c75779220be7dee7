#include "hpix/image.hpp"

#include <cmath>
#include <fstream>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>
#include <vector>

#include "hpix/error.hpp"

namespace hpix {

double normalize_value(double display) { return display / 127.5 - 1.0; }

double denormalize_value(double model) { return (model + 1.0) * 127.5; }

Tensor to_model_space(const cv::Mat& rgb) {
  if (rgb.empty() || rgb.type() != CV_8UC3) {
    throw InputError("to_model_space expects a non-empty 8-bit 3-channel image");
  }
  Tensor t(Shape{1, 3, rgb.rows, rgb.cols});
  for (int r = 0; r < rgb.rows; ++r) {
    const auto* row = rgb.ptr<cv::Vec3b>(r);
    for (int c = 0; c < rgb.cols; ++c) {
      for (int ch = 0; ch < 3; ++ch) t.at(0, ch, r, c) = normalize_value(row[c][ch]);
    }
  }
  return t;
}

cv::Mat to_display_space(const Tensor& t, int n) {
  const Shape s = t.shape();
  if (s.c != 3 || n < 0 || n >= s.n) {
    throw ShapeError("to_display_space expects a 3-channel tensor, got " + s.str());
  }
  cv::Mat out(s.h, s.w, CV_8UC3);
  for (int r = 0; r < s.h; ++r) {
    auto* row = out.ptr<cv::Vec3b>(r);
    for (int c = 0; c < s.w; ++c) {
      for (int ch = 0; ch < 3; ++ch) {
        const double v = std::round(denormalize_value(t.at(n, ch, r, c)));
        row[c][ch] = static_cast<unsigned char>(std::clamp(v, 0.0, 255.0));
      }
    }
  }
  return out;
}

cv::Mat read_rgb(const std::filesystem::path& path) {
  cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (bgr.empty()) throw IngestionError("cannot read image " + path.string());
  cv::Mat rgb;
  cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);
  return rgb;
}

cv::Mat read_gray(const std::filesystem::path& path) {
  cv::Mat gray = cv::imread(path.string(), cv::IMREAD_GRAYSCALE);
  if (gray.empty()) throw IngestionError("cannot read image " + path.string());
  return gray;
}

void write_png(const std::filesystem::path& path, const cv::Mat& image) {
  cv::Mat encoded_src = image;
  if (image.channels() == 3) cv::cvtColor(image, encoded_src, cv::COLOR_RGB2BGR);
  std::vector<unsigned char> bytes;
  if (!cv::imencode(".png", encoded_src, bytes)) {
    throw IngestionError("PNG encoding failed for " + path.string());
  }
  write_text_atomic(path, std::string(bytes.begin(), bytes.end()));
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IngestionError("cannot open " + tmp.string() + " for writing");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw IngestionError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace hpix
