#include "hpix/metrics.hpp"

#include <cmath>
#include <cstdlib>
#include <vector>

#include "hpix/error.hpp"

namespace hpix {
namespace {

void check_pair(const cv::Mat& a, const cv::Mat& b, const char* what) {
  if (a.empty() || b.empty()) throw ShapeError(std::string(what) + ": empty image");
  if (a.size() != b.size() || a.type() != b.type()) {
    throw ShapeError(std::string(what) + ": image shapes or types differ");
  }
  if (a.depth() != CV_8U) throw InputError(std::string(what) + ": expected 8-bit images");
}

std::vector<double> gaussian_window(int size, double sigma) {
  std::vector<double> w(static_cast<std::size_t>(size));
  const double centre = (size - 1) / 2.0;
  double sum = 0.0;
  for (int i = 0; i < size; ++i) {
    const double d = i - centre;
    w[static_cast<std::size_t>(i)] = std::exp(-d * d / (2.0 * sigma * sigma));
    sum += w[static_cast<std::size_t>(i)];
  }
  for (double& v : w) v /= sum;
  return w;
}

// Separable "valid" filtering of one plane (row-major, rows x cols).
std::vector<double> filter_valid(const std::vector<double>& img, int rows, int cols,
                                 const std::vector<double>& k) {
  const int n = static_cast<int>(k.size());
  const int out_c = cols - n + 1;
  const int out_r = rows - n + 1;
  std::vector<double> tmp(static_cast<std::size_t>(rows) * out_c);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < out_c; ++c) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += k[i] * img[static_cast<std::size_t>(r) * cols + c + i];
      tmp[static_cast<std::size_t>(r) * out_c + c] = s;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(out_r) * out_c);
  for (int r = 0; r < out_r; ++r) {
    for (int c = 0; c < out_c; ++c) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += k[i] * tmp[static_cast<std::size_t>(r + i) * out_c + c];
      out[static_cast<std::size_t>(r) * out_c + c] = s;
    }
  }
  return out;
}

}  // namespace

double pixel_accuracy(const cv::Mat& pred, const cv::Mat& target, int tolerance) {
  check_pair(pred, target, "pixel_accuracy");
  const int ch = pred.channels();
  std::size_t correct = 0;
  for (int r = 0; r < pred.rows; ++r) {
    const auto* p = pred.ptr<unsigned char>(r);
    const auto* t = target.ptr<unsigned char>(r);
    for (int c = 0; c < pred.cols; ++c) {
      bool ok = true;
      for (int k = 0; k < ch; ++k) {
        if (std::abs(int{p[c * ch + k]} - int{t[c * ch + k]}) > tolerance) ok = false;
      }
      correct += ok ? 1 : 0;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(pred.total());
}

double psnr(const cv::Mat& pred, const cv::Mat& target) {
  check_pair(pred, target, "psnr");
  const int row_len = pred.cols * pred.channels();
  double sse = 0.0;
  for (int r = 0; r < pred.rows; ++r) {
    const auto* p = pred.ptr<unsigned char>(r);
    const auto* t = target.ptr<unsigned char>(r);
    for (int i = 0; i < row_len; ++i) {
      const double d = double{p[i]} - double{t[i]};
      sse += d * d;
    }
  }
  const double mse = sse / (static_cast<double>(pred.total()) * pred.channels());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(255.0 * 255.0 / mse);
}

double ssim(const cv::Mat& pred, const cv::Mat& target, const SsimOptions& o) {
  check_pair(pred, target, "ssim");
  if (pred.rows < o.window || pred.cols < o.window) {
    throw ShapeError("ssim: image smaller than the " + std::to_string(o.window) + "px window");
  }
  const auto k = gaussian_window(o.window, o.sigma);
  const double c1 = (o.k1 * o.dynamic_range) * (o.k1 * o.dynamic_range);
  const double c2 = (o.k2 * o.dynamic_range) * (o.k2 * o.dynamic_range);
  const int rows = pred.rows;
  const int cols = pred.cols;
  const int ch = pred.channels();
  const std::size_t n = static_cast<std::size_t>(rows) * cols;

  double total = 0.0;
  for (int c = 0; c < ch; ++c) {
    std::vector<double> a(n), b(n), aa(n), bb(n), ab(n);
    for (int r = 0; r < rows; ++r) {
      const auto* p = pred.ptr<unsigned char>(r);
      const auto* t = target.ptr<unsigned char>(r);
      for (int x = 0; x < cols; ++x) {
        const std::size_t i = static_cast<std::size_t>(r) * cols + x;
        a[i] = p[x * ch + c];
        b[i] = t[x * ch + c];
        aa[i] = a[i] * a[i];
        bb[i] = b[i] * b[i];
        ab[i] = a[i] * b[i];
      }
    }
    const auto mu_a = filter_valid(a, rows, cols, k);
    const auto mu_b = filter_valid(b, rows, cols, k);
    const auto e_aa = filter_valid(aa, rows, cols, k);
    const auto e_bb = filter_valid(bb, rows, cols, k);
    const auto e_ab = filter_valid(ab, rows, cols, k);
    double sum = 0.0;
    for (std::size_t i = 0; i < mu_a.size(); ++i) {
      const double var_a = e_aa[i] - mu_a[i] * mu_a[i];
      const double var_b = e_bb[i] - mu_b[i] * mu_b[i];
      const double cov = e_ab[i] - mu_a[i] * mu_b[i];
      sum += ((2.0 * mu_a[i] * mu_b[i] + c1) * (2.0 * cov + c2)) /
             ((mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + c1) * (var_a + var_b + c2));
    }
    total += sum / static_cast<double>(mu_a.size());
  }
  return total / ch;
}

void MetricReport::add_sample(const cv::Mat& pred, const cv::Mat& target) {
  sum_accuracy_ += hpix::pixel_accuracy(pred, target, tolerance);
  sum_psnr_ += hpix::psnr(pred, target);
  sum_ssim_ += hpix::ssim(pred, target);
  ++n_samples;
}

MetricReport MetricReport::mean() const {
  if (n_samples == 0) throw ConfigError("metric report over zero samples");
  MetricReport out = *this;
  const double n = static_cast<double>(n_samples);
  out.pixel_accuracy = sum_accuracy_ / n;
  out.psnr_db = sum_psnr_ / n;
  out.ssim = sum_ssim_ / n;
  return out;
}

}  // namespace hpix
