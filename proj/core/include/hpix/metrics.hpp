#pragma once

#include <limits>
#include <opencv2/core.hpp>
#include <optional>
#include <string>

namespace hpix {

// Fraction of pixels whose every channel is within `tolerance` of the target.
// Both images 8-bit with identical shape.
double pixel_accuracy(const cv::Mat& pred, const cv::Mat& target, int tolerance = 5);

// 10 log10(255^2 / MSE) with the MSE over all channels; +inf for identical
// images.
double psnr(const cv::Mat& pred, const cv::Mat& target);

struct SsimOptions {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 255.0;
};

// Mean SSIM over every full (valid) Gaussian window position, computed per
// channel and averaged across channels.
double ssim(const cv::Mat& pred, const cv::Mat& target, const SsimOptions& options = {});

// Accumulates per-sample metrics in a fixed order.
struct MetricReport {
  double pixel_accuracy = 0.0;
  double psnr_db = 0.0;
  double ssim = 0.0;
  std::size_t n_samples = 0;
  int tolerance = 5;

  void add_sample(const cv::Mat& pred, const cv::Mat& target);
  // Averages over the samples added so far.
  MetricReport mean() const;

 private:
  double sum_accuracy_ = 0.0;
  double sum_psnr_ = 0.0;
  double sum_ssim_ = 0.0;
};

// Wording recorded next to every report so numbers stay comparable.
inline constexpr const char* kAccuracySemantics =
    "pixel counted correct when |pred - target| <= tolerance on all three 8-bit "
    "channels after rounding model outputs to [0,255]";

}  // namespace hpix
