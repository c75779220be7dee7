#pragma once

#include <filesystem>
#include <opencv2/core.hpp>

#include "hpix/tensor.hpp"

// Conversions between display space (8-bit RGB cv::Mat, [0,255]) and model
// space (1x3xHxW tensor, [-1,1]).
namespace hpix {

// v / 127.5 - 1, per channel.
double normalize_value(double display);
// (v + 1) * 127.5, unclamped.
double denormalize_value(double model);

Tensor to_model_space(const cv::Mat& rgb);

// Sample `n` of a model-space tensor, rounded and clamped to [0,255].
cv::Mat to_display_space(const Tensor& t, int n = 0);

// Reads any image OpenCV can decode and returns it as 8-bit RGB.
// Throws IngestionError on failure.
cv::Mat read_rgb(const std::filesystem::path& path);

// Reads an image as a single 8-bit channel (grayscale conversion if needed).
cv::Mat read_gray(const std::filesystem::path& path);

// Writes an RGB (or single-channel) image as PNG via write-temp-then-rename.
void write_png(const std::filesystem::path& path, const cv::Mat& image);

// Same file contents written through a temporary in the target directory.
void write_text_atomic(const std::filesystem::path& path, const std::string& text);

}  // namespace hpix
