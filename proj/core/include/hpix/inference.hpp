#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>

#include <opencv2/core.hpp>

#include "hpix/data.hpp"
#include "hpix/metrics.hpp"
#include "hpix/training.hpp"

namespace hpix {

struct TranslatedTile {
  cv::Mat final;   // 8-bit RGB
  cv::Mat global;  // empty for the pix2pix baseline
};

// Evaluation-mode G -> H chain. Keeps only the generator parameters.
class Translator {
 public:
  explicit Translator(TrainingState state);
  static Translator from_checkpoint(const std::filesystem::path& path);

  // Model resolution (square side the networks were trained at).
  int tile_size() const { return tile_size_; }
  bool has_global() const { return !baseline_; }
  const TrainConfig& config() const { return config_; }

  // x: 1x3xSxS model-space tensor with S == tile_size().
  GeneratorOutput run_global(const Tensor& x) const;
  Tensor run(const Tensor& x, Tensor* global_out = nullptr) const;

  // Any-size RGB tile: bilinear resize to the model resolution, translate,
  // resize back to the input size.
  TranslatedTile translate(const cv::Mat& satellite_rgb) const;

 private:
  TrainConfig config_;
  NetworkParams global_gen_;
  NetworkParams local_gen_;
  bool baseline_ = false;
  int tile_size_ = 256;
};

// One evaluated pair, every image at model resolution.
struct EvaluatedPair {
  std::string id;
  cv::Mat satellite;
  cv::Mat target;
  cv::Mat final;
  cv::Mat global;
};

struct EvaluationResult {
  MetricReport final;
  std::optional<MetricReport> global_only;
};

// Metrics over every pair of the manifest, in manifest order. Targets are
// resized to the model resolution the same way inputs are.
EvaluationResult evaluate(const Translator& translator, const DatasetManifest& manifest,
                          const std::function<void(const EvaluatedPair&)>& on_pair = {});

// {"pixel_accuracy", "psnr_db", "ssim", "n_samples", "tolerance",
//  "accuracy_semantics", "global_only": {...} | null}
std::string to_json(const EvaluationResult& result);

}  // namespace hpix
