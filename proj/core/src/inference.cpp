#include "hpix/inference.hpp"

#include <cmath>
#include <nlohmann/json.hpp>
#include <opencv2/imgproc.hpp>

#include "hpix/checkpoint.hpp"
#include "hpix/error.hpp"
#include "hpix/image.hpp"

namespace hpix {

Translator::Translator(TrainingState state)
    : config_(state.config),
      global_gen_(std::move(state.global_gen)),
      local_gen_(std::move(state.local_gen)),
      baseline_(state.config.baseline_pix2pix),
      tile_size_(state.config.augmentation.crop) {
  if (local_gen_.tensors.empty()) throw ContractError("translator: local generator has no parameters");
  if (!baseline_ && global_gen_.tensors.empty()) {
    throw ContractError("translator: global generator has no parameters");
  }
}

Translator Translator::from_checkpoint(const std::filesystem::path& path) {
  return Translator(load_checkpoint(path));
}

GeneratorOutput Translator::run_global(const Tensor& x) const {
  if (baseline_) return {Tensor(x.shape()), {}};
  return global_forward(global_gen_, x);
}

Tensor Translator::run(const Tensor& x, Tensor* global_out) const {
  Tensor g = run_global(x).final;
  Tensor h = local_forward(local_gen_, x, g).final;
  if (global_out != nullptr) *global_out = std::move(g);
  return h;
}

TranslatedTile Translator::translate(const cv::Mat& satellite_rgb) const {
  if (satellite_rgb.empty() || satellite_rgb.type() != CV_8UC3) {
    throw InputError("translate expects a non-empty 8-bit RGB image");
  }
  cv::Mat resized = satellite_rgb;
  if (satellite_rgb.rows != tile_size_ || satellite_rgb.cols != tile_size_) {
    cv::resize(satellite_rgb, resized, {tile_size_, tile_size_}, 0, 0, cv::INTER_LINEAR);
  }
  Tensor g;
  const Tensor h = run(to_model_space(resized), &g);

  auto back = [&](const Tensor& t) {
    cv::Mat img = to_display_space(t);
    if (img.size() != satellite_rgb.size()) {
      cv::resize(img, img, satellite_rgb.size(), 0, 0, cv::INTER_LINEAR);
    }
    return img;
  };
  TranslatedTile out;
  out.final = back(h);
  if (!baseline_) out.global = back(g);
  return out;
}

EvaluationResult evaluate(const Translator& translator, const DatasetManifest& manifest,
                          const std::function<void(const EvaluatedPair&)>& on_pair) {
  if (manifest.count() == 0) throw ConfigError("evaluation manifest is empty");
  AugmentationPolicy plain;
  plain.enabled = false;
  plain.crop = translator.tile_size();
  std::mt19937_64 unused(0);

  MetricReport final_sum;
  MetricReport global_sum;
  for (const auto& entry : manifest.entries) {
    const PairedSample sample = load_entry(entry);
    const ModelPair pair = preprocess(sample, plain, unused);
    Tensor g;
    const Tensor h = translator.run(pair.x, &g);

    EvaluatedPair ev;
    ev.id = sample.id;
    ev.satellite = to_display_space(pair.x);
    ev.target = to_display_space(pair.y);
    ev.final = to_display_space(h);
    final_sum.add_sample(ev.final, ev.target);
    if (translator.has_global()) {
      ev.global = to_display_space(g);
      global_sum.add_sample(ev.global, ev.target);
    }
    if (on_pair) on_pair(ev);
  }
  EvaluationResult result;
  result.final = final_sum.mean();
  if (translator.has_global()) result.global_only = global_sum.mean();
  return result;
}

namespace {

nlohmann::json report_json(const MetricReport& r) {
  nlohmann::json j;
  j["pixel_accuracy"] = r.pixel_accuracy;
  // JSON has no infinity; identical images report null PSNR.
  j["psnr_db"] = std::isfinite(r.psnr_db) ? nlohmann::json(r.psnr_db) : nlohmann::json(nullptr);
  j["ssim"] = r.ssim;
  j["n_samples"] = r.n_samples;
  j["tolerance"] = r.tolerance;
  return j;
}

}  // namespace

std::string to_json(const EvaluationResult& result) {
  nlohmann::json j = report_json(result.final);
  j["accuracy_semantics"] = kAccuracySemantics;
  j["global_only"] = result.global_only ? report_json(*result.global_only) : nlohmann::json(nullptr);
  return j.dump(2) + "\n";
}

}  // namespace hpix
