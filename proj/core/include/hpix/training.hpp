#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hpix/autograd.hpp"
#include "hpix/data.hpp"
#include "hpix/model.hpp"

namespace hpix {

// Weights of the L1 and deep-supervision terms in the generator objectives.
struct LossWeights {
  double lambda_l1 = 100.0;
  double lambda_ds = 100.0;

  void validate() const;
};

// Loss value plus its weighted parts; total == adversarial + l1 + deep_supervision.
struct LossBreakdown {
  ag::Var total;
  double adversarial = 0.0;
  double l1 = 0.0;
  double deep_supervision = 0.0;
};

// Mean BCE of sigmoid(logits) against a constant real/fake target.
ag::Var adversarial_loss(const ag::Var& logits, bool target_is_real);
double adversarial_loss(const Tensor& logits, bool target_is_real);

double l1_loss(const Tensor& pred, const Tensor& target);

// adv(D_G(x, G(x)) -> real) + lambda_l1 * L1(final, y)
//   + lambda_ds * mean over heads of L1(head, y).
LossBreakdown generator_global_loss(const ag::Var& y, const GeneratorVars& g_out,
                                    const ag::Var& dg_logits_fake, const LossWeights& w);

// adv(D_H(x, H(x, G(x))) -> real) + lambda_l1 * L1(final, y).
LossBreakdown generator_local_loss(const ag::Var& y, const ag::Var& h_final,
                                   const ag::Var& dh_logits_fake, const LossWeights& w);

// 0.5 * [adv(real -> real) + adv(fake -> fake)].
ag::Var discriminator_loss(const ag::Var& logits_real, const ag::Var& logits_fake);

struct AdamHyper {
  double learning_rate = 0.0002;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class OptimizerState {
 public:
  OptimizerState() = default;
  OptimizerState(const NetworkParams& params, AdamHyper hyper);

  // Bias-corrected Adam update of every array named in `grads`.
  void apply(NetworkParams& params, const Gradients& grads);

  AdamHyper hyper;
  std::int64_t step = 0;
  std::map<std::string, Tensor> first_moment;
  std::map<std::string, Tensor> second_moment;
};

struct TrainConfig {
  int epochs = 200;
  int batch_size = 1;
  std::uint64_t seed = 0;
  int checkpoint_every = 50;
  LossWeights weights;
  AdamHyper adam;
  AugmentationPolicy augmentation;
  // Let the local generator's loss backpropagate into the global generator.
  bool joint_routing = false;
  // Train the local generator alone on (x, zero image): plain Pix2Pix.
  bool baseline_pix2pix = false;
  int depth = 8;
  int base_channels = 64;
  int disc_base_channels = 64;
  // Same shuffle order every epoch.
  bool fixed_epoch_order = false;

  void validate() const;
  GlobalGeneratorSpec global_spec() const;
  LocalGeneratorSpec local_spec() const;
  DiscriminatorSpec discriminator_spec() const;
};

struct StepReport {
  int epoch = 0;
  std::int64_t step = 0;
  double loss_G_adv = 0.0;
  double loss_G_l1 = 0.0;
  double loss_G_ds = 0.0;
  double loss_G = 0.0;
  double loss_H_adv = 0.0;
  double loss_H_l1 = 0.0;
  double loss_H = 0.0;
  double loss_DG = 0.0;
  double loss_DH = 0.0;

  bool all_finite() const;
};

// Everything needed to continue training bit-identically.
struct TrainingState {
  TrainConfig config;
  NetworkParams global_gen;
  NetworkParams local_gen;
  NetworkParams global_disc;
  NetworkParams local_disc;
  OptimizerState global_gen_opt;
  OptimizerState local_gen_opt;
  OptimizerState global_disc_opt;
  OptimizerState local_disc_opt;
  int epoch = 0;            // completed epochs
  std::int64_t step = 0;    // completed optimisation steps

  static TrainingState initialize(const TrainConfig& config);
};

// Dropout RNG for network `tag` at global step `step`.
std::mt19937_64 step_rng(std::uint64_t seed, std::int64_t step, std::uint64_t tag);

struct StepOptions {
  bool update_discriminators = true;
  bool update_generators = true;
};

// One alternating update: D_G, D_H on detached generator outputs, then G on
// its objective, then H on its objective. Throws NumericError if any loss is
// non-finite; nothing is updated past the first non-finite loss.
StepReport train_step(TrainingState& state, const Batch& batch, const StepOptions& options = {});

struct TrainResult {
  std::vector<StepReport> history;
  std::vector<std::filesystem::path> checkpoints;
  std::filesystem::path final_checkpoint;
};

using StepCallback = std::function<void(const StepReport&)>;

// Runs epochs state.epoch .. config.epochs-1. Writes
//   <out>/loss_history.csv (appended across resumes),
//   <out>/checkpoint_epoch_NNNN.hpix every `checkpoint_every` epochs,
//   <out>/final.hpix.
// `out_dir` may be empty to skip all file output.
TrainResult train(TrainingState& state, const DatasetManifest& manifest,
                  const std::filesystem::path& out_dir, const StepCallback& on_step = {});

TrainResult train(const DatasetManifest& manifest, const TrainConfig& config,
                  const std::filesystem::path& out_dir, const StepCallback& on_step = {});

std::string loss_history_header();
std::string to_csv_row(const StepReport& r);

}  // namespace hpix
