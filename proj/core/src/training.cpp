#include "hpix/training.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "hpix/checkpoint.hpp"
#include "hpix/error.hpp"

namespace hpix {
namespace {

constexpr std::uint64_t kGlobalTag = 1;
constexpr std::uint64_t kLocalTag = 2;

void require_finite(double v, const char* name, const StepReport& r) {
  if (std::isfinite(v)) return;
  std::ostringstream os;
  os << "non-finite " << name << " at epoch " << r.epoch << " step " << r.step
     << " (G_adv=" << r.loss_G_adv << " G_l1=" << r.loss_G_l1 << " G_ds=" << r.loss_G_ds
     << " H_adv=" << r.loss_H_adv << " H_l1=" << r.loss_H_l1 << " DG=" << r.loss_DG
     << " DH=" << r.loss_DH << ")";
  throw NumericError(os.str());
}

}  // namespace

void LossWeights::validate() const {
  if (!(lambda_l1 > 0.0) || !std::isfinite(lambda_l1) || !(lambda_ds > 0.0) ||
      !std::isfinite(lambda_ds)) {
    throw ConfigError("loss weights must be finite and positive");
  }
}

ag::Var adversarial_loss(const ag::Var& logits, bool target_is_real) {
  return ag::bce_with_logits(logits, target_is_real ? 1.0 : 0.0);
}

double adversarial_loss(const Tensor& logits, bool target_is_real) {
  return adversarial_loss(ag::Var::borrowed_constant(logits), target_is_real).item();
}

double l1_loss(const Tensor& pred, const Tensor& target) {
  return ag::l1_loss(ag::Var::borrowed_constant(pred), ag::Var::borrowed_constant(target))
      .item();
}

LossBreakdown generator_global_loss(const ag::Var& y, const GeneratorVars& g_out,
                                    const ag::Var& dg_logits_fake, const LossWeights& w) {
  if (g_out.supervision_heads.empty()) {
    throw ContractError("generator_global_loss: global generator output has no supervision heads");
  }
  const ag::Var adv = adversarial_loss(dg_logits_fake, true);
  const ag::Var l1 = ag::scale(ag::l1_loss(g_out.final, y), w.lambda_l1);
  ag::Var head_sum = ag::l1_loss(g_out.supervision_heads.front(), y);
  for (std::size_t i = 1; i < g_out.supervision_heads.size(); ++i) {
    head_sum = ag::add(head_sum, ag::l1_loss(g_out.supervision_heads[i], y));
  }
  const ag::Var ds = ag::scale(
      head_sum, w.lambda_ds / static_cast<double>(g_out.supervision_heads.size()));
  LossBreakdown out;
  out.total = ag::add(ag::add(adv, l1), ds);
  out.adversarial = adv.item();
  out.l1 = l1.item();
  out.deep_supervision = ds.item();
  return out;
}

LossBreakdown generator_local_loss(const ag::Var& y, const ag::Var& h_final,
                                   const ag::Var& dh_logits_fake, const LossWeights& w) {
  const ag::Var adv = adversarial_loss(dh_logits_fake, true);
  const ag::Var l1 = ag::scale(ag::l1_loss(h_final, y), w.lambda_l1);
  LossBreakdown out;
  out.total = ag::add(adv, l1);
  out.adversarial = adv.item();
  out.l1 = l1.item();
  return out;
}

ag::Var discriminator_loss(const ag::Var& logits_real, const ag::Var& logits_fake) {
  if (logits_real.shape() != logits_fake.shape()) {
    throw ShapeError("discriminator_loss: real/fake logit maps differ in shape");
  }
  return ag::scale(ag::add(adversarial_loss(logits_real, true),
                           adversarial_loss(logits_fake, false)),
                   0.5);
}

OptimizerState::OptimizerState(const NetworkParams& params, AdamHyper h) : hyper(h) {
  for (const auto& [key, t] : params.tensors) {
    first_moment.emplace(key, Tensor(t.shape()));
    second_moment.emplace(key, Tensor(t.shape()));
  }
}

void OptimizerState::apply(NetworkParams& params, const Gradients& grads) {
  ++step;
  const double t = static_cast<double>(step);
  const double correct1 = 1.0 - std::pow(hyper.beta1, t);
  const double correct2 = 1.0 - std::pow(hyper.beta2, t);
  for (const auto& [key, g] : grads) {
    auto& p = params.tensors.at(key);
    auto& m = first_moment.at(key);
    auto& v = second_moment.at(key);
    if (g.shape() != p.shape() || m.shape() != p.shape()) {
      throw ContractError("optimizer: shape mismatch for " + key);
    }
    const auto gv = g.values();
    auto pv = p.values();
    auto mv = m.values();
    auto vv = v.values();
    for (std::size_t i = 0; i < pv.size(); ++i) {
      mv[i] = hyper.beta1 * mv[i] + (1.0 - hyper.beta1) * gv[i];
      vv[i] = hyper.beta2 * vv[i] + (1.0 - hyper.beta2) * gv[i] * gv[i];
      const double m_hat = mv[i] / correct1;
      const double v_hat = vv[i] / correct2;
      pv[i] -= hyper.learning_rate * m_hat / (std::sqrt(v_hat) + hyper.eps);
    }
  }
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");
  if (checkpoint_every < 0) throw ConfigError("checkpoint_every must be >= 0");
  if (base_channels < 1 || disc_base_channels < 1) throw ConfigError("channel widths must be >= 1");
  if (!(adam.learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  weights.validate();
  augmentation.validate();
  global_spec().validate();
  local_spec().validate();
  discriminator_spec().validate();
}

GlobalGeneratorSpec TrainConfig::global_spec() const {
  return GlobalGeneratorSpec::with_width(depth, base_channels);
}

LocalGeneratorSpec TrainConfig::local_spec() const {
  return LocalGeneratorSpec::with_width(depth, base_channels);
}

DiscriminatorSpec TrainConfig::discriminator_spec() const {
  return DiscriminatorSpec::with_width(disc_base_channels);
}

bool StepReport::all_finite() const {
  for (double v : {loss_G_adv, loss_G_l1, loss_G_ds, loss_G, loss_H_adv, loss_H_l1, loss_H,
                   loss_DG, loss_DH}) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

TrainingState TrainingState::initialize(const TrainConfig& config) {
  config.validate();
  TrainingState s;
  s.config = config;
  // Distinct parameter streams per network.
  if (config.baseline_pix2pix) {
    s.global_gen = NetworkParams{config.global_spec(), {}};
    s.global_disc = NetworkParams{config.discriminator_spec(), {}};
  } else {
    s.global_gen = build_network(config.global_spec(), mix_seed(config.seed, 101));
    s.global_disc = build_network(config.discriminator_spec(), mix_seed(config.seed, 103));
  }
  s.local_gen = build_network(config.local_spec(), mix_seed(config.seed, 102));
  s.local_disc = build_network(config.discriminator_spec(), mix_seed(config.seed, 104));
  s.global_gen_opt = OptimizerState(s.global_gen, config.adam);
  s.local_gen_opt = OptimizerState(s.local_gen, config.adam);
  s.global_disc_opt = OptimizerState(s.global_disc, config.adam);
  s.local_disc_opt = OptimizerState(s.local_disc, config.adam);
  return s;
}

std::mt19937_64 step_rng(std::uint64_t seed, std::int64_t step, std::uint64_t tag) {
  return std::mt19937_64(mix_seed(seed, static_cast<std::uint64_t>(step), tag));
}

StepReport train_step(TrainingState& state, const Batch& batch, const StepOptions& options) {
  const TrainConfig& cfg = state.config;
  const bool baseline = cfg.baseline_pix2pix;
  StepReport report;
  report.epoch = state.epoch;
  report.step = state.step + 1;

  const ag::Var x = ag::Var::borrowed_constant(batch.x);
  const ag::Var y = ag::Var::borrowed_constant(batch.y);

  auto global_rng = step_rng(cfg.seed, report.step, kGlobalTag);
  auto local_rng = step_rng(cfg.seed, report.step, kLocalTag);

  // Generator forwards shared by every phase of this step.
  const BoundParams g_params(state.global_gen, true);
  const BoundParams h_params(state.local_gen, true);
  GeneratorVars g_out;
  ag::Var h_condition;
  if (baseline) {
    h_condition = ag::Var::constant(Tensor(batch.x.shape()));
  } else {
    g_out = global_forward(g_params, x, ForwardContext{Mode::train, &global_rng});
    h_condition = cfg.joint_routing ? g_out.final : g_out.final.detach();
  }
  const GeneratorVars h_out =
      local_forward(h_params, x, h_condition, ForwardContext{Mode::train, &local_rng});

  // Discriminators on detached fakes.
  if (!baseline) {
    const BoundParams dg(state.global_disc, true);
    const ag::Var loss = discriminator_loss(discriminator_forward(dg, x, y),
                                            discriminator_forward(dg, x, g_out.final.detach()));
    report.loss_DG = loss.item();
    require_finite(report.loss_DG, "loss_DG", report);
    if (options.update_discriminators) {
      loss.backward();
      state.global_disc_opt.apply(state.global_disc, dg.gradients());
    }
  }
  {
    const BoundParams dh(state.local_disc, true);
    const ag::Var loss = discriminator_loss(discriminator_forward(dh, x, y),
                                            discriminator_forward(dh, x, h_out.final.detach()));
    report.loss_DH = loss.item();
    require_finite(report.loss_DH, "loss_DH", report);
    if (options.update_discriminators) {
      loss.backward();
      state.local_disc_opt.apply(state.local_disc, dh.gradients());
    }
  }

  // Generators against the freshly updated discriminators.
  LossBreakdown g_loss;
  if (!baseline) {
    const BoundParams dg(state.global_disc, false);
    g_loss = generator_global_loss(y, g_out, discriminator_forward(dg, x, g_out.final),
                                   cfg.weights);
    report.loss_G_adv = g_loss.adversarial;
    report.loss_G_l1 = g_loss.l1;
    report.loss_G_ds = g_loss.deep_supervision;
    report.loss_G = g_loss.total.item();
  }
  const BoundParams dh(state.local_disc, false);
  const LossBreakdown h_loss =
      generator_local_loss(y, h_out.final, discriminator_forward(dh, x, h_out.final), cfg.weights);
  report.loss_H_adv = h_loss.adversarial;
  report.loss_H_l1 = h_loss.l1;
  report.loss_H = h_loss.total.item();
  require_finite(report.loss_G, "loss_G", report);
  require_finite(report.loss_H, "loss_H", report);

  if (options.update_generators) {
    if (!baseline && cfg.joint_routing) {
      ag::add(g_loss.total, h_loss.total).backward();
    } else {
      if (!baseline) g_loss.total.backward();
      h_loss.total.backward();
    }
    if (!baseline) state.global_gen_opt.apply(state.global_gen, g_params.gradients());
    state.local_gen_opt.apply(state.local_gen, h_params.gradients());
  }

  state.step = report.step;
  return report;
}

std::string loss_history_header() {
  return "epoch,step,loss_G_adv,loss_G_l1,loss_G_ds,loss_H_adv,loss_H_l1,loss_DG,loss_DH";
}

std::string to_csv_row(const StepReport& r) {
  std::ostringstream os;
  os << std::setprecision(17) << r.epoch << ',' << r.step << ',' << r.loss_G_adv << ','
     << r.loss_G_l1 << ',' << r.loss_G_ds << ',' << r.loss_H_adv << ',' << r.loss_H_l1 << ','
     << r.loss_DG << ',' << r.loss_DH;
  return os.str();
}

TrainResult train(TrainingState& state, const DatasetManifest& manifest,
                  const std::filesystem::path& out_dir, const StepCallback& on_step) {
  namespace fs = std::filesystem;
  const TrainConfig& cfg = state.config;
  cfg.validate();
  BatchIterator batches(manifest, cfg.augmentation, cfg.batch_size, cfg.seed,
                        cfg.fixed_epoch_order);

  std::ofstream csv;
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    const fs::path csv_path = out_dir / "loss_history.csv";
    const bool fresh = !fs::exists(csv_path);
    csv.open(csv_path, std::ios::app);
    if (!csv) throw IngestionError("cannot open " + csv_path.string());
    if (fresh) csv << loss_history_header() << '\n';
  }

  TrainResult result;
  for (int epoch = state.epoch; epoch < cfg.epochs; ++epoch) {
    batches.start_epoch(epoch);
    state.epoch = epoch;
    while (true) {
      std::optional<Batch> batch;
      try {
        batch = batches.next();
      } catch (const IngestionError& e) {
        throw IngestionError("epoch " + std::to_string(epoch) + " step " +
                             std::to_string(state.step + 1) + ": " + e.what());
      }
      if (!batch) break;
      const StepReport report = train_step(state, *batch);
      result.history.push_back(report);
      if (csv.is_open()) csv << to_csv_row(report) << '\n' << std::flush;
      if (on_step) on_step(report);
    }
    state.epoch = epoch + 1;
    if (!out_dir.empty() && cfg.checkpoint_every > 0 && state.epoch % cfg.checkpoint_every == 0) {
      std::ostringstream name;
      name << "checkpoint_epoch_" << std::setw(4) << std::setfill('0') << state.epoch << ".hpix";
      const fs::path path = out_dir / name.str();
      save_checkpoint(path, state);
      result.checkpoints.push_back(path);
    }
  }
  if (!out_dir.empty()) {
    result.final_checkpoint = out_dir / "final.hpix";
    save_checkpoint(result.final_checkpoint, state);
  }
  return result;
}

TrainResult train(const DatasetManifest& manifest, const TrainConfig& config,
                  const std::filesystem::path& out_dir, const StepCallback& on_step) {
  TrainingState state = TrainingState::initialize(config);
  return train(state, manifest, out_dir, on_step);
}

}  // namespace hpix
