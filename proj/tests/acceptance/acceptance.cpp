// Acceptance runner. `hpix_acceptance <n>` checks criterion n (1..7) and
// prints one PASS/FAIL line; with no argument every criterion runs in turn.
// Exit status: 0 pass, 1 fail, 77 skipped (criterion 7 without a dataset).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <opencv2/imgproc.hpp>

#include "fixtures.hpp"
#include "hpix/checkpoint.hpp"
#include "hpix/inference.hpp"
#include "hpix/metrics.hpp"
#include "hpix/model.hpp"
#include "hpix/postprocess.hpp"
#include "hpix/training.hpp"

namespace hpix {
namespace {

using test::random_image;
using test::random_tensor;
using test::TempDir;

constexpr int kSkipped = 77;

// Collects failed checks; a criterion passes when none failed.
class Checks {
 public:
  void expect(bool ok, const std::string& what) {
    ++count_;
    if (!ok) failures_.push_back(what);
  }
  void note(const std::string& s) { notes_.push_back(s); }
  bool ok() const { return failures_.empty(); }

  std::string summary() const {
    std::ostringstream os;
    os << count_ - failures_.size() << "/" << count_ << " checks";
    for (const auto& n : notes_) os << "; " << n;
    for (const auto& f : failures_) os << "\n    failed: " << f;
    return os.str();
  }

 private:
  int count_ = 0;
  std::vector<std::string> failures_;
  std::vector<std::string> notes_;
};

std::string fmt(double v, int precision = 6) {
  std::ostringstream os;
  os.precision(precision);
  os << v;
  return os.str();
}

// ---- 1: shapes ------------------------------------------------------------

void shapes(Checks& c) {
  std::mt19937_64 rng(1);
  const Tensor x = random_tensor(rng, {1, 3, 256, 256});
  const Tensor y = random_tensor(rng, {1, 3, 256, 256});

  const NetworkParams g = build_network(GlobalGeneratorSpec{}, 1);
  const GeneratorOutput go = global_forward(g, x);
  c.expect(go.final.shape() == Shape{1, 3, 256, 256}, "G final is 1x3x256x256");
  c.expect(go.supervision_heads.size() == 6, "G has 6 supervision heads");
  for (const Tensor& h : go.supervision_heads) {
    c.expect(h.shape() == Shape{1, 3, 256, 256}, "head is 1x3x256x256");
    c.expect(h.max_abs() <= 1.0, "head within [-1,1]");
  }
  c.expect(go.final.max_abs() <= 1.0, "G final within [-1,1]");

  const LocalGeneratorSpec hs;
  c.expect(hs.input_channels == 6, "H consumes 6 channels");
  const NetworkParams h = build_network(hs, 2);
  const GeneratorOutput ho = local_forward(h, x, go.final);
  c.expect(ho.final.shape() == Shape{1, 3, 256, 256}, "H final is 1x3x256x256");
  c.expect(ho.final.max_abs() <= 1.0, "H final within [-1,1]");

  for (std::uint64_t seed : {3, 4}) {
    const NetworkParams d = build_network(DiscriminatorSpec{}, seed);
    const Tensor logits = discriminator_forward(d, x, y);
    c.expect(logits.shape() == Shape{1, 1, 26, 26}, "D emits 1x1x26x26");
  }
  c.note("G " + std::to_string(g.parameter_count()) + " params, H " +
         std::to_string(h.parameter_count()));
}

// ---- 2: gradients ---------------------------------------------------------

// Central differences on 10 random parameters of a depth-3, 8-channel network.
void finite_differences(Checks& c, const NetworkSpec& spec, const std::string& name,
                        std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  NetworkParams params = build_network(spec, seed);
  const bool disc = std::holds_alternative<DiscriminatorSpec>(spec);
  // A 16x16 pair is below the PatchGAN receptive field; D uses 64x64.
  const int s = disc ? 64 : 16;
  const Tensor x = random_tensor(rng, {1, 3, s, s});
  const Tensor aux = random_tensor(rng, {1, 3, s, s});
  const Tensor target =
      disc ? random_tensor(rng, {1, 1, 2, 2}) : random_tensor(rng, {1, 3, s, s});

  const auto loss = [&](const BoundParams& b) {
    const ForwardContext eval{Mode::eval, nullptr};
    const auto cx = ag::Var::constant(x), ca = ag::Var::constant(aux);
    const auto ct = ag::Var::constant(target);
    if (std::holds_alternative<GlobalGeneratorSpec>(spec)) {
      const GeneratorVars v = global_forward(b, cx, eval);
      return ag::add(ag::l1_loss(v.final, ct), ag::l1_loss(v.supervision_heads.at(0), ct));
    }
    if (std::holds_alternative<LocalGeneratorSpec>(spec)) {
      return ag::l1_loss(local_forward(b, cx, ca, eval).final, ct);
    }
    return ag::l1_loss(discriminator_forward(b, cx, ca), ct);
  };

  const BoundParams bound(params, true);
  loss(bound).backward();
  const Gradients grads = bound.gradients();

  std::vector<std::string> keys;
  for (const auto& [k, t] : params.tensors) keys.push_back(k);
  std::uniform_int_distribution<std::size_t> pick_key(0, keys.size() - 1);
  double worst = 0.0;
  for (int n = 0; n < 10; ++n) {
    const std::string& key = keys[pick_key(rng)];
    std::uniform_int_distribution<std::size_t> pick(0, params.at(key).size() - 1);
    const std::size_t idx = pick(rng);
    double& p = params.tensors.at(key).data()[idx];
    const double saved = p, h = 1e-5;
    p = saved + h;
    const double up = loss(BoundParams(params, false)).item();
    p = saved - h;
    const double down = loss(BoundParams(params, false)).item();
    p = saved;
    const double numeric = (up - down) / (2 * h);
    const double analytic = grads.at(key).data()[idx];
    const double scale = std::max(std::abs(analytic), std::abs(numeric));
    // Both sides below round-off: nothing to compare.
    if (scale < 1e-9) continue;
    const double rel = std::abs(analytic - numeric) / scale;
    worst = std::max(worst, rel);
    c.expect(rel <= 1e-3, name + " " + key + "[" + std::to_string(idx) + "] analytic " +
                              fmt(analytic) + " numeric " + fmt(numeric));
  }
  c.note(name + " worst rel err " + fmt(worst, 3));
}

void expect_nonzero(Checks& c, const std::string& name, const NetworkParams& p,
                    const Gradients& g) {
  int zero = 0;
  for (const auto& [key, t] : p.tensors) {
    const auto it = g.find(key);
    const bool ok = it != g.end() && it->second.squared_norm() > 0.0 && it->second.all_finite();
    zero += !ok;
    c.expect(ok, name + " " + key + " has a nonzero gradient");
  }
  c.note(name + " " + std::to_string(p.tensors.size() - zero) + "/" +
         std::to_string(p.tensors.size()) + " arrays");
}

// Every parameter array of the four full-depth networks (reduced width)
// receives gradient under the training objectives.
void gradient_flow(Checks& c) {
  TrainConfig cfg;
  cfg.base_channels = 8;
  cfg.disc_base_channels = 8;
  cfg.seed = 21;
  const TrainingState st = TrainingState::initialize(cfg);
  std::mt19937_64 rng(22);
  const auto x = ag::Var::constant(random_tensor(rng, {1, 3, 256, 256}));
  const auto y = ag::Var::constant(random_tensor(rng, {1, 3, 256, 256}));
  std::mt19937_64 drop(23);
  const ForwardContext train{Mode::train, &drop};

  const BoundParams g(st.global_gen, true), h(st.local_gen, true);
  const BoundParams dg(st.global_disc, true), dh(st.local_disc, true);
  const GeneratorVars gv = global_forward(g, x, train);
  const GeneratorVars hv = local_forward(h, x, gv.final, train);

  generator_global_loss(y, gv, discriminator_forward(dg, x, gv.final), cfg.weights).total.backward();
  generator_local_loss(y, hv.final, discriminator_forward(dh, x, hv.final), cfg.weights)
      .total.backward();
  expect_nonzero(c, "G", st.global_gen, g.gradients());
  expect_nonzero(c, "H", st.local_gen, h.gradients());

  // Fresh D bindings so only the discriminator objectives contribute.
  const BoundParams dg2(st.global_disc, true), dh2(st.local_disc, true);
  const auto gf = ag::Var::constant(gv.final.value());
  const auto hf = ag::Var::constant(hv.final.value());
  discriminator_loss(discriminator_forward(dg2, x, y), discriminator_forward(dg2, x, gf)).backward();
  discriminator_loss(discriminator_forward(dh2, x, y), discriminator_forward(dh2, x, hf)).backward();
  expect_nonzero(c, "D_G", st.global_disc, dg2.gradients());
  expect_nonzero(c, "D_H", st.local_disc, dh2.gradients());
}

void gradients(Checks& c) {
  finite_differences(c, GlobalGeneratorSpec::with_width(3, 8), "G", 11);
  finite_differences(c, LocalGeneratorSpec::with_width(3, 8), "H", 12);
  finite_differences(c, DiscriminatorSpec::with_width(8), "D", 13);
  gradient_flow(c);
}

// ---- 3: loss and metric oracles -----------------------------------------

double naive_accuracy(const cv::Mat& a, const cv::Mat& b, int tol) {
  int ok = 0;
  for (int r = 0; r < a.rows; ++r)
    for (int col = 0; col < a.cols; ++col) {
      bool pass = true;
      for (int k = 0; k < 3; ++k)
        pass = pass && std::abs(a.at<cv::Vec3b>(r, col)[k] - b.at<cv::Vec3b>(r, col)[k]) <= tol;
      ok += pass;
    }
  return static_cast<double>(ok) / (a.rows * a.cols);
}

double naive_psnr(const cv::Mat& a, const cv::Mat& b) {
  double sse = 0;
  for (int r = 0; r < a.rows; ++r)
    for (int col = 0; col < a.cols; ++col)
      for (int k = 0; k < 3; ++k) {
        const double d = a.at<cv::Vec3b>(r, col)[k] - b.at<cv::Vec3b>(r, col)[k];
        sse += d * d;
      }
  return 10 * std::log10(255.0 * 255.0 / (sse / (a.rows * a.cols * 3.0)));
}

// Full 2-D Gaussian window at every valid position.
double naive_ssim(const cv::Mat& a, const cv::Mat& b) {
  constexpr int win = 11;
  double g[win][win];
  double total = 0;
  for (int i = 0; i < win; ++i)
    for (int j = 0; j < win; ++j) {
      g[i][j] = std::exp(-((i - 5) * (i - 5) + (j - 5) * (j - 5)) / (2 * 1.5 * 1.5));
      total += g[i][j];
    }
  const double c1 = std::pow(0.01 * 255, 2), c2 = std::pow(0.03 * 255, 2);
  double sum = 0;
  for (int k = 0; k < 3; ++k) {
    double channel = 0;
    int count = 0;
    for (int r = 0; r + win <= a.rows; ++r)
      for (int col = 0; col + win <= a.cols; ++col) {
        double mx = 0, my = 0, xx = 0, yy = 0, xy = 0;
        for (int i = 0; i < win; ++i)
          for (int j = 0; j < win; ++j) {
            const double w = g[i][j] / total;
            const double p = a.at<cv::Vec3b>(r + i, col + j)[k];
            const double q = b.at<cv::Vec3b>(r + i, col + j)[k];
            mx += w * p;
            my += w * q;
            xx += w * p * p;
            yy += w * q * q;
            xy += w * p * q;
          }
        channel += ((2 * mx * my + c1) * (2 * (xy - mx * my) + c2)) /
                   ((mx * mx + my * my + c1) * (xx - mx * mx + yy - my * my + c2));
        ++count;
      }
    sum += channel / count;
  }
  return sum / 3;
}

void oracles(Checks& c) {
  const double ln2 = std::log(2.0);
  c.expect(std::abs(adversarial_loss(Tensor({1, 1, 26, 26}, 0.0), true) - ln2) <= 1e-6,
           "adversarial_loss(0, real) = ln 2");
  c.expect(std::abs(adversarial_loss(Tensor({1, 1, 26, 26}, 0.0), false) - ln2) <= 1e-6,
           "adversarial_loss(0, fake) = ln 2");

  std::mt19937_64 rng(31);
  double worst_l1 = 0, worst_acc = 0, worst_psnr = 0, worst_ssim = 0;
  for (int n = 0; n < 50; ++n) {
    const Tensor ta = random_tensor(rng, {1, 3, 16, 16}), tb = random_tensor(rng, {1, 3, 16, 16});
    double l1 = 0;
    for (std::size_t i = 0; i < ta.size(); ++i) l1 += std::abs(ta.data()[i] - tb.data()[i]);
    worst_l1 = std::max(worst_l1, std::abs(l1_loss(ta, tb) - l1 / ta.size()));

    const cv::Mat a = random_image(rng, 16, 16);
    cv::Mat b = a.clone();
    // Mix of near and far pixels so accuracy is not trivially 0 or 1.
    std::uniform_int_distribution<int> noise(-8, 8);
    for (int r = 0; r < 16; ++r)
      for (int col = 0; col < 16; ++col)
        for (int k = 0; k < 3; ++k) {
          auto& v = b.at<cv::Vec3b>(r, col)[k];
          v = cv::saturate_cast<uchar>(v + noise(rng) * (1 + (r + col) % 4));
        }
    worst_acc = std::max(worst_acc, std::abs(pixel_accuracy(a, b) - naive_accuracy(a, b, 5)));
    worst_psnr = std::max(worst_psnr, std::abs(psnr(a, b) - naive_psnr(a, b)));
    worst_ssim = std::max(worst_ssim, std::abs(ssim(a, b) - naive_ssim(a, b)));
  }
  c.expect(worst_l1 <= 1e-6, "l1_loss matches naive loop, max diff " + fmt(worst_l1));
  c.expect(worst_acc <= 1e-6, "pixel_accuracy matches naive loop, max diff " + fmt(worst_acc));
  c.expect(worst_psnr <= 1e-6, "psnr matches naive loop, max diff " + fmt(worst_psnr));
  c.expect(worst_ssim <= 1e-6, "ssim matches naive loop, max diff " + fmt(worst_ssim));
  c.note("max |diff| l1 " + fmt(worst_l1, 2) + " acc " + fmt(worst_acc, 2) + " psnr " +
         fmt(worst_psnr, 2) + " ssim " + fmt(worst_ssim, 2));

  // Uniform difference of 5 on every channel.
  const cv::Mat base(32, 32, CV_8UC3, cv::Scalar(100, 100, 100));
  const cv::Mat plus5(32, 32, CV_8UC3, cv::Scalar(105, 105, 105));
  const double p = psnr(plus5, base);
  c.expect(std::abs(p - 10 * std::log10(65025.0 / 25.0)) <= 1e-9 && std::abs(p - 34.151) < 5e-4,
           "psnr at uniform diff 5 = 34.151 dB, got " + fmt(p, 8));

  const cv::Mat black(32, 32, CV_8UC3, cv::Scalar::all(0));
  const cv::Mat white(32, 32, CV_8UC3, cv::Scalar::all(255));
  const double c1 = std::pow(0.01 * 255, 2);
  const double s = ssim(black, white);
  c.expect(std::abs(s - c1 / (255.0 * 255.0 + c1)) <= 1e-12 && std::abs(s - 1.0e-4) < 1e-6,
           "ssim constant-vs-constant = C1/(255^2+C1) ~ 1.0e-4, got " + fmt(s));

  cv::Mat t(2, 2, CV_8UC3, cv::Scalar(10, 20, 30));
  cv::Mat q = t.clone();
  q.at<cv::Vec3b>(1, 1)[2] = 36;
  c.expect(pixel_accuracy(q, t) == 0.75, "pixel_accuracy on the 2x2 case = 0.75");
}

// ---- 4 and 6: overfit smoke runs -------------------------------------------

constexpr int kPairs = 4;
constexpr int kSteps = 200;

TrainConfig overfit_config() {
  TrainConfig cfg;
  cfg.epochs = kSteps / kPairs;
  cfg.batch_size = 1;
  cfg.seed = 7;
  cfg.checkpoint_every = 0;
  cfg.base_channels = 8;
  cfg.disc_base_channels = 8;
  cfg.augmentation.enabled = false;
  return cfg;
}

struct OverfitData {
  TempDir dir{"acceptance"};
  DatasetManifest manifest;

  OverfitData() {
    test::write_synthetic_dataset(dir.path(), "train", kPairs, 256, 3);
    manifest = DatasetManifest::scan(dir.path(), Split::train);
  }
};

void overfit(Checks& c) {
  const OverfitData data;
  TrainingState st = TrainingState::initialize(overfit_config());
  const TrainResult r = train(st, data.manifest, {});
  c.expect(r.history.size() == kSteps, "200 steps taken");
  if (r.history.size() != kSteps) return;

  bool finite = true;
  for (const auto& s : r.history) finite = finite && s.all_finite();
  c.expect(finite, "every reported loss is finite");

  const double first = r.history.front().loss_H_l1;
  double tail = 0;
  for (int i = kSteps - kPairs; i < kSteps; ++i) tail += r.history[i].loss_H_l1;
  tail /= kPairs;
  const double drop = 1.0 - tail / first;
  c.expect(drop >= 0.5, "loss_H_l1 falls by >= 50%: step 1 " + fmt(first) +
                            ", last epoch mean " + fmt(tail));
  c.note("loss_H_l1 " + fmt(first, 4) + " -> " + fmt(tail, 4) + " (-" + fmt(100 * drop, 3) + "%)");

  // The trained local discriminator must react to the map it is shown.
  std::mt19937_64 rng(0);
  AugmentationPolicy off = st.config.augmentation;
  const ModelPair a = preprocess(load_entry(data.manifest.entries[0]), off, rng);
  const ModelPair b = preprocess(load_entry(data.manifest.entries[1]), off, rng);
  const Tensor la = discriminator_forward(st.local_disc, a.x, a.y);
  const Tensor lb = discriminator_forward(st.local_disc, a.x, b.y);
  double diff = 0;
  for (std::size_t i = 0; i < la.size(); ++i) diff = std::max(diff, std::abs(la.data()[i] - lb.data()[i]));
  c.expect(diff > 1e-6, "swapping y changes D_H logits, max |diff| " + fmt(diff));
}

void reproducibility(Checks& c) {
  const OverfitData data;
  TrainingState s1 = TrainingState::initialize(overfit_config());
  TrainingState s2 = TrainingState::initialize(overfit_config());
  const TrainResult a = train(s1, data.manifest, {});
  const TrainResult b = train(s2, data.manifest, {});
  c.expect(a.history.size() == b.history.size(), "equal run lengths");
  bool identical = a.history.size() == b.history.size();
  for (std::size_t i = 0; identical && i < a.history.size(); ++i) {
    identical = to_csv_row(a.history[i]) == to_csv_row(b.history[i]);
  }
  c.expect(identical, "two seeded runs give identical StepReport sequences");

  // Stop at the halfway epoch, checkpoint, reload and finish.
  TrainConfig half = overfit_config();
  half.epochs /= 2;
  TrainingState p = TrainingState::initialize(half);
  train(p, data.manifest, {});
  const auto ckpt = data.dir / "half.hpix";
  save_checkpoint(ckpt, p);
  TrainingState resumed = load_checkpoint(ckpt);
  resumed.config.epochs = overfit_config().epochs;
  const TrainResult rest = train(resumed, data.manifest, {});
  const std::size_t offset = a.history.size() - rest.history.size();
  c.expect(offset == static_cast<std::size_t>(half.epochs * kPairs), "resume continues at step 100");

  double worst = 0;
  for (std::size_t i = 0; i < rest.history.size() && offset + i < a.history.size(); ++i) {
    const StepReport& x = rest.history[i];
    const StepReport& y = a.history[offset + i];
    c.expect(x.step == y.step && x.epoch == y.epoch, "resumed step counters line up");
    for (auto m : {&StepReport::loss_G_adv, &StepReport::loss_G_l1, &StepReport::loss_G_ds,
                   &StepReport::loss_G, &StepReport::loss_H_adv, &StepReport::loss_H_l1,
                   &StepReport::loss_H, &StepReport::loss_DG, &StepReport::loss_DH}) {
      worst = std::max(worst, std::abs(x.*m - y.*m));
    }
  }
  c.expect(worst <= 1e-6, "resumed losses within 1e-6, max |diff| " + fmt(worst));
  c.note("resume max |diff| " + fmt(worst, 3));
}

// ---- 5: post-processing ---------------------------------------------------

cv::Mat plus_sign(cv::Point center, int margin) {
  cv::Mat m(256, 256, CV_8UC1, cv::Scalar(0));
  const int h = 7;  // 15 px wide roads
  cv::rectangle(m, cv::Point(margin, center.y - h), cv::Point(255 - margin, center.y + h),
                cv::Scalar(255), cv::FILLED);
  cv::rectangle(m, cv::Point(center.x - h, margin), cv::Point(center.x + h, 255 - margin),
                cv::Scalar(255), cv::FILLED);
  return m;
}

void postprocessing(Checks& c) {
  const auto plus = road_intersections(plus_sign({128, 128}, 20));
  c.expect(plus.size() == 1, "plus sign gives exactly 1 intersection, got " +
                                 std::to_string(plus.size()));
  if (plus.size() == 1) {
    const double d = std::hypot(plus[0].row - 128, plus[0].col - 128);
    c.expect(d <= 5.0, "intersection within 5 px of centre, off by " + fmt(d, 3));
  }

  cv::Mat bars(256, 256, CV_8UC1, cv::Scalar(0));
  cv::rectangle(bars, cv::Rect(20, 80, 216, 15), cv::Scalar(255), cv::FILLED);
  cv::rectangle(bars, cv::Rect(20, 160, 216, 15), cv::Scalar(255), cv::FILLED);
  c.expect(road_intersections(bars).empty(), "parallel bars give 0 intersections");
  c.expect(road_intersections(cv::Mat(256, 256, CV_8UC1, cv::Scalar(0))).empty(),
           "blank mask gives 0 intersections");

  cv::Mat squares(128, 128, CV_8UC1, cv::Scalar(0));
  cv::rectangle(squares, cv::Rect(5, 5, 10, 10), cv::Scalar(255), cv::FILLED);
  cv::rectangle(squares, cv::Rect(30, 30, 20, 20), cv::Scalar(255), cv::FILLED);
  cv::rectangle(squares, cv::Rect(70, 70, 30, 30), cv::Scalar(255), cv::FILLED);
  const BuildingLabelMap labels = classify_buildings(squares, 1.0);
  std::vector<std::pair<double, BuildingClass>> got;
  for (const auto& b : labels.buildings) got.emplace_back(b.area_m2, b.label);
  std::sort(got.begin(), got.end());
  const std::vector<std::pair<double, BuildingClass>> want{
      {100.0, BuildingClass::small}, {400.0, BuildingClass::medium}, {900.0, BuildingClass::large}};
  c.expect(got == want, "squares of 10, 20, 30 px at 1 m/px are small, medium, large");

  const auto base = road_intersections(plus_sign({128, 128}, 60));
  c.expect(base.size() == 1, "centred plus sign has 1 intersection");
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> off(-30, 30);
  int equivariant = 0;
  for (int k = 0; k < 10 && base.size() == 1; ++k) {
    const int dr = off(rng), dc = off(rng);
    const auto moved = road_intersections(plus_sign({128 + dc, 128 + dr}, 60));
    const bool ok = moved.size() == 1 && moved[0].row == base[0].row + dr &&
                    moved[0].col == base[0].col + dc;
    equivariant += ok;
    c.expect(ok, "shift (" + std::to_string(dr) + "," + std::to_string(dc) + ") moves the intersection");
  }
  c.note(std::to_string(equivariant) + "/10 offsets equivariant");
}

// ---- 7: full reproduction ---------------------------------------------------

// Needs HPIX_FULL_CKPT (a 200-epoch checkpoint) and HPIX_MAPS_DATA (the maps
// dataset root with a val/ split, or a manifest file).
int full_reproduction(Checks& c) {
  const char* ckpt = std::getenv("HPIX_FULL_CKPT");
  const char* data = std::getenv("HPIX_MAPS_DATA");
  if (ckpt == nullptr || data == nullptr) return kSkipped;
  const Translator translator = Translator::from_checkpoint(ckpt);
  const EvaluationResult r = evaluate(translator, DatasetManifest::open(data, Split::test));
  const MetricReport& m = r.final;
  c.expect(std::abs(100 * m.pixel_accuracy - 61.04) <= 5.0,
           "pixel accuracy " + fmt(100 * m.pixel_accuracy, 4) + "% within 5 points of 61.04%");
  c.expect(std::abs(m.ssim - 0.75) <= 0.05, "SSIM " + fmt(m.ssim, 4) + " within 0.05 of 0.75");
  c.expect(std::abs(m.psnr_db - 26.98) <= 1.5, "PSNR " + fmt(m.psnr_db, 4) + " within 1.5 dB of 26.98");
  c.note(std::to_string(m.n_samples) + " test pairs; " + kAccuracySemantics);
  return 0;
}

struct Criterion {
  int id;
  const char* title;
  std::function<int(Checks&)> run;
};

template <typename F>
std::function<int(Checks&)> plain(F f) {
  return [f](Checks& c) {
    f(c);
    return 0;
  };
}

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> all{
      {1, "shape suite", plain(shapes)},
      {2, "gradient suite", plain(gradients)},
      {3, "loss oracle suite", plain(oracles)},
      {4, "overfit smoke test", plain(overfit)},
      {5, "post-processing suite", plain(postprocessing)},
      {6, "reproducibility", plain(reproducibility)},
      {7, "full reproduction", full_reproduction},
  };
  return all;
}

int run_one(const Criterion& cr) {
  Checks checks;
  const auto t0 = std::chrono::steady_clock::now();
  int status = 0;
  try {
    status = cr.run(checks);
  } catch (const std::exception& e) {
    checks.expect(false, std::string("exception: ") + e.what());
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::ostringstream time;
  time.precision(3);
  time << secs << " s";
  if (status == kSkipped) {
    std::cout << "criterion " << cr.id << " NOT RUN  " << cr.title
              << ": set HPIX_FULL_CKPT and HPIX_MAPS_DATA to evaluate\n";
    return kSkipped;
  }
  std::cout << "criterion " << cr.id << (checks.ok() ? " PASS  " : " FAIL  ") << cr.title
            << " (" << time.str() << "): " << checks.summary() << "\n"
            << std::flush;
  return checks.ok() ? 0 : 1;
}

}  // namespace
}  // namespace hpix

int main(int argc, char** argv) {
  const auto& all = hpix::criteria();
  if (argc > 1) {
    const int id = std::atoi(argv[1]);
    for (const auto& cr : all) {
      if (cr.id == id) return hpix::run_one(cr);
    }
    std::cerr << "usage: hpix_acceptance [1-7]\n";
    return 2;
  }
  int failed = 0;
  for (const auto& cr : all) failed += hpix::run_one(cr) == 1;
  return failed == 0 ? 0 : 1;
}
