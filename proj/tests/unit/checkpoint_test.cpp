#include <gtest/gtest.h>

#include <fstream>

#include "fixtures.hpp"
#include "hpix/checkpoint.hpp"
#include "hpix/error.hpp"
#include "hpix/image.hpp"
#include "hpix/inference.hpp"

namespace hpix {
namespace {

using test::TempDir;

TrainConfig small_config() {
  TrainConfig c;
  c.epochs = 1;
  c.seed = 21;
  c.depth = 6;
  c.base_channels = 4;
  c.disc_base_channels = 4;
  c.augmentation.crop = 64;
  c.augmentation.jitter_resize = 72;
  c.checkpoint_every = 0;
  return c;
}

std::string read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

TEST(Checkpoint, RoundTripRestoresEverything) {
  TempDir dir("ckpt");
  TrainingState s = TrainingState::initialize(small_config());
  std::mt19937_64 rng(1);
  Batch b{test::random_tensor(rng, {1, 3, 64, 64}), test::random_tensor(rng, {1, 3, 64, 64}), {"a"}};
  train_step(s, b);
  s.epoch = 7;
  save_checkpoint(dir / "s.hpix", s);
  const TrainingState r = load_checkpoint(dir / "s.hpix");

  EXPECT_EQ(r.epoch, 7);
  EXPECT_EQ(r.step, 1);
  EXPECT_EQ(r.config.seed, 21u);
  EXPECT_EQ(r.config.depth, 6);
  EXPECT_EQ(r.config.augmentation.crop, 64);
  EXPECT_EQ(r.global_gen.spec, s.global_gen.spec);
  EXPECT_EQ(r.local_disc.spec, s.local_disc.spec);
  EXPECT_EQ(r.global_gen.tensors, s.global_gen.tensors);
  EXPECT_EQ(r.local_gen.tensors, s.local_gen.tensors);
  EXPECT_EQ(r.global_disc.tensors, s.global_disc.tensors);
  EXPECT_EQ(r.local_disc_opt.first_moment, s.local_disc_opt.first_moment);
  EXPECT_EQ(r.global_gen_opt.second_moment, s.global_gen_opt.second_moment);
  EXPECT_EQ(r.local_gen_opt.step, 1);
  EXPECT_EQ(read_bytes(dir / "s.hpix").substr(0, 13), "hpix-ckpt-v1\n");

  save_checkpoint(dir / "t.hpix", r);
  EXPECT_EQ(read_bytes(dir / "s.hpix"), read_bytes(dir / "t.hpix"));
}

TEST(Checkpoint, RejectsForeignAndTruncatedFiles) {
  TempDir dir("bad");
  EXPECT_THROW(load_checkpoint(dir / "missing.hpix"), IngestionError);
  std::ofstream(dir / "foreign.hpix") << "PK\x03\x04 something else";
  EXPECT_THROW(load_checkpoint(dir / "foreign.hpix"), IngestionError);

  save_checkpoint(dir / "ok.hpix", TrainingState::initialize(small_config()));
  const std::string bytes = read_bytes(dir / "ok.hpix");
  std::ofstream(dir / "short.hpix", std::ios::binary) << bytes.substr(0, bytes.size() - 100);
  EXPECT_THROW(load_checkpoint(dir / "short.hpix"), IngestionError);
}

TEST(Checkpoint, BaselineStoresNoGlobalNetworks) {
  TempDir dir("base");
  TrainConfig c = small_config();
  c.baseline_pix2pix = true;
  save_checkpoint(dir / "b.hpix", TrainingState::initialize(c));
  const TrainingState r = load_checkpoint(dir / "b.hpix");
  EXPECT_TRUE(r.config.baseline_pix2pix);
  EXPECT_TRUE(r.global_gen.tensors.empty());
  EXPECT_FALSE(r.local_gen.tensors.empty());
}

TEST(ConfigJson, RoundTripAndErrors) {
  TrainConfig c = small_config();
  c.weights.lambda_l1 = 42;
  c.joint_routing = true;
  c.augmentation.enabled = false;
  const TrainConfig r = config_from_json(config_to_json(c));
  EXPECT_EQ(r.weights.lambda_l1, 42);
  EXPECT_TRUE(r.joint_routing);
  EXPECT_FALSE(r.augmentation.enabled);
  EXPECT_EQ(r.depth, 6);
  EXPECT_EQ(config_from_json("{}").epochs, 200);
  EXPECT_THROW(config_from_json("{not json"), ConfigError);
}

TEST(Translator, PreservesSizeAndIsDeterministic) {
  TrainingState s = TrainingState::initialize(small_config());
  const Translator t(s);
  EXPECT_EQ(t.tile_size(), 64);
  EXPECT_TRUE(t.has_global());
  std::mt19937_64 rng(2);
  const cv::Mat tile = test::random_image(rng, 90, 70);
  const TranslatedTile a = t.translate(tile);
  const TranslatedTile b = t.translate(tile);
  EXPECT_EQ(a.final.size(), tile.size());
  EXPECT_EQ(a.global.size(), tile.size());
  EXPECT_EQ(cv::norm(a.final, b.final, cv::NORM_INF), 0.0);
  EXPECT_THROW(t.translate(cv::Mat()), InputError);
}

TEST(Evaluate, ReportsFinalAndGlobalMetrics) {
  TempDir dir("eval");
  test::write_synthetic_dataset(dir.path(), "val", 3, 64, 3);
  const auto manifest = DatasetManifest::scan(dir.path(), Split::test);
  const Translator t(TrainingState::initialize(small_config()));
  int visited = 0;
  const EvaluationResult r = evaluate(t, manifest, [&](const EvaluatedPair& p) {
    ++visited;
    EXPECT_EQ(p.final.size(), cv::Size(64, 64));
    EXPECT_FALSE(p.global.empty());
  });
  EXPECT_EQ(visited, 3);
  EXPECT_EQ(r.final.n_samples, 3u);
  ASSERT_TRUE(r.global_only.has_value());
  EXPECT_GE(r.final.pixel_accuracy, 0.0);
  EXPECT_LE(r.final.ssim, 1.0);
  const std::string json = to_json(r);
  for (const char* key : {"pixel_accuracy", "psnr_db", "ssim", "n_samples", "global_only",
                          "accuracy_semantics"}) {
    EXPECT_NE(json.find(key), std::string::npos) << key;
  }
  EXPECT_THROW(evaluate(t, DatasetManifest{}), ConfigError);
}

TEST(Evaluate, TargetsAgainstThemselvesScorePerfectly) {
  // Identity harness: the metric side of evaluation with pred == target.
  TempDir dir("ident");
  test::write_synthetic_dataset(dir.path(), "val", 2, 64, 4);
  const auto manifest = DatasetManifest::scan(dir.path(), Split::test);
  const Translator t(TrainingState::initialize(small_config()));
  MetricReport self;
  evaluate(t, manifest, [&](const EvaluatedPair& p) { self.add_sample(p.target, p.target); });
  const MetricReport m = self.mean();
  EXPECT_EQ(m.pixel_accuracy, 1.0);
  EXPECT_NEAR(m.ssim, 1.0, 1e-9);
}

}  // namespace
}  // namespace hpix
