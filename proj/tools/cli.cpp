#include "cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <nlohmann/json.hpp>
#include <opencv2/imgproc.hpp>
#include <optional>
#include <sstream>

#include "grid.hpp"
#include "hpix/checkpoint.hpp"
#include "hpix/error.hpp"
#include "hpix/image.hpp"
#include "hpix/inference.hpp"
#include "hpix/postprocess.hpp"
#include "hpix/training.hpp"

#ifndef HPIX_VERSION
#define HPIX_VERSION "unknown"
#endif

namespace hpix::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr const char* kPrecedence =
    "Settings resolve as: command-line flags, then --config file, then built-in defaults. "
    "The seed falls back to $HPIX_SEED when neither a flag nor the config file sets it.";

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + p.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::uint64_t parse_seed(const std::string& text, const char* origin) {
  std::size_t used = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size() || text.front() == '-') {
    throw ConfigError(std::string(origin) + " is not a non-negative integer: '" + text + "'");
  }
  return v;
}

std::optional<std::uint64_t> env_seed() {
  const char* v = std::getenv("HPIX_SEED");
  if (v == nullptr || *v == '\0') return std::nullopt;
  return parse_seed(v, "HPIX_SEED");
}

void check_device(const std::string& device) {
  if (device != "cpu") {
    throw ConfigError("device '" + device + "' is not available; this build runs on cpu only");
  }
}

// Snapshot of the fully resolved settings of one invocation.
void write_run_config(const fs::path& dir, const std::string& command, json resolved) {
  fs::create_directories(dir);
  json j;
  j["command"] = command;
  j["version"] = HPIX_VERSION;
  j["device"] = "cpu";
  j["settings"] = std::move(resolved);
  write_text_atomic(dir / "run_config.json", j.dump(2) + "\n");
}

fs::path parent_or_cwd(const fs::path& p) {
  const fs::path parent = p.parent_path();
  return parent.empty() ? fs::path(".") : parent;
}

bool is_image_file(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg" || ext == ".tif" || ext == ".tiff" ||
         ext == ".bmp";
}

std::string fixed(double v, int digits = 4) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  std::string data;
  std::string out;
  std::string config;
  std::string resume;
  std::string device = "cpu";
  int epochs = 0;
  int batch_size = 0;
  double lambda_l1 = 0;
  double lambda_ds = 0;
  double learning_rate = 0;
  std::uint64_t seed = 0;
  int checkpoint_every = 0;
  int depth = 0;
  int base_channels = 0;
  int disc_base_channels = 0;
  bool joint_routing = false;
  bool baseline = false;
  bool no_augment = false;
  bool fixed_order = false;
  bool quiet = false;
};

struct TrainOptions {
  CLI::Option* epochs;
  CLI::Option* batch_size;
  CLI::Option* lambda_l1;
  CLI::Option* lambda_ds;
  CLI::Option* learning_rate;
  CLI::Option* seed;
  CLI::Option* checkpoint_every;
  CLI::Option* depth;
  CLI::Option* base_channels;
  CLI::Option* disc_base_channels;
  CLI::Option* joint_routing;
  CLI::Option* baseline;
  CLI::Option* no_augment;
  CLI::Option* fixed_order;
};

TrainConfig resolve_train_config(const TrainArgs& a, const TrainOptions& o) {
  TrainConfig cfg;
  bool seed_from_file = false;
  if (!a.config.empty()) {
    const std::string text = read_file(a.config);
    cfg = config_from_json(text);
    try {
      seed_from_file = json::parse(text).contains("seed");
    } catch (const json::exception&) {
    }
  }
  if (o.epochs->count()) cfg.epochs = a.epochs;
  if (o.batch_size->count()) cfg.batch_size = a.batch_size;
  if (o.lambda_l1->count()) cfg.weights.lambda_l1 = a.lambda_l1;
  if (o.lambda_ds->count()) cfg.weights.lambda_ds = a.lambda_ds;
  if (o.learning_rate->count()) cfg.adam.learning_rate = a.learning_rate;
  if (o.checkpoint_every->count()) cfg.checkpoint_every = a.checkpoint_every;
  if (o.depth->count()) cfg.depth = a.depth;
  if (o.base_channels->count()) cfg.base_channels = a.base_channels;
  if (o.disc_base_channels->count()) cfg.disc_base_channels = a.disc_base_channels;
  if (o.joint_routing->count()) cfg.joint_routing = true;
  if (o.baseline->count()) cfg.baseline_pix2pix = true;
  if (o.no_augment->count()) cfg.augmentation.enabled = false;
  if (o.fixed_order->count()) cfg.fixed_epoch_order = true;
  if (o.seed->count()) {
    cfg.seed = a.seed;
  } else if (!seed_from_file) {
    if (auto s = env_seed()) cfg.seed = *s;
  }
  cfg.validate();
  return cfg;
}

int run_train(const TrainArgs& a, const TrainOptions& o, std::ostream& out) {
  check_device(a.device);
  // Config problems are reported before touching the dataset; networks are
  // built only once the dataset is known to be readable.
  std::optional<TrainConfig> fresh;
  TrainingState state;
  if (!a.resume.empty()) {
    for (CLI::Option* opt : {o.batch_size, o.lambda_l1, o.lambda_ds, o.learning_rate, o.seed,
                             o.depth, o.base_channels, o.disc_base_channels, o.joint_routing,
                             o.baseline, o.no_augment, o.fixed_order}) {
      if (opt->count()) {
        throw ConfigError(opt->get_name() + " cannot be changed when resuming; it is read from "
                          "the checkpoint");
      }
    }
    if (!a.config.empty()) throw ConfigError("--config cannot be combined with --resume");
    state = load_checkpoint(a.resume);
    if (o.epochs->count()) state.config.epochs = a.epochs;
    if (o.checkpoint_every->count()) state.config.checkpoint_every = a.checkpoint_every;
    state.config.validate();
    if (state.epoch >= state.config.epochs) {
      throw ConfigError("checkpoint already completed " + std::to_string(state.epoch) +
                        " epochs; raise --epochs to continue");
    }
  } else {
    fresh = resolve_train_config(a, o);
    fresh->validate();
  }
  const DatasetManifest manifest = DatasetManifest::open(a.data, Split::train);
  if (fresh) state = TrainingState::initialize(*fresh);

  const fs::path out_dir(a.out);
  json resolved = json::parse(config_to_json(state.config));
  resolved["data"] = fs::absolute(a.data).string();
  resolved["out"] = fs::absolute(out_dir).string();
  resolved["resume"] = a.resume.empty() ? json(nullptr) : json(fs::absolute(a.resume).string());
  resolved["start_epoch"] = state.epoch;
  resolved["samples"] = manifest.count();
  write_run_config(out_dir, "train", resolved);

  const std::size_t per_epoch =
      (manifest.count() + static_cast<std::size_t>(state.config.batch_size) - 1) /
      static_cast<std::size_t>(state.config.batch_size);
  out << "training " << (state.config.baseline_pix2pix ? "pix2pix baseline" : "hpix") << " on "
      << manifest.count() << " pairs, epochs " << state.epoch + 1 << ".." << state.config.epochs
      << ", seed " << state.config.seed << "\n";

  StepReport sum;
  std::size_t in_epoch = 0;
  const auto on_step = [&](const StepReport& r) {
    sum.loss_G += r.loss_G;
    sum.loss_H += r.loss_H;
    sum.loss_H_l1 += r.loss_H_l1;
    sum.loss_DG += r.loss_DG;
    sum.loss_DH += r.loss_DH;
    if (++in_epoch < per_epoch) return;
    if (!a.quiet) {
      const double n = static_cast<double>(in_epoch);
      out << "epoch " << r.epoch + 1 << "/" << state.config.epochs << "  step " << r.step
          << "  G " << fixed(sum.loss_G / n) << "  H " << fixed(sum.loss_H / n) << "  H_l1 "
          << fixed(sum.loss_H_l1 / n) << "  DG " << fixed(sum.loss_DG / n) << "  DH "
          << fixed(sum.loss_DH / n) << "\n"
          << std::flush;
    }
    sum = {};
    in_epoch = 0;
  };
  const TrainResult result = train(state, manifest, out_dir, on_step);
  out << "wrote " << result.final_checkpoint.string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- translate

struct TranslateArgs {
  std::string ckpt;
  std::vector<std::string> inputs;
  std::string out;
  std::string device = "cpu";
  bool emit_global = false;
};

std::vector<fs::path> expand_inputs(const std::vector<std::string>& inputs) {
  std::vector<fs::path> files;
  for (const auto& in : inputs) {
    const fs::path p(in);
    if (fs::is_directory(p)) {
      std::vector<fs::path> found;
      for (const auto& e : fs::directory_iterator(p)) {
        if (e.is_regular_file() && is_image_file(e.path())) found.push_back(e.path());
      }
      std::sort(found.begin(), found.end());
      files.insert(files.end(), found.begin(), found.end());
    } else {
      files.push_back(p);
    }
  }
  return files;
}

int run_translate(const TranslateArgs& a, std::ostream& out, std::ostream& err) {
  check_device(a.device);
  const Translator translator = Translator::from_checkpoint(a.ckpt);
  if (a.emit_global && !translator.has_global()) {
    throw ConfigError("--emit-global needs an hpix checkpoint; " + a.ckpt +
                      " holds a pix2pix baseline");
  }
  const std::vector<fs::path> files = expand_inputs(a.inputs);
  if (files.empty()) throw ConfigError("no input images found");

  const fs::path out_dir(a.out);
  json resolved;
  resolved["ckpt"] = fs::absolute(a.ckpt).string();
  resolved["inputs"] = a.inputs;
  resolved["out"] = fs::absolute(out_dir).string();
  resolved["emit_global"] = a.emit_global;
  resolved["tile_size"] = translator.tile_size();
  write_run_config(out_dir, "translate", resolved);

  int failures = 0;
  for (const auto& f : files) {
    try {
      const TranslatedTile t = translator.translate(read_rgb(f));
      const std::string stem = f.stem().string();
      write_png(out_dir / (stem + ".png"), t.final);
      if (a.emit_global) write_png(out_dir / (stem + "_global.png"), t.global);
      out << f.string() << " -> " << (out_dir / (stem + ".png")).string() << "\n";
    } catch (const Error& e) {
      ++failures;
      err << "error: " << f.string() << ": " << e.what() << "\n";
    }
  }
  if (failures > 0) {
    err << failures << " of " << files.size() << " inputs failed\n";
    return kExitData;
  }
  return kExitOk;
}

// ---------------------------------------------------------------- evaluate

struct EvaluateArgs {
  std::string ckpt;
  std::string data;
  std::string report;
  std::string split = "test";
  std::string device = "cpu";
};

Split parse_split(const std::string& s) {
  if (s == "test" || s == "val") return Split::test;
  if (s == "train") return Split::train;
  throw ConfigError("unknown split '" + s + "'");
}

std::string summary(const MetricReport& r) {
  return "pixel_accuracy " + fixed(r.pixel_accuracy) + "  ssim " + fixed(r.ssim) + "  psnr_db " +
         fixed(r.psnr_db, 2);
}

int run_evaluate(const EvaluateArgs& a, std::ostream& out) {
  check_device(a.device);
  const Split split = parse_split(a.split);
  const Translator translator = Translator::from_checkpoint(a.ckpt);
  const DatasetManifest manifest = DatasetManifest::open(a.data, split);
  const fs::path report(a.report);

  json resolved;
  resolved["ckpt"] = fs::absolute(a.ckpt).string();
  resolved["data"] = fs::absolute(a.data).string();
  resolved["split"] = to_string(split);
  resolved["report"] = fs::absolute(report).string();
  resolved["tolerance"] = MetricReport{}.tolerance;
  resolved["accuracy_semantics"] = kAccuracySemantics;
  write_run_config(parent_or_cwd(report), "evaluate", resolved);

  const EvaluationResult result = evaluate(translator, manifest);
  write_text_atomic(report, to_json(result));
  out << "final        " << summary(result.final) << "  (n=" << result.final.n_samples << ")\n";
  if (result.global_only) out << "global only  " << summary(*result.global_only) << "\n";
  out << "wrote " << report.string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- postprocess

struct PostprocessArgs {
  std::string map;
  std::string road_mask;
  std::string building_mask;
  std::string out;
  std::string annotations;
  double resolution = 1.0;
  double small_m2 = 250.0;
  double medium_m2 = 500.0;
  int marker_radius = 4;
  int morph_iterations = 5;
  double merge_distance = 10.0;
};

int run_postprocess(const PostprocessArgs& a, std::ostream& out) {
  if (!(a.resolution > 0.0)) throw ConfigError("--resolution must be positive");
  if (a.marker_radius < 0 || a.morph_iterations < 0) {
    throw ConfigError("--marker-radius and --morph-iterations must be non-negative");
  }
  if (a.road_mask.empty() && a.building_mask.empty()) {
    throw ConfigError("give --road-mask, --building-mask, or both");
  }
  const cv::Mat map = read_rgb(a.map);

  RoadIntersectionOptions road_opts;
  road_opts.dilate_iterations = a.morph_iterations;
  road_opts.erode_iterations = a.morph_iterations;
  road_opts.merge_distance = a.merge_distance;
  IntersectionSet roads;
  if (!a.road_mask.empty()) {
    const cv::Mat mask = read_gray(a.road_mask);
    if (mask.size() != map.size()) throw ShapeError("road mask and map differ in size");
    roads = road_intersections(mask, road_opts);
  }

  BuildingLabelMap buildings;
  buildings.labels = cv::Mat(map.size(), CV_8UC1, cv::Scalar(0));
  if (!a.building_mask.empty()) {
    const cv::Mat mask = read_gray(a.building_mask);
    if (mask.size() != map.size()) throw ShapeError("building mask and map differ in size");
    buildings = classify_buildings(mask, a.resolution, {a.small_m2, a.medium_m2});
  }

  OverlayStyle style;
  style.marker_radius = a.marker_radius;
  const fs::path out_path(a.out);
  json resolved;
  resolved["map"] = fs::absolute(a.map).string();
  resolved["road_mask"] = a.road_mask.empty() ? json(nullptr) : json(fs::absolute(a.road_mask).string());
  resolved["building_mask"] =
      a.building_mask.empty() ? json(nullptr) : json(fs::absolute(a.building_mask).string());
  resolved["resolution"] = a.resolution;
  resolved["thresholds_m2"] = {a.small_m2, a.medium_m2};
  resolved["marker_radius"] = a.marker_radius;
  resolved["morph_iterations"] = a.morph_iterations;
  resolved["merge_distance"] = a.merge_distance;
  resolved["binary_threshold"] = road_opts.binary_threshold;
  resolved["blur_kernel"] = road_opts.blur_kernel;
  resolved["blurred_threshold"] = road_opts.blurred_threshold;
  resolved["out"] = fs::absolute(out_path).string();
  resolved["annotations"] =
      a.annotations.empty() ? json(nullptr) : json(fs::absolute(a.annotations).string());
  write_run_config(parent_or_cwd(out_path), "postprocess", resolved);

  write_png(out_path, compose_overlay(map, roads, buildings, style));

  if (!a.annotations.empty()) {
    json ann;
    ann["intersections"] = json::array();
    for (const auto& p : roads) ann["intersections"].push_back({p.row, p.col});
    ann["buildings"] = json::array();
    for (const auto& b : buildings.buildings) {
      ann["buildings"].push_back({{"label", static_cast<int>(b.label)},
                                  {"area_m2", b.area_m2},
                                  {"bbox", {b.bbox.x, b.bbox.y, b.bbox.width, b.bbox.height}}});
    }
    const fs::path ann_path(a.annotations);
    if (!ann_path.parent_path().empty()) fs::create_directories(ann_path.parent_path());
    write_text_atomic(ann_path, ann.dump(2) + "\n");
  }
  out << roads.size() << " intersections, " << buildings.buildings.size() << " buildings -> "
      << out_path.string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- compare

struct CompareArgs {
  std::vector<std::string> ckpts;
  std::vector<std::string> labels;
  std::string data;
  std::string out;
  std::string split = "test";
  std::string device = "cpu";
  int samples = 3;
  int limit = 0;
  bool emit_global = false;
};

int run_compare(const CompareArgs& a, std::ostream& out) {
  check_device(a.device);
  if (a.ckpts.empty()) throw ConfigError("compare needs at least one --ckpt");
  if (!a.labels.empty() && a.labels.size() != a.ckpts.size()) {
    throw ConfigError("give one --label per --ckpt or none");
  }
  if (a.samples < 1) throw ConfigError("--samples must be >= 1");
  if (a.limit < 0) throw ConfigError("--limit must be >= 0");

  DatasetManifest manifest = DatasetManifest::open(a.data, parse_split(a.split));
  if (manifest.count() == 0) throw IngestionError("no test pairs found under " + a.data);
  if (a.limit > 0 && manifest.entries.size() > static_cast<std::size_t>(a.limit)) {
    manifest.entries.resize(static_cast<std::size_t>(a.limit));
  }
  const std::size_t shown = std::min<std::size_t>(static_cast<std::size_t>(a.samples), manifest.count());

  std::vector<std::string> labels = a.labels;
  if (labels.empty()) {
    for (const auto& c : a.ckpts) labels.push_back(fs::path(c).stem().string());
  }

  const fs::path out_dir(a.out);
  json resolved;
  resolved["ckpts"] = a.ckpts;
  resolved["labels"] = labels;
  resolved["data"] = fs::absolute(a.data).string();
  resolved["split"] = a.split;
  resolved["samples"] = shown;
  resolved["limit"] = a.limit;
  resolved["emit_global"] = a.emit_global;
  resolved["out"] = fs::absolute(out_dir).string();
  write_run_config(out_dir, "compare", resolved);

  std::vector<GridRow> rows(shown);
  std::vector<cv::Mat> truths(shown);
  std::vector<std::string> captions{"satellite"};
  int panel = 0;
  const auto fit = [&](const cv::Mat& m) {
    if (panel == 0) panel = m.cols;
    if (m.cols == panel && m.rows == panel) return m;
    cv::Mat r;
    cv::resize(m, r, {panel, panel}, 0, 0, cv::INTER_LINEAR);
    return r;
  };

  json table = json::array();
  std::ostringstream csv;
  csv << "checkpoint,label,pixel_accuracy,ssim,psnr_db,n_samples,global_pixel_accuracy,"
         "global_ssim,global_psnr_db\n"
      << std::setprecision(10);
  for (std::size_t k = 0; k < a.ckpts.size(); ++k) {
    const Translator translator = Translator::from_checkpoint(a.ckpts[k]);
    const bool with_global = a.emit_global && translator.has_global();
    if (with_global) captions.push_back(labels[k] + " global");
    captions.push_back(labels[k]);
    std::size_t index = 0;
    const EvaluationResult r = evaluate(translator, manifest, [&](const EvaluatedPair& p) {
      if (index < shown) {
        if (k == 0) {
          rows[index].push_back(fit(p.satellite));
          truths[index] = fit(p.target);
        }
        if (with_global) rows[index].push_back(fit(p.global));
        if (a.emit_global && !translator.has_global()) {
          rows[index].push_back(cv::Mat(panel, panel, CV_8UC3, cv::Scalar(255, 255, 255)));
        }
        rows[index].push_back(fit(p.final));
      }
      ++index;
    });
    if (a.emit_global && !translator.has_global()) {
      captions.insert(captions.end() - 1, labels[k] + " global (n/a)");
    }

    const auto psnr_json = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
    json row{{"checkpoint", a.ckpts[k]},
             {"label", labels[k]},
             {"pixel_accuracy", r.final.pixel_accuracy},
             {"ssim", r.final.ssim},
             {"psnr_db", psnr_json(r.final.psnr_db)},
             {"n_samples", r.final.n_samples}};
    row["global_only"] = r.global_only ? json{{"pixel_accuracy", r.global_only->pixel_accuracy},
                                              {"ssim", r.global_only->ssim},
                                              {"psnr_db", psnr_json(r.global_only->psnr_db)}}
                                       : json(nullptr);
    table.push_back(row);
    csv << a.ckpts[k] << ',' << labels[k] << ',' << r.final.pixel_accuracy << ',' << r.final.ssim
        << ',' << r.final.psnr_db << ',' << r.final.n_samples << ',';
    if (r.global_only) {
      csv << r.global_only->pixel_accuracy << ',' << r.global_only->ssim << ','
          << r.global_only->psnr_db;
    } else {
      csv << ",,";
    }
    csv << '\n';
    out << labels[k] << ": " << summary(r.final) << "\n";
  }
  captions.push_back("ground truth");
  for (std::size_t i = 0; i < shown; ++i) rows[i].push_back(truths[i]);

  GridLayout layout;
  const cv::Mat grid = compose_grid(rows, captions, &layout);
  write_png(out_dir / "comparison.png", grid);
  json metrics{{"accuracy_semantics", kAccuracySemantics}, {"rows", table}};
  write_text_atomic(out_dir / "metrics.json", metrics.dump(2) + "\n");
  write_text_atomic(out_dir / "metrics.csv", csv.str());
  out << "grid " << layout.rows << " x " << layout.columns << " -> "
      << (out_dir / "comparison.png").string() << "\n";
  return kExitOk;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const SpecError*>(&e) ||
      dynamic_cast<const ContractError*>(&e)) {
    return kExitConfig;
  }
  if (dynamic_cast<const IngestionError*>(&e) || dynamic_cast<const InputError*>(&e) ||
      dynamic_cast<const ShapeError*>(&e)) {
    return kExitData;
  }
  if (dynamic_cast<const NumericError*>(&e)) return kExitNumeric;
  if (dynamic_cast<const fs::filesystem_error*>(&e)) return kExitData;
  return kExitFailure;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"hpix: hierarchical satellite-to-map translation"};
  app.require_subcommand(1);
  app.footer(std::string("\n") + kPrecedence +
             "\nExit codes: 0 ok, 2 configuration error, 3 data error, 4 numeric failure.");
  app.set_version_flag("--version", HPIX_VERSION);

  TrainArgs ta;
  TrainOptions to{};
  auto* train_cmd = app.add_subcommand("train", "Train G, H and both discriminators");
  train_cmd->add_option("--data", ta.data, "Dataset root (train/ and val/) or manifest JSON")
      ->required();
  train_cmd->add_option("--out", ta.out, "Output directory")->required();
  train_cmd->add_option("--config", ta.config, "JSON training config");
  train_cmd->add_option("--resume", ta.resume, "Continue from a checkpoint");
  to.epochs = train_cmd->add_option("--epochs", ta.epochs, "Total epochs [200]");
  to.batch_size = train_cmd->add_option("--batch-size", ta.batch_size, "Batch size [1]");
  to.lambda_l1 = train_cmd->add_option("--lambda-l1", ta.lambda_l1, "L1 weight [100]");
  to.lambda_ds = train_cmd->add_option("--lambda-ds", ta.lambda_ds, "Deep-supervision weight [100]");
  to.learning_rate = train_cmd->add_option("--lr", ta.learning_rate, "Adam learning rate [0.0002]");
  to.seed = train_cmd->add_option("--seed", ta.seed, "Seed [$HPIX_SEED or 0]");
  to.checkpoint_every =
      train_cmd->add_option("--checkpoint-every", ta.checkpoint_every, "Epochs between checkpoints [50]");
  to.depth = train_cmd->add_option("--depth", ta.depth, "Encoder depth [8]");
  to.base_channels = train_cmd->add_option("--base-channels", ta.base_channels, "Generator width [64]");
  to.disc_base_channels =
      train_cmd->add_option("--disc-base-channels", ta.disc_base_channels, "Discriminator width [64]");
  to.joint_routing = train_cmd->add_flag("--joint-routing", ta.joint_routing,
                                         "Backpropagate H's loss into G");
  to.baseline = train_cmd->add_flag("--baseline-pix2pix", ta.baseline,
                                    "Train H alone on (x, zero image)");
  to.no_augment = train_cmd->add_flag("--no-augment", ta.no_augment, "Disable jitter and flip");
  to.fixed_order = train_cmd->add_flag("--fixed-epoch-order", ta.fixed_order,
                                       "Same shuffle order every epoch");
  train_cmd->add_option("--device", ta.device, "Compute device [cpu]");
  train_cmd->add_flag("--quiet", ta.quiet, "No per-epoch progress lines");

  TranslateArgs tr;
  auto* translate_cmd = app.add_subcommand("translate", "Translate satellite tiles into map tiles");
  translate_cmd->add_option("--ckpt", tr.ckpt, "Checkpoint")->required();
  translate_cmd->add_option("--input", tr.inputs, "Image file or directory (repeatable)")->required();
  translate_cmd->add_option("--out", tr.out, "Output directory")->required();
  translate_cmd->add_flag("--emit-global", tr.emit_global, "Also write the global generator output");
  translate_cmd->add_option("--device", tr.device, "Compute device [cpu]");

  EvaluateArgs ev;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Score a checkpoint on the test pairs");
  evaluate_cmd->add_option("--ckpt", ev.ckpt, "Checkpoint")->required();
  evaluate_cmd->add_option("--data", ev.data, "Dataset root or manifest JSON")->required();
  evaluate_cmd->add_option("--report", ev.report, "Output JSON report")->required();
  evaluate_cmd->add_option("--split", ev.split, "test (val/) or train [test]");
  evaluate_cmd->add_option("--device", ev.device, "Compute device [cpu]");

  PostprocessArgs pp;
  auto* post_cmd = app.add_subcommand("postprocess", "Annotate a map tile with intersections and buildings");
  post_cmd->add_option("--map", pp.map, "Generated map tile")->required();
  post_cmd->add_option("--road-mask", pp.road_mask, "Binary road mask");
  post_cmd->add_option("--building-mask", pp.building_mask, "Binary building mask");
  post_cmd->add_option("--resolution", pp.resolution, "Metres per pixel [1.0]");
  post_cmd->add_option("--out", pp.out, "Output PNG")->required();
  post_cmd->add_option("--annotations", pp.annotations, "Output JSON with points and buildings");
  post_cmd->add_option("--small-m2", pp.small_m2, "Small/medium boundary in m2 [250]");
  post_cmd->add_option("--medium-m2", pp.medium_m2, "Medium/large boundary in m2 [500]");
  post_cmd->add_option("--marker-radius", pp.marker_radius, "Intersection disc radius [4]");
  post_cmd->add_option("--morph-iterations", pp.morph_iterations, "Dilate/erode repetitions [5]");
  post_cmd->add_option("--merge-distance", pp.merge_distance, "Branch-point merge distance [10]");

  CompareArgs cp;
  auto* compare_cmd = app.add_subcommand("compare", "Side-by-side grid and metric table for checkpoints");
  compare_cmd->add_option("--ckpt", cp.ckpts, "Checkpoint (repeatable)");
  compare_cmd->add_option("--label", cp.labels, "Column label per checkpoint");
  compare_cmd->add_option("--data", cp.data, "Dataset root or manifest JSON")->required();
  compare_cmd->add_option("--out", cp.out, "Output directory")->required();
  compare_cmd->add_option("--split", cp.split, "test (val/) or train [test]");
  compare_cmd->add_option("--samples", cp.samples, "Rows in the grid [3]");
  compare_cmd->add_option("--limit", cp.limit, "Score only the first N pairs [all]");
  compare_cmd->add_flag("--emit-global", cp.emit_global, "Add global generator panels");
  compare_cmd->add_option("--device", cp.device, "Compute device [cpu]");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*train_cmd) return run_train(ta, to, out);
    if (*translate_cmd) return run_translate(tr, out, err);
    if (*evaluate_cmd) return run_evaluate(ev, out);
    if (*post_cmd) return run_postprocess(pp, out);
    if (*compare_cmd) return run_compare(cp, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
  return kExitFailure;
}

}  // namespace hpix::cli
