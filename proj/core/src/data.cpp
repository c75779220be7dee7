#include "hpix/data.hpp"

#include <algorithm>
#include <fstream>
#include <nlohmann/json.hpp>
#include <numeric>
#include <opencv2/imgproc.hpp>

#include "hpix/error.hpp"
#include "hpix/image.hpp"

namespace hpix {
namespace fs = std::filesystem;

std::string to_string(Split split) { return split == Split::train ? "train" : "test"; }

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  // splitmix64 finaliser applied to a running combination.
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(seed) ^ a) ^ b);
}

DatasetManifest DatasetManifest::scan(const fs::path& root, Split split) {
  const fs::path dir = root / (split == Split::train ? "train" : "val");
  if (!fs::is_directory(dir)) {
    throw IngestionError("dataset split directory not found: " + dir.string());
  }
  DatasetManifest m{root, split, {}};
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::string ext = e.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
    if (ext == ".jpg" || ext == ".jpeg" || ext == ".png") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  for (auto& f : files) m.entries.push_back({f.stem().string(), f, {}, {}});
  return m;
}

DatasetManifest DatasetManifest::from_file(const fs::path& manifest) {
  std::ifstream in(manifest);
  if (!in) throw IngestionError("cannot open manifest " + manifest.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IngestionError("malformed manifest " + manifest.string() + ": " + e.what());
  }
  const fs::path base = manifest.parent_path();
  auto resolve = [&](const std::string& p) {
    const fs::path path(p);
    return path.is_absolute() ? path : base / path;
  };
  DatasetManifest m;
  m.root = base;
  m.split = j.value("split", std::string("train")) == "test" ? Split::test : Split::train;
  for (const auto& e : j.at("entries")) {
    ManifestEntry entry;
    if (e.contains("frame")) {
      entry.frame = resolve(e.at("frame").get<std::string>());
      entry.id = entry.frame.stem().string();
    } else if (e.contains("satellite") && e.contains("map")) {
      entry.satellite = resolve(e.at("satellite").get<std::string>());
      entry.map = resolve(e.at("map").get<std::string>());
      entry.id = entry.satellite.stem().string();
    } else {
      throw IngestionError("manifest entry needs 'frame' or 'satellite'+'map'");
    }
    if (e.contains("id")) entry.id = e.at("id").get<std::string>();
    m.entries.push_back(std::move(entry));
  }
  return m;
}

DatasetManifest DatasetManifest::open(const fs::path& root, Split split) {
  if (fs::is_regular_file(root)) {
    DatasetManifest m = from_file(root);
    m.split = split;
    return m;
  }
  return scan(root, split);
}

PairedSample split_frame(const cv::Mat& frame_rgb, std::string id) {
  if (frame_rgb.empty() || frame_rgb.type() != CV_8UC3) {
    throw IngestionError("frame '" + id + "' is not an 8-bit RGB image");
  }
  if (frame_rgb.cols % 2 != 0) {
    throw IngestionError("frame '" + id + "' has odd width " + std::to_string(frame_rgb.cols) +
                         "; cannot split into halves");
  }
  const int half = frame_rgb.cols / 2;
  PairedSample s;
  s.satellite = frame_rgb(cv::Rect(0, 0, half, frame_rgb.rows)).clone();
  s.map_target = frame_rgb(cv::Rect(half, 0, half, frame_rgb.rows)).clone();
  s.id = std::move(id);
  return s;
}

PairedSample load_pair(const fs::path& path) {
  return split_frame(read_rgb(path), path.stem().string());
}

PairedSample load_entry(const ManifestEntry& entry) {
  if (!entry.frame.empty()) {
    PairedSample s = split_frame(read_rgb(entry.frame), entry.id);
    return s;
  }
  PairedSample s{read_rgb(entry.satellite), read_rgb(entry.map), entry.id};
  if (s.satellite.size() != s.map_target.size()) {
    throw IngestionError("satellite and map of '" + entry.id + "' differ in size");
  }
  return s;
}

void AugmentationPolicy::validate() const {
  if (crop <= 0 || jitter_resize < crop) {
    throw ConfigError("augmentation: jitter_resize must be >= crop > 0");
  }
  if (hflip_prob < 0.0 || hflip_prob > 1.0) {
    throw ConfigError("augmentation: hflip_prob must lie in [0,1]");
  }
}

ModelPair preprocess(const PairedSample& sample, const AugmentationPolicy& policy,
                     std::mt19937_64& rng) {
  policy.validate();
  if (sample.satellite.size() != sample.map_target.size()) {
    throw IngestionError("sample '" + sample.id + "': satellite and map differ in size");
  }
  const int size = policy.enabled ? policy.jitter_resize : policy.crop;
  cv::Mat sat;
  cv::Mat map;
  cv::resize(sample.satellite, sat, cv::Size(size, size), 0, 0, cv::INTER_LINEAR);
  cv::resize(sample.map_target, map, cv::Size(size, size), 0, 0, cv::INTER_LINEAR);

  AppliedTransform tf;
  if (policy.enabled) {
    std::uniform_int_distribution<int> offset(0, size - policy.crop);
    tf.crop_y = offset(rng);
    tf.crop_x = offset(rng);
    tf.flipped = std::bernoulli_distribution(policy.hflip_prob)(rng);
    const cv::Rect window(tf.crop_x, tf.crop_y, policy.crop, policy.crop);
    sat = sat(window).clone();
    map = map(window).clone();
    if (tf.flipped) {
      cv::flip(sat, sat, 1);
      cv::flip(map, map, 1);
    }
  }
  return {to_model_space(sat), to_model_space(map), tf};
}

BatchIterator::BatchIterator(DatasetManifest manifest, AugmentationPolicy policy,
                             int batch_size, std::uint64_t seed, bool fixed_epoch_order)
    : manifest_(std::move(manifest)),
      policy_(policy),
      batch_size_(batch_size),
      seed_(seed),
      fixed_epoch_order_(fixed_epoch_order) {
  if (manifest_.count() == 0) throw ConfigError("batch iterator over an empty manifest");
  if (batch_size_ <= 0) throw ConfigError("batch size must be positive");
  policy_.validate();
  start_epoch(0);
}

void BatchIterator::start_epoch(int epoch) {
  epoch_ = epoch;
  cursor_ = 0;
  order_.resize(manifest_.count());
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  std::mt19937_64 rng(mix_seed(seed_, fixed_epoch_order_ ? 0 : static_cast<std::uint64_t>(epoch),
                               0x5eed));
  std::shuffle(order_.begin(), order_.end(), rng);
}

std::size_t BatchIterator::batches_per_epoch() const {
  return (manifest_.count() + static_cast<std::size_t>(batch_size_) - 1) /
         static_cast<std::size_t>(batch_size_);
}

std::optional<Batch> BatchIterator::next() {
  if (cursor_ >= order_.size()) return std::nullopt;
  const std::size_t end = std::min(order_.size(), cursor_ + static_cast<std::size_t>(batch_size_));
  std::vector<Tensor> xs;
  std::vector<Tensor> ys;
  Batch batch;
  for (std::size_t pos = cursor_; pos < end; ++pos) {
    const PairedSample sample = load_entry(manifest_.entries[order_[pos]]);
    std::mt19937_64 rng(mix_seed(seed_, static_cast<std::uint64_t>(epoch_) + 1, pos));
    ModelPair pair = preprocess(sample, policy_, rng);
    xs.push_back(std::move(pair.x));
    ys.push_back(std::move(pair.y));
    batch.ids.push_back(sample.id);
  }
  cursor_ = end;
  batch.x = stack(xs);
  batch.y = stack(ys);
  return batch;
}

}  // namespace hpix
