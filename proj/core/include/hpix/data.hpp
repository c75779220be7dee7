#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <opencv2/core.hpp>

#include "hpix/tensor.hpp"

namespace hpix {

// Aligned satellite/map pair in display space (8-bit RGB).
struct PairedSample {
  cv::Mat satellite;
  cv::Mat map_target;
  std::string id;
};

enum class Split { train, test };

std::string to_string(Split split);

// One dataset item: either a combined side-by-side frame (satellite left,
// map right) or a separate satellite/map file pair.
struct ManifestEntry {
  std::string id;
  std::filesystem::path frame;
  std::filesystem::path satellite;
  std::filesystem::path map;
};

struct DatasetManifest {
  std::filesystem::path root;
  Split split = Split::train;
  std::vector<ManifestEntry> entries;

  std::size_t count() const { return entries.size(); }

  // Scans <root>/train or <root>/val for .jpg/.jpeg/.png combined frames,
  // sorted by file name.
  static DatasetManifest scan(const std::filesystem::path& root, Split split);

  // JSON override for nonstandard layouts:
  //   {"split": "train"|"test", "entries": [{"frame": "a.jpg"} |
  //                                          {"satellite": "s.png", "map": "m.png"}]}
  // Relative paths resolve against the manifest file's directory.
  static DatasetManifest from_file(const std::filesystem::path& manifest);

  // `root` is a manifest file if it is a regular file, a dataset directory
  // otherwise.
  static DatasetManifest open(const std::filesystem::path& root, Split split);
};

// Splits a combined frame at the horizontal midpoint.
PairedSample split_frame(const cv::Mat& frame_rgb, std::string id);

PairedSample load_pair(const std::filesystem::path& path);
PairedSample load_entry(const ManifestEntry& entry);

struct AugmentationPolicy {
  int jitter_resize = 286;
  int crop = 256;
  double hflip_prob = 0.5;
  bool enabled = true;

  void validate() const;
};

// Geometry that was applied to both images of a pair.
struct AppliedTransform {
  int crop_x = 0;
  int crop_y = 0;
  bool flipped = false;
};

struct ModelPair {
  Tensor x;  // satellite, 1x3xSxS in [-1,1]
  Tensor y;  // map target, 1x3xSxS in [-1,1]
  AppliedTransform transform;
};

// Bilinear resize to jitter_resize, shared random crop and flip, then
// normalisation. With the policy disabled: bilinear resize to `crop` and
// normalisation only (rng untouched).
ModelPair preprocess(const PairedSample& sample, const AugmentationPolicy& policy,
                     std::mt19937_64& rng);

struct Batch {
  Tensor x;
  Tensor y;
  std::vector<std::string> ids;
  std::size_t size() const { return ids.size(); }
};

// 64-bit mixer used to derive independent, reproducible RNG streams from
// (seed, counters) tuples.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

// Seeded epoch-wise batch stream. Epoch e visits every sample exactly once in
// an order derived from (seed, e), or from seed alone when the epoch seed is
// fixed. Augmentation randomness for a sample derives from (seed, epoch,
// position), so any epoch can be regenerated independently.
class BatchIterator {
 public:
  BatchIterator(DatasetManifest manifest, AugmentationPolicy policy, int batch_size,
                std::uint64_t seed, bool fixed_epoch_order = false);

  void start_epoch(int epoch);
  std::optional<Batch> next();

  std::size_t batches_per_epoch() const;
  const std::vector<std::size_t>& order() const { return order_; }
  const DatasetManifest& manifest() const { return manifest_; }

 private:
  DatasetManifest manifest_;
  AugmentationPolicy policy_;
  int batch_size_;
  std::uint64_t seed_;
  bool fixed_epoch_order_;
  int epoch_ = 0;
  std::size_t cursor_ = 0;
  std::vector<std::size_t> order_;
};

}  // namespace hpix
