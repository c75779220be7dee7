#pragma once

#include <filesystem>
#include <string>

#include "hpix/training.hpp"

namespace hpix {

inline constexpr const char* kCheckpointFormat = "hpix-ckpt-v1";

// Single-file archive:
//   "hpix-ckpt-v1\n"
//   u64 little-endian header length
//   JSON header: format, mode, epoch, step, seed, config, the four network
//                specs, optimizer counters/hyper-parameters, and a tensor
//                index [{name, shape, offset}] (offsets in doubles)
//   payload: little-endian IEEE-754 doubles
// Tensor names are "<network>/<param|adam_m|adam_v>/<block>/<array>".
// Written via temp file + rename.
void save_checkpoint(const std::filesystem::path& path, const TrainingState& state);

// Throws IngestionError on a missing file, wrong format tag, or truncation.
TrainingState load_checkpoint(const std::filesystem::path& path);

std::string config_to_json(const TrainConfig& config);
TrainConfig config_from_json(const std::string& json);

}  // namespace hpix
