#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "thermal/param_store.hpp"

namespace thermal {

// Trainer state carried alongside the parameter blobs so --resume restores
// optimizer state bit-exactly.
struct CheckpointMeta {
    std::uint64_t seed = 0;
    std::int64_t epoch = -1;          // last completed epoch
    double lr = 0.0;
    double best_accuracy = 0.0;
    std::int64_t plateau = 0;
    std::int64_t adam_step = 0;
    std::string loss = "ce";
};

// Container: magic "THGM", version, run-config JSON snapshot, trainer meta,
// then named f32 blobs (parameter values plus Adam moments) with lengths.
void save_checkpoint(const std::filesystem::path& path, const std::string& config_json,
                     const CheckpointMeta& meta, const ParamStore<float>& store);

struct LoadedCheckpoint {
    std::string config_json;
    CheckpointMeta meta;
};

// Header only; used to rebuild the model before loading blobs.
LoadedCheckpoint read_checkpoint_header(const std::filesystem::path& path);

// Fills values and Adam state of an already-registered store; blob names and
// sizes must match exactly.
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path, ParamStore<float>& store);

}  // namespace thermal
