#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "thermal/dataio.hpp"
#include "thermal/encoder.hpp"
#include "thermal/tcn.hpp"
#include "thermal/training.hpp"

namespace thermal {

struct DataConfig {
    std::string dir = "data";
    std::int64_t clips = 600;
    std::uint64_t seed = 7;
    GeneratorParams generator;
};

struct EvalConfig {
    std::vector<std::int64_t> delta_sweep = {0,  1,  2,  3,  4,  5,  6,  7,
                                             8,  9,  10, 11, 12, 13, 14, 15,
                                             16, 17, 18, 19, 20, 21, 22, 23};
    double theta_floor = 0.05;
    double stitch_fraction = 0.5;
    std::uint64_t stitch_seed = 99;
    double ema_half_life = 64.0;
    std::int64_t stream_delta = 1;
};

// Everything a run needs, round-trippable through JSON.
struct RunConfig {
    EncoderConfig encoder;
    TcnConfig tcn;
    TrainConfig train;
    DataConfig data;
    EvalConfig eval;
    std::string out_dir = "runs/default";

    void validate() const {
        encoder.validate();
        tcn.validate();
        train.validate();
        if (encoder.embedding_dim != tcn.input_dim)
            throw ConfigError("config: encoder embedding_dim must equal tcn input_dim");
    }
};

std::string run_config_to_json(const RunConfig& cfg);
RunConfig run_config_from_json(const std::string& json_text);
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace thermal
