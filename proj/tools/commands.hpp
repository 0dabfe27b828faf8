#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace thermal::cli {

// Subcommand implementations; they throw the library error types and the
// binary's main() maps those onto exit codes (1 config, 2 data, 3 numeric).

int cmd_print_config(std::ostream& out);

int cmd_gen_data(const std::string& out_dir, std::int64_t clips, std::uint64_t seed,
                 const std::string& config_path, std::ostream& out);

int cmd_train(const std::string& config_path, const std::string& resume_ckpt, std::ostream& out);

int cmd_finetune_ctc(const std::string& config_path, const std::string& init_ckpt,
                     std::ostream& out);

int cmd_eval_clf(const std::string& config_path, const std::vector<std::string>& checkpoints,
                 std::ostream& out);

int cmd_eval_detect(const std::string& config_path, const std::string& checkpoint,
                    const std::string& delta_sweep, std::ostream& out);

int cmd_stream(const std::string& checkpoint, std::int64_t delta, const std::string& input,
               double theta_floor, std::ostream& out);

int cmd_count(const std::string& config_path, const std::string& preset, std::int64_t frames,
              std::ostream& out);

int cmd_probe_rf(const std::string& config_path, const std::string& preset, std::ostream& out);

}  // namespace thermal::cli
