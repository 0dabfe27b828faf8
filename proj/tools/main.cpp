#include <CLI11.hpp>

#include <iostream>

#include "commands.hpp"
#include "thermal/errors.hpp"

int main(int argc, char** argv) {
    CLI::App app{"thermal gesture recognition: synthetic data, training, evaluation, streaming"};
    app.require_subcommand(1);

    std::string config_path, out_dir, resume, init_ckpt, ckpt, input = "-", preset, sweep;
    std::vector<std::string> ckpts;
    std::int64_t clips = 100, delta = 1, frames = 48;
    std::uint64_t seed = 7;
    double theta = 0.0;

    auto* print_config = app.add_subcommand("print-config", "dump the full default run config");

    auto* gen = app.add_subcommand("gen-data", "generate a synthetic clip dataset + manifest");
    gen->add_option("--out", out_dir, "output directory")->required();
    gen->add_option("--clips", clips, "number of clips (min 10)")->required();
    gen->add_option("--seed", seed, "generator seed");
    gen->add_option("--config", config_path, "run config for generator parameters");

    auto* train = app.add_subcommand("train", "train with the configured loss");
    train->add_option("--config", config_path, "run config file")->required();
    train->add_option("--resume", resume, "checkpoint to resume from");

    auto* ft = app.add_subcommand("finetune-ctc", "fine-tune with CTC from CE weights");
    ft->add_option("--config", config_path, "run config file")->required();
    ft->add_option("--init", init_ckpt, "CE checkpoint to start from")->required();

    auto* clf = app.add_subcommand("eval-clf", "top-1 classification report");
    clf->add_option("--config", config_path, "run config file")->required();
    clf->add_option("--model", ckpts, "checkpoint(s); several give a seed-averaged report")
        ->required();

    auto* det = app.add_subcommand("eval-detect", "stitched-video detection sweep (mAP vs delta)");
    det->add_option("--config", config_path, "run config file")->required();
    det->add_option("--model", ckpt, "checkpoint")->required();
    det->add_option("--delta-sweep", sweep, "e.g. 0..23 or 0,1,5 (default: config)");

    auto* stream = app.add_subcommand("stream", "sliding-window streaming inference");
    stream->add_option("--model", ckpt, "checkpoint")->required();
    stream->add_option("--delta", delta, "output offset from the right edge");
    stream->add_option("--input", input, "clip container path, or - for raw f32 frames on stdin");
    stream->add_option("--theta", theta, "detection threshold floor");

    auto* cnt = app.add_subcommand("count", "parameter / FLOP accounting");
    cnt->add_option("--config", config_path, "run config file");
    cnt->add_option("--preset", preset, "tcn-f64 | tcn-f128 | tcn-causal-f128 | mix{1,2,3}-4x4 | resnet18");
    cnt->add_option("--frames", frames, "sequence length for temporal FLOPs");

    auto* probe = app.add_subcommand("probe-rf", "receptive field: closed form vs gradient probe");
    probe->add_option("--config", config_path, "run config file");
    probe->add_option("--preset", preset, "named TCN configuration");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        using namespace thermal::cli;
        if (print_config->parsed()) return cmd_print_config(std::cout);
        if (gen->parsed()) return cmd_gen_data(out_dir, clips, seed, config_path, std::cout);
        if (train->parsed()) return cmd_train(config_path, resume, std::cout);
        if (ft->parsed()) return cmd_finetune_ctc(config_path, init_ckpt, std::cout);
        if (clf->parsed()) return cmd_eval_clf(config_path, ckpts, std::cout);
        if (det->parsed()) return cmd_eval_detect(config_path, ckpt, sweep, std::cout);
        if (stream->parsed()) return cmd_stream(ckpt, delta, input, theta, std::cout);
        if (cnt->parsed()) return cmd_count(config_path, preset, frames, std::cout);
        if (probe->parsed()) return cmd_probe_rf(config_path, preset, std::cout);
    } catch (const thermal::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const thermal::NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 3;
    } catch (const thermal::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
