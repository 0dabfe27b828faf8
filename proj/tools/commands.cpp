#include "commands.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include "thermal/analysis.hpp"
#include "thermal/checkpoint.hpp"
#include "thermal/config.hpp"
#include "thermal/evaluation.hpp"
#include "thermal/streaming.hpp"
#include "thermal/training.hpp"

namespace thermal::cli {

namespace fs = std::filesystem;

namespace {

struct ModelBundle {
    RunConfig cfg;
    ParamStore<float> store;
    std::optional<GestureModel<float>> model;
};

ModelBundle make_model(const RunConfig& cfg, bool init) {
    ModelBundle b;
    b.cfg = cfg;
    b.model.emplace(cfg.encoder, cfg.tcn, b.store);
    if (init) {
        Rng rng = Rng::stream(cfg.train.seed, 0x1217);
        b.model->init_params(b.store, rng);
    }
    return b;
}

ModelBundle load_model(const fs::path& ckpt) {
    const LoadedCheckpoint header = read_checkpoint_header(ckpt);
    ModelBundle b = make_model(run_config_from_json(header.config_json), false);
    load_checkpoint(ckpt, b.store);
    return b;
}

Dataset load_dataset_for(const RunConfig& cfg) {
    const fs::path manifest = fs::path(cfg.data.dir) / "manifest.jsonl";
    if (!fs::exists(manifest))
        throw DataError("dataset manifest not found: " + manifest.string() +
                        " (run gen-data first)");
    return load_dataset(manifest);
}

void write_metrics(const fs::path& path, const TrainResult& res) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write metrics: " + path.string());
    for (const auto& m : res.history) {
        nlohmann::json rec;
        rec["epoch"] = m.epoch;
        rec["train_loss"] = m.train_loss;
        rec["test_accuracy"] = m.test_accuracy;
        rec["lr"] = m.lr;
        out << rec.dump() << "\n";
    }
}

// Saves best + last checkpoints and the metric log under cfg.out_dir.
void save_run(const RunConfig& cfg, const GestureModel<float>& model, ParamStore<float>& store,
              const TrainResult& res, std::ostream& out) {
    (void)model;
    fs::create_directories(cfg.out_dir);
    const std::string tag = to_string(cfg.train.loss);
    const std::string config_json = run_config_to_json(cfg);

    CheckpointMeta meta;
    meta.seed = cfg.train.seed;
    meta.epoch = res.history.empty() ? -1 : res.history.back().epoch;
    meta.lr = res.final_lr;
    meta.best_accuracy = res.best_accuracy;
    meta.plateau = res.plateau;
    meta.adam_step = store.adam_step;
    meta.loss = tag;

    const fs::path last = fs::path(cfg.out_dir) / (tag + "_last.thgm");
    save_checkpoint(last, config_json, meta, store);

    // best: parameter snapshot at the best epoch, same optimizer tail
    const std::vector<float> current = store.snapshot_values();
    store.restore_values(res.best_values);
    const fs::path best = fs::path(cfg.out_dir) / (tag + "_best.thgm");
    save_checkpoint(best, config_json, meta, store);
    store.restore_values(current);

    write_metrics(fs::path(cfg.out_dir) / (tag + "_metrics.jsonl"), res);
    out << "saved " << best.string() << " (best test_acc=" << res.best_accuracy << " at epoch "
        << res.best_epoch << "), " << last.string() << "\n";
}

std::vector<std::int64_t> parse_sweep(const std::string& spec) {
    // "0..23" or comma list "0,1,5"
    std::vector<std::int64_t> out;
    if (const auto dots = spec.find(".."); dots != std::string::npos) {
        const std::int64_t lo = std::stoll(spec.substr(0, dots));
        const std::int64_t hi = std::stoll(spec.substr(dots + 2));
        if (hi < lo) throw ConfigError("delta sweep range is empty: " + spec);
        for (std::int64_t d = lo; d <= hi; ++d) out.push_back(d);
        return out;
    }
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(std::stoll(item));
    }
    if (out.empty()) throw ConfigError("empty delta sweep: " + spec);
    return out;
}

TcnConfig preset_tcn(const std::string& name) {
    TcnConfig cfg;
    cfg.input_dim = 512;  // reference spatial encoder embedding width
    cfg.classes = 10;
    cfg.stages = 4;
    if (name == "tcn-f64") {
        cfg.blocks_per_stage = 5;
        cfg.non_causal_per_stage = 5;
        cfg.channels = 64;
    } else if (name == "tcn-f128") {
        cfg.blocks_per_stage = 5;
        cfg.non_causal_per_stage = 5;
        cfg.channels = 128;
    } else if (name == "tcn-causal-f128") {
        cfg.blocks_per_stage = 5;
        cfg.non_causal_per_stage = 0;
        cfg.channels = 128;
    } else if (name == "mix1-4x4" || name == "mix2-4x4" || name == "mix3-4x4") {
        cfg.blocks_per_stage = 4;
        cfg.channels = 128;
        cfg.non_causal_per_stage = name[3] - '0';
    } else {
        throw ConfigError("unknown preset '" + name +
                          "' (try tcn-f64, tcn-f128, tcn-causal-f128, mix1-4x4, mix2-4x4, "
                          "mix3-4x4, resnet18)");
    }
    return cfg;
}

std::string millions(std::int64_t v) {
    std::ostringstream ss;
    ss << std::fixed << std::setprecision(2) << static_cast<double>(v) / 1e6 << "M";
    return ss.str();
}

void print_count(const std::string& name, const CostReport& r, std::int64_t frames,
                 std::ostream& out) {
    out << name << ": params=" << r.params << " (" << millions(r.params) << ")"
        << " flops@T=" << frames << "=" << r.flops << " (" << millions(r.flops) << ")\n";
    nlohmann::json rec;
    rec["graph"] = name;
    rec["params"] = r.params;
    rec["flops"] = r.flops;
    rec["frames"] = frames;
    out << rec.dump() << "\n";
}

}  // namespace

int cmd_print_config(std::ostream& out) {
    out << run_config_to_json(RunConfig{}) << "\n";
    return 0;
}

int cmd_gen_data(const std::string& out_dir, std::int64_t clips, std::uint64_t seed,
                 const std::string& config_path, std::ostream& out) {
    GeneratorParams params;
    if (!config_path.empty()) params = load_run_config(config_path).data.generator;
    const auto manifest = build_dataset(out_dir, clips, seed, params);
    out << "wrote " << clips << " clips, manifest " << manifest.string() << "\n";
    return 0;
}

int cmd_train(const std::string& config_path, const std::string& resume_ckpt, std::ostream& out) {
    const RunConfig cfg = load_run_config(config_path);
    const Dataset dataset = load_dataset_for(cfg);
    ModelBundle b = make_model(cfg, true);

    ResumePoint resume;
    const ResumePoint* resume_ptr = nullptr;
    if (!resume_ckpt.empty()) {
        const LoadedCheckpoint lc = load_checkpoint(resume_ckpt, b.store);
        if (lc.meta.loss != to_string(cfg.train.loss))
            throw ConfigError("cannot resume a " + lc.meta.loss + " checkpoint into a " +
                              std::string(to_string(cfg.train.loss)) + " run");
        resume.epoch = lc.meta.epoch;
        resume.lr = lc.meta.lr;
        resume.best_accuracy = lc.meta.best_accuracy;
        resume.plateau = lc.meta.plateau;
        resume_ptr = &resume;
        out << "resuming from " << resume_ckpt << " after epoch " << resume.epoch << "\n";
    }

    const TrainResult res = train(*b.model, b.store, dataset, cfg.train, &out, resume_ptr);
    save_run(cfg, *b.model, b.store, res, out);
    return 0;
}

int cmd_finetune_ctc(const std::string& config_path, const std::string& init_ckpt,
                     std::ostream& out) {
    RunConfig cfg = load_run_config(config_path);
    cfg.train.loss = LossKind::ctc;
    const Dataset dataset = load_dataset_for(cfg);
    ModelBundle b = make_model(cfg, false);
    load_checkpoint(init_ckpt, b.store);
    // fresh optimizer for the fine-tuning phase
    for (auto& p : b.store) {
        p.adam_m.zero();
        p.adam_v.zero();
    }
    b.store.adam_step = 0;
    out << "fine-tuning with CTC from " << init_ckpt << "\n";

    const TrainResult res = train(*b.model, b.store, dataset, cfg.train, &out);
    save_run(cfg, *b.model, b.store, res, out);
    return 0;
}

int cmd_eval_clf(const std::string& config_path, const std::vector<std::string>& checkpoints,
                 std::ostream& out) {
    const RunConfig cfg = load_run_config(config_path);
    const Dataset dataset = load_dataset_for(cfg);
    std::vector<const ThermalClip*> test;
    for (const auto idx : dataset.test_indices()) test.push_back(&dataset.entries[idx].clip);

    std::vector<double> ce_runs, ctc_runs;
    for (const auto& ckpt : checkpoints) {
        ModelBundle b = load_model(ckpt);
        LogitsFn fn = [&](const ThermalClip& clip) { return clip_logits(*b.model, b.store, clip); };
        const double ce = top1_accuracy(fn, test, LossKind::ce);
        const double ctc = top1_accuracy(fn, test, LossKind::ctc);
        ce_runs.push_back(ce);
        ctc_runs.push_back(ctc);
        out << "model=" << ckpt << " ce_top1=" << ce << " ctc_top1=" << ctc
            << " test_clips=" << test.size() << "\n";
    }
    if (checkpoints.size() > 1) {
        out << "seed-average ce_top1=" << seed_average(ce_runs)
            << " ctc_top1=" << seed_average(ctc_runs) << " over " << checkpoints.size()
            << " runs\n";
    }
    return 0;
}

int cmd_eval_detect(const std::string& config_path, const std::string& checkpoint,
                    const std::string& delta_sweep, std::ostream& out) {
    const RunConfig cfg = load_run_config(config_path);
    const Dataset dataset = load_dataset_for(cfg);
    ModelBundle b = load_model(checkpoint);

    std::vector<const ThermalClip*> test;
    for (const auto idx : dataset.test_indices()) test.push_back(&dataset.entries[idx].clip);
    const ThermalClip video =
        stitch_test_video(test, cfg.eval.stitch_fraction, cfg.eval.stitch_seed);
    out << "stitched " << video.frame_count() << " frames, " << video.nuclei.size()
        << " nuclei\n";

    const auto sweep = delta_sweep.empty() ? cfg.eval.delta_sweep : parse_sweep(delta_sweep);
    const std::int64_t window = b.cfg.train.window;
    for (const auto d : sweep)
        if (d < 0 || d >= window)
            throw ConfigError("delta " + std::to_string(d) + " outside the window of " +
                              std::to_string(window));

    StreamConfig scfg;
    scfg.window = window;
    scfg.delta = 0;
    scfg.theta_floor = cfg.eval.theta_floor;
    scfg.ema_half_life = cfg.eval.ema_half_life;
    StreamEngine engine(b.model->encoder(), b.model->tcn(), b.store, scfg);

    // One pass over the video; collect per-delta prediction streams.
    std::vector<std::vector<StreamPrediction>> streams(sweep.size());
    for (std::int64_t t = 0; t < video.frame_count(); ++t) {
        engine.push_frame(video.frame(t), video.height, video.width);
        for (std::size_t si = 0; si < sweep.size(); ++si) {
            if (auto pred = engine.prediction_at(sweep[si])) streams[si].push_back(*pred);
        }
    }

    fs::create_directories(fs::path(cfg.out_dir) / "detect");
    std::ofstream table(fs::path(cfg.out_dir) / "detect" / "map_vs_delta.tsv", std::ios::trunc);
    table << "delta\tmap\tevents\n";
    for (std::size_t si = 0; si < sweep.size(); ++si) {
        const auto events =
            extract_events(streams[si], kNonGesture, cfg.eval.theta_floor, window);
        std::vector<DetectionEvent> detections;
        for (const auto& e : events) detections.push_back({e.frame, e.cls, e.score});
        const MapResult res = map_score(detections, video.nuclei);

        out << "delta=" << sweep[si] << " map=" << res.map << " events=" << detections.size()
            << "\n";
        nlohmann::json rec;
        rec["delta"] = sweep[si];
        rec["map"] = res.map;
        rec["events"] = detections.size();
        out << rec.dump() << "\n";
        table << sweep[si] << "\t" << res.map << "\t" << detections.size() << "\n";

        // PR table: recall grid + one precision column per class
        std::ofstream pr(fs::path(cfg.out_dir) / "detect" /
                             ("pr_delta_" + std::to_string(sweep[si]) + ".tsv"),
                         std::ios::trunc);
        pr << "recall";
        for (const auto& [cls, curve] : res.per_class) pr << "\tclass_" << cls;
        pr << "\taveraged\n";
        for (int g = 0; g <= 100; ++g) {
            pr << static_cast<double>(g) / 100.0;
            for (const auto& [cls, curve] : res.per_class)
                pr << "\t" << curve.precision[static_cast<std::size_t>(g)];
            pr << "\t" << res.averaged.precision[static_cast<std::size_t>(g)] << "\n";
        }
    }
    out << "wrote " << (fs::path(cfg.out_dir) / "detect").string() << "\n";
    return 0;
}

int cmd_stream(const std::string& checkpoint, std::int64_t delta, const std::string& input,
               double theta_floor, std::ostream& out) {
    ModelBundle b = load_model(checkpoint);
    StreamConfig scfg;
    scfg.window = b.cfg.train.window;
    scfg.delta = delta;
    scfg.theta_floor = theta_floor > 0 ? theta_floor : b.cfg.eval.theta_floor;
    scfg.ema_half_life = b.cfg.eval.ema_half_life;
    StreamEngine engine(b.model->encoder(), b.model->tcn(), b.store, scfg);
    EventExtractor extractor(kNonGesture, scfg.theta_floor, scfg.window);

    float fps = b.cfg.data.generator.fps;
    std::int64_t h = b.cfg.data.generator.height;
    std::int64_t w = b.cfg.data.generator.width;

    std::optional<ThermalClip> clip;
    if (input != "-") {
        clip = read_clip(input);
        fps = clip->fps;
        h = clip->height;
        w = clip->width;
    }
    out << "# stream delta=" << delta << " lag=" << delta << " frame"
        << (delta == 1 ? "" : "s") << " (" << engine.latency_ms(fps) << " ms @" << fps
        << "FPS) window=" << scfg.window << " theta=" << scfg.theta_floor << "\n";

    auto emit = [&](const float* frame) {
        engine.push_frame(frame, h, w);
        const auto pred = engine.prediction();
        if (!pred) return;
        out << pred->frame << " " << pred->attributed;
        for (const float p : pred->probs) out << " " << p;
        if (const auto ev = extractor.feed(*pred))
            out << " event=" << ev->cls << ":" << ev->frame << ":" << ev->score
                << (ev->warmup ? ":warmup" : "");
        out << "\n";
    };

    if (clip) {
        for (std::int64_t t = 0; t < clip->frame_count(); ++t) emit(clip->frame(t));
    } else {
        std::vector<float> frame(static_cast<std::size_t>(h * w));
        while (std::cin.read(reinterpret_cast<char*>(frame.data()),
                             static_cast<std::streamsize>(frame.size() * sizeof(float))))
            emit(frame.data());
    }
    if (const auto ev = extractor.flush())
        out << "event=" << ev->cls << ":" << ev->frame << ":" << ev->score
            << (ev->warmup ? ":warmup" : "") << "\n";
    return 0;
}

int cmd_count(const std::string& config_path, const std::string& preset, std::int64_t frames,
              std::ostream& out) {
    if (!preset.empty()) {
        if (preset == "resnet18") {
            print_count("resnet18", count(resnet18_descriptor(), frames), frames, out);
        } else {
            const TcnConfig cfg = preset_tcn(preset);
            print_count(preset, count(tcn_descriptor(cfg), frames), frames, out);
        }
        return 0;
    }
    const RunConfig cfg = config_path.empty() ? RunConfig{} : load_run_config(config_path);
    print_count("encoder", count(mini_encoder_descriptor(cfg.encoder), frames), frames, out);
    print_count("tcn", count(tcn_descriptor(cfg.tcn), frames), frames, out);
    print_count("full", count(full_model_descriptor(cfg.encoder, cfg.tcn), frames), frames, out);
    return 0;
}

int cmd_probe_rf(const std::string& config_path, const std::string& preset, std::ostream& out) {
    TcnConfig cfg;
    std::string name;
    if (!preset.empty()) {
        cfg = preset_tcn(preset);
        // probing runs the real network: shrink widths, the receptive field
        // only depends on the block structure
        cfg.input_dim = 8;
        cfg.channels = 8;
        cfg.classes = 4;
        name = preset;
    } else {
        const RunConfig rc = config_path.empty() ? RunConfig{} : load_run_config(config_path);
        cfg = rc.tcn;
        name = "tcn";
    }
    const ReceptiveField formula = lookahead(cfg);
    const ReceptiveField probed = probe_dependencies(cfg);
    const bool match = formula == probed;
    out << name << ": formula L=" << formula.lookahead << " B=" << formula.lookback
        << " total=" << formula.total() << "; probed L=" << probed.lookahead
        << " B=" << probed.lookback << "; match=" << (match ? "yes" : "NO") << "\n";
    nlohmann::json rec;
    rec["graph"] = name;
    rec["lookahead"] = formula.lookahead;
    rec["lookback"] = formula.lookback;
    rec["probed_lookahead"] = probed.lookahead;
    rec["probed_lookback"] = probed.lookback;
    rec["match"] = match;
    out << rec.dump() << "\n";
    if (!match) throw NumericError("probe disagrees with the closed form");
    return 0;
}

}  // namespace thermal::cli
