#include "thermal/config.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <sstream>

namespace thermal {

namespace {

using nlohmann::json;

json encoder_to_json(const EncoderConfig& c) {
    json plan = json::array();
    for (const auto& s : c.plan) plan.push_back({{"channels", s.channels}, {"stride", s.stride}});
    return {{"input_h", c.input_h},
            {"input_w", c.input_w},
            {"plan", plan},
            {"embedding_dim", c.embedding_dim}};
}

EncoderConfig encoder_from_json(const json& j) {
    EncoderConfig c;
    c.input_h = j.value("input_h", c.input_h);
    c.input_w = j.value("input_w", c.input_w);
    c.embedding_dim = j.value("embedding_dim", c.embedding_dim);
    if (j.contains("plan")) {
        c.plan.clear();
        for (const auto& s : j.at("plan"))
            c.plan.push_back({s.at("channels").get<std::int64_t>(),
                              s.at("stride").get<std::int64_t>()});
    }
    return c;
}

json tcn_to_json(const TcnConfig& c) {
    return {{"stages", c.stages},
            {"blocks_per_stage", c.blocks_per_stage},
            {"channels", c.channels},
            {"input_dim", c.input_dim},
            {"classes", c.classes},
            {"non_causal_per_stage", c.non_causal_per_stage}};
}

TcnConfig tcn_from_json(const json& j) {
    TcnConfig c;
    c.stages = j.value("stages", c.stages);
    c.blocks_per_stage = j.value("blocks_per_stage", c.blocks_per_stage);
    c.channels = j.value("channels", c.channels);
    c.input_dim = j.value("input_dim", c.input_dim);
    c.classes = j.value("classes", c.classes);
    c.non_causal_per_stage = j.value("non_causal_per_stage", c.non_causal_per_stage);
    return c;
}

json augment_to_json(const AugmentParams& a) {
    return {{"crop_keep", a.crop_keep},
            {"contrast_lo", a.contrast_lo},
            {"contrast_hi", a.contrast_hi},
            {"brightness_c", a.brightness_c},
            {"noise_sigma_hi_c", a.noise_sigma_hi_c},
            {"temporal_shift", a.temporal_shift},
            {"temporal_scale", a.temporal_scale}};
}

AugmentParams augment_from_json(const json& j) {
    AugmentParams a;
    a.crop_keep = j.value("crop_keep", a.crop_keep);
    a.contrast_lo = j.value("contrast_lo", a.contrast_lo);
    a.contrast_hi = j.value("contrast_hi", a.contrast_hi);
    a.brightness_c = j.value("brightness_c", a.brightness_c);
    a.noise_sigma_hi_c = j.value("noise_sigma_hi_c", a.noise_sigma_hi_c);
    a.temporal_shift = j.value("temporal_shift", a.temporal_shift);
    a.temporal_scale = j.value("temporal_scale", a.temporal_scale);
    return a;
}

json train_to_json(const TrainConfig& t) {
    return {{"epochs", t.epochs},
            {"batch_size", t.batch_size},
            {"lr", t.lr},
            {"plateau_patience", t.plateau_patience},
            {"plateau_factor", t.plateau_factor},
            {"seed", t.seed},
            {"loss", to_string(t.loss)},
            {"window", t.window},
            {"augment", t.augment},
            {"augment_params", augment_to_json(t.aug)},
            {"threads", t.threads}};
}

TrainConfig train_from_json(const json& j) {
    TrainConfig t;
    t.epochs = j.value("epochs", t.epochs);
    t.batch_size = j.value("batch_size", t.batch_size);
    t.lr = j.value("lr", t.lr);
    t.plateau_patience = j.value("plateau_patience", t.plateau_patience);
    t.plateau_factor = j.value("plateau_factor", t.plateau_factor);
    t.seed = j.value("seed", t.seed);
    const std::string loss = j.value("loss", std::string("ce"));
    if (loss == "ce") t.loss = LossKind::ce;
    else if (loss == "ctc") t.loss = LossKind::ctc;
    else throw ConfigError("config: loss must be 'ce' or 'ctc', got '" + loss + "'");
    t.window = j.value("window", t.window);
    t.augment = j.value("augment", t.augment);
    if (j.contains("augment_params")) t.aug = augment_from_json(j.at("augment_params"));
    t.threads = j.value("threads", t.threads);
    return t;
}

json generator_to_json(const GeneratorParams& g) {
    return {{"width", g.width},
            {"height", g.height},
            {"fps", g.fps},
            {"clip_frames", g.clip_frames},
            {"bg_lo_c", g.bg_lo_c},
            {"bg_hi_c", g.bg_hi_c},
            {"bg_gradient_max_c", g.bg_gradient_max_c},
            {"amp_lo_c", g.amp_lo_c},
            {"amp_hi_c", g.amp_hi_c},
            {"noise_lo_c", g.noise_lo_c},
            {"noise_hi_c", g.noise_hi_c},
            {"double_gesture_prob", g.double_gesture_prob},
            {"distractor_lo_c", g.distractor_lo_c},
            {"distractor_hi_c", g.distractor_hi_c}};
}

GeneratorParams generator_from_json(const json& j) {
    GeneratorParams g;
    g.width = j.value("width", g.width);
    g.height = j.value("height", g.height);
    g.fps = j.value("fps", g.fps);
    g.clip_frames = j.value("clip_frames", g.clip_frames);
    g.bg_lo_c = j.value("bg_lo_c", g.bg_lo_c);
    g.bg_hi_c = j.value("bg_hi_c", g.bg_hi_c);
    g.bg_gradient_max_c = j.value("bg_gradient_max_c", g.bg_gradient_max_c);
    g.amp_lo_c = j.value("amp_lo_c", g.amp_lo_c);
    g.amp_hi_c = j.value("amp_hi_c", g.amp_hi_c);
    g.noise_lo_c = j.value("noise_lo_c", g.noise_lo_c);
    g.noise_hi_c = j.value("noise_hi_c", g.noise_hi_c);
    g.double_gesture_prob = j.value("double_gesture_prob", g.double_gesture_prob);
    g.distractor_lo_c = j.value("distractor_lo_c", g.distractor_lo_c);
    g.distractor_hi_c = j.value("distractor_hi_c", g.distractor_hi_c);
    return g;
}

}  // namespace

std::string run_config_to_json(const RunConfig& cfg) {
    json j;
    j["model"] = {{"encoder", encoder_to_json(cfg.encoder)}, {"tcn", tcn_to_json(cfg.tcn)}};
    j["training"] = train_to_json(cfg.train);
    j["data"] = {{"dir", cfg.data.dir},
                 {"clips", cfg.data.clips},
                 {"seed", cfg.data.seed},
                 {"generator", generator_to_json(cfg.data.generator)}};
    j["evaluation"] = {{"delta_sweep", cfg.eval.delta_sweep},
                       {"theta_floor", cfg.eval.theta_floor},
                       {"stitch_fraction", cfg.eval.stitch_fraction},
                       {"stitch_seed", cfg.eval.stitch_seed},
                       {"ema_half_life", cfg.eval.ema_half_life},
                       {"stream_delta", cfg.eval.stream_delta}};
    j["out_dir"] = cfg.out_dir;
    return j.dump(2);
}

RunConfig run_config_from_json(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    RunConfig cfg;
    if (j.contains("model")) {
        const auto& m = j.at("model");
        if (m.contains("encoder")) cfg.encoder = encoder_from_json(m.at("encoder"));
        if (m.contains("tcn")) cfg.tcn = tcn_from_json(m.at("tcn"));
    }
    if (j.contains("training")) cfg.train = train_from_json(j.at("training"));
    if (j.contains("data")) {
        const auto& d = j.at("data");
        cfg.data.dir = d.value("dir", cfg.data.dir);
        cfg.data.clips = d.value("clips", cfg.data.clips);
        cfg.data.seed = d.value("seed", cfg.data.seed);
        if (d.contains("generator")) cfg.data.generator = generator_from_json(d.at("generator"));
    }
    if (j.contains("evaluation")) {
        const auto& e = j.at("evaluation");
        cfg.eval.delta_sweep = e.value("delta_sweep", cfg.eval.delta_sweep);
        cfg.eval.theta_floor = e.value("theta_floor", cfg.eval.theta_floor);
        cfg.eval.stitch_fraction = e.value("stitch_fraction", cfg.eval.stitch_fraction);
        cfg.eval.stitch_seed = e.value("stitch_seed", cfg.eval.stitch_seed);
        cfg.eval.ema_half_life = e.value("ema_half_life", cfg.eval.ema_half_life);
        cfg.eval.stream_delta = e.value("stream_delta", cfg.eval.stream_delta);
    }
    cfg.out_dir = j.value("out_dir", cfg.out_dir);
    cfg.validate();
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return run_config_from_json(ss.str());
}

}  // namespace thermal
