#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "oracles.hpp"
#include "thermal/checkpoint.hpp"
#include "thermal/config.hpp"
#include "thermal/tcn.hpp"

using namespace thermal;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const char* name) {
    const fs::path dir = fs::temp_directory_path() / "thermal_tests" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("checkpoint: values and optimizer state round-trip bit exactly") {
    const fs::path dir = temp_dir("ckpt");
    EncoderConfig ecfg;
    ecfg.input_h = 8;
    ecfg.input_w = 8;
    ecfg.plan = {{4, 2}};
    ecfg.embedding_dim = 4;
    TcnConfig tcfg;
    tcfg.stages = 1;
    tcfg.blocks_per_stage = 2;
    tcfg.non_causal_per_stage = 1;
    tcfg.channels = 4;
    tcfg.input_dim = 4;
    tcfg.classes = 3;

    ParamStore<float> store;
    GestureModel<float> model(ecfg, tcfg, store);
    Rng rng(3);
    model.init_params(store, rng);
    for (auto& p : store) {
        oracle::fill_uniform(p.adam_m, rng, -0.5, 0.5);
        oracle::fill_uniform(p.adam_v, rng, 0.0, 0.5);
    }
    store.adam_step = 1234;

    CheckpointMeta meta;
    meta.seed = 42;
    meta.epoch = 17;
    meta.lr = 1e-5;
    meta.best_accuracy = 0.93;
    meta.plateau = 4;
    meta.adam_step = 1234;
    meta.loss = "ctc";
    save_checkpoint(dir / "a.thgm", "{\"x\":1}", meta, store);

    ParamStore<float> restored;
    GestureModel<float> model2(ecfg, tcfg, restored);
    const LoadedCheckpoint lc = load_checkpoint(dir / "a.thgm", restored);
    CHECK(lc.config_json == "{\"x\":1}");
    CHECK(lc.meta.seed == 42);
    CHECK(lc.meta.epoch == 17);
    CHECK(lc.meta.lr == 1e-5);
    CHECK(lc.meta.best_accuracy == 0.93);
    CHECK(lc.meta.plateau == 4);
    CHECK(lc.meta.adam_step == 1234);
    CHECK(lc.meta.loss == "ctc");
    CHECK(restored.adam_step == 1234);
    for (std::size_t i = 0; i < store.size(); ++i) {
        for (std::int64_t j = 0; j < store[i].value.size(); ++j) {
            CHECK(restored[i].value[j] == store[i].value[j]);
            CHECK(restored[i].adam_m[j] == store[i].adam_m[j]);
            CHECK(restored[i].adam_v[j] == store[i].adam_v[j]);
        }
    }

    // save -> load -> save produces identical bytes
    save_checkpoint(dir / "b.thgm", lc.config_json, lc.meta, restored);
    std::ifstream f1(dir / "a.thgm", std::ios::binary), f2(dir / "b.thgm", std::ios::binary);
    std::string s1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    std::string s2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    CHECK(s1 == s2);
}

TEST_CASE("checkpoint: corrupted files raise the distinct error codes") {
    const fs::path dir = temp_dir("ckpt_bad");
    ParamStore<float> store;
    store.add("w", {4});
    save_checkpoint(dir / "good.thgm", "{}", CheckpointMeta{}, store);
    std::ifstream in(dir / "good.thgm", std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    {
        std::string bad = bytes;
        bad[0] = 'Z';
        std::ofstream out(dir / "magic.thgm", std::ios::binary);
        out << bad;
        out.close();
        ParamStore<float> s2;
        s2.add("w", {4});
        try {
            load_checkpoint(dir / "magic.thgm", s2);
            FAIL("expected bad magic");
        } catch (const FileFormatError& e) {
            CHECK(e.code() == FileErrc::bad_magic);
        }
    }
    {
        std::string bad = bytes;
        bad[4] = 42;
        std::ofstream out(dir / "version.thgm", std::ios::binary);
        out << bad;
        out.close();
        ParamStore<float> s2;
        s2.add("w", {4});
        try {
            load_checkpoint(dir / "version.thgm", s2);
            FAIL("expected bad version");
        } catch (const FileFormatError& e) {
            CHECK(e.code() == FileErrc::bad_version);
        }
    }
    {
        std::string bad = bytes.substr(0, bytes.size() - 7);
        std::ofstream out(dir / "trunc.thgm", std::ios::binary);
        out << bad;
        out.close();
        ParamStore<float> s2;
        s2.add("w", {4});
        try {
            load_checkpoint(dir / "trunc.thgm", s2);
            FAIL("expected truncation");
        } catch (const FileFormatError& e) {
            CHECK(e.code() == FileErrc::truncated);
        }
    }
    {
        // a checkpoint for a different model shape
        ParamStore<float> other;
        other.add("w", {5});
        CHECK_THROWS_AS(load_checkpoint(dir / "good.thgm", other), DataError);
    }
}

TEST_CASE("run config: lossless JSON round trip") {
    RunConfig cfg;
    cfg.tcn.stages = 4;
    cfg.tcn.blocks_per_stage = 4;
    cfg.tcn.non_causal_per_stage = 2;
    cfg.train.epochs = 33;
    cfg.train.loss = LossKind::ctc;
    cfg.train.aug.brightness_c = 1.5;
    cfg.data.clips = 120;
    cfg.eval.delta_sweep = {0, 1, 5};
    cfg.out_dir = "runs/x";

    const std::string a = run_config_to_json(cfg);
    const RunConfig back = run_config_from_json(a);
    const std::string b = run_config_to_json(back);
    CHECK(a == b);
    CHECK(back.tcn.non_causal_per_stage == 2);
    CHECK(back.train.loss == LossKind::ctc);
    CHECK(back.eval.delta_sweep == std::vector<std::int64_t>{0, 1, 5});
}

TEST_CASE("run config: partial files inherit defaults, malformed files fail with context") {
    const RunConfig cfg = run_config_from_json("{\"training\": {\"epochs\": 3}}");
    CHECK(cfg.train.epochs == 3);
    CHECK(cfg.train.batch_size == 8);     // default
    CHECK(cfg.train.lr == 1e-4);          // default
    CHECK(cfg.tcn.channels == 32);        // default

    try {
        run_config_from_json("{\"training\": {\"epochs\": }}");
        FAIL("expected parse error");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("parse error") != std::string::npos);
    }
    CHECK_THROWS_AS(run_config_from_json("{\"training\": {\"loss\": \"mse\"}}"), ConfigError);
}

TEST_CASE("run config: defaults reflect the training recipe") {
    RunConfig cfg;
    CHECK(cfg.train.epochs == 150);
    CHECK(cfg.train.batch_size == 8);
    CHECK(cfg.train.lr == 1e-4);
    CHECK(cfg.train.plateau_patience == 20);
    CHECK(cfg.train.plateau_factor == doctest::Approx(0.1));
    CHECK(cfg.train.window == 48);
    CHECK(cfg.train.aug.temporal_shift == doctest::Approx(0.25));
    CHECK(cfg.train.aug.temporal_scale == doctest::Approx(0.20));
    CHECK(cfg.data.generator.width == 32);
    CHECK(cfg.data.generator.height == 24);
    CHECK(cfg.data.generator.fps == 16.0f);
}
