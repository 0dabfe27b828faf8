#include <doctest.h>

#include "oracles.hpp"
#include "thermal/streaming.hpp"

using namespace thermal;

namespace {

struct StreamSetup {
    EncoderConfig ecfg;
    TcnConfig tcfg;
    ParamStore<float> store;
    StreamSetup(std::int64_t m = 1) {
        ecfg.input_h = 16;
        ecfg.input_w = 16;
        ecfg.plan = {{6, 2}, {8, 2}};
        ecfg.embedding_dim = 8;
        tcfg.stages = 1;
        tcfg.blocks_per_stage = 3;
        tcfg.non_causal_per_stage = m;
        tcfg.channels = 8;
        tcfg.input_dim = 8;
        tcfg.classes = 4;
    }
};

std::vector<float> random_frame(Rng& rng, int h = 12, int w = 16) {
    std::vector<float> f(static_cast<std::size_t>(h) * w);
    for (auto& v : f) v = static_cast<float>(rng.uniform(18.0, 30.0));
    return f;
}

StreamPrediction pred_of(std::int64_t attributed, std::vector<float> probs) {
    StreamPrediction p;
    p.frame = attributed;
    p.attributed = attributed;
    p.probs = std::move(probs);
    return p;
}

}  // namespace

TEST_CASE("warm-up: first emission at offset delta, attribution lags by delta") {
    StreamSetup s;
    MiniEncoder<float> enc(s.ecfg, s.store);
    Tcn<float> tcn(s.tcfg, s.store);
    Rng rng(3);
    enc.init_params(s.store, rng);
    tcn.init_params(s.store, rng);

    StreamConfig cfg;
    cfg.window = 12;
    cfg.delta = 3;
    StreamEngine engine(enc, tcn, s.store, cfg);
    Rng frames(5);
    for (int t = 0; t < 6; ++t) {
        const auto f = random_frame(frames);
        engine.push_frame(f.data(), 12, 16);
        const auto pred = engine.prediction();
        if (t < 3) {
            CHECK(!pred.has_value());
        } else {
            REQUIRE(pred.has_value());
            CHECK(pred->frame == t);
            CHECK(pred->attributed == t - 3);
            CHECK(pred->warmup);  // fewer than window frames ingested
            CHECK(pred->probs.size() == 4);
        }
    }
}

TEST_CASE("latency label: delta=1 at 16 FPS is 62.5 ms") {
    StreamSetup s;
    MiniEncoder<float> enc(s.ecfg, s.store);
    Tcn<float> tcn(s.tcfg, s.store);
    StreamConfig cfg;
    cfg.delta = 1;
    StreamEngine engine(enc, tcn, s.store, cfg);
    CHECK(engine.latency_ms(16.0f) == doctest::Approx(62.5));
}

TEST_CASE("embedding cache equals full window recomputation, bit exact") {
    StreamSetup s;
    MiniEncoder<float> enc(s.ecfg, s.store);
    Tcn<float> tcn(s.tcfg, s.store);
    Rng rng(7);
    enc.init_params(s.store, rng);
    tcn.init_params(s.store, rng);

    StreamConfig cfg;
    cfg.window = 10;
    cfg.delta = 0;
    StreamEngine engine(enc, tcn, s.store, cfg);

    // Reference: store normalized frames, re-encode the whole window each step.
    EmaNormalizer ref_norm(cfg.ema_half_life);
    std::vector<std::vector<float>> norm_frames;

    Rng frames(11);
    for (int t = 0; t < 40; ++t) {
        const auto raw = random_frame(frames);
        const Tensor32& got = engine.push_frame(raw.data(), 12, 16);

        norm_frames.push_back(ref_norm.normalize(raw.data(), 12 * 16));
        Tensor32 window({8, cfg.window});
        const std::int64_t have = std::min<std::int64_t>(t + 1, cfg.window);
        const std::int64_t pad = cfg.window - have;
        for (std::int64_t i = 0; i < have; ++i) {
            const auto& nf = norm_frames[norm_frames.size() - static_cast<std::size_t>(have - i)];
            const Tensor32 input = frame_to_encoder_input(nf.data(), 12, 16, s.ecfg);
            const Tensor32 e = enc.forward(input, s.store);
            for (std::int64_t j = 0; j < 8; ++j) window.at(j, pad + i) = e[j];
        }
        const Tensor32 want = prob_sequence(tcn.forward(window, s.store));
        REQUIRE(got.shape() == want.shape());
        for (std::int64_t i = 0; i < got.size(); ++i) CHECK(got[i] == want[i]);
    }
}

TEST_CASE("delta=0 with a fully causal model matches the offline pass") {
    StreamSetup s(0);  // fully causal
    MiniEncoder<float> enc(s.ecfg, s.store);
    Tcn<float> tcn(s.tcfg, s.store);
    Rng rng(13);
    enc.init_params(s.store, rng);
    tcn.init_params(s.store, rng);

    const int total = 20;
    StreamConfig cfg;
    cfg.window = total;  // window covers the whole stream: no left truncation
    cfg.delta = 0;
    StreamEngine engine(enc, tcn, s.store, cfg);

    // offline: normalize frames the same way, run the TCN once over all
    EmaNormalizer norm(cfg.ema_half_life);
    Tensor32 emb({8, total});
    Rng frames(17);
    std::vector<StreamPrediction> streamed;
    for (int t = 0; t < total; ++t) {
        const auto raw = random_frame(frames);
        engine.push_frame(raw.data(), 12, 16);
        streamed.push_back(*engine.prediction());
        const auto nf = norm.normalize(raw.data(), 12 * 16);
        const Tensor32 e = enc.forward(frame_to_encoder_input(nf.data(), 12, 16, s.ecfg), s.store);
        for (std::int64_t j = 0; j < 8; ++j) emb.at(j, t) = e[j];
    }
    const Tensor32 offline = prob_sequence(tcn.forward(emb, s.store));
    // causal: the last window position at time t equals offline position t
    for (int t = 0; t < total; ++t) {
        // the streamed window is left-padded with zeros for t < window-1; a
        // causal network output at position t only sees positions <= t, and
        // left-padding with zeros equals the offline zero padding.
        for (std::int64_t j = 0; j < 4; ++j)
            CHECK(streamed[static_cast<std::size_t>(t)].probs[static_cast<std::size_t>(j)] ==
                  offline.at(t, j));
    }
}

TEST_CASE("emitted predictions are never revised as the stream grows") {
    StreamSetup s(1);
    MiniEncoder<float> enc(s.ecfg, s.store);
    Tcn<float> tcn(s.tcfg, s.store);
    Rng rng(19);
    enc.init_params(s.store, rng);
    tcn.init_params(s.store, rng);

    StreamConfig cfg;
    cfg.window = 8;
    cfg.delta = 2;
    StreamEngine engine(enc, tcn, s.store, cfg);
    Rng frames(23);
    std::vector<StreamPrediction> log;
    for (int t = 0; t < 30; ++t) {
        const auto raw = random_frame(frames);
        engine.push_frame(raw.data(), 12, 16);
        if (auto p = engine.prediction()) log.push_back(*p);
    }
    // attribution is strictly increasing one frame at a time
    for (std::size_t i = 1; i < log.size(); ++i)
        CHECK(log[i].attributed == log[i - 1].attributed + 1);
}

TEST_CASE("event extraction: all-blank stream yields nothing") {
    std::vector<StreamPrediction> stream;
    for (int t = 0; t < 10; ++t) stream.push_back(pred_of(t, {0.9f, 0.05f, 0.05f}));
    CHECK(extract_events(stream, 0, 0.05).empty());
}

TEST_CASE("event extraction: single run peaks at the middle frame") {
    std::vector<StreamPrediction> stream;
    stream.push_back(pred_of(0, {0.9f, 0.1f, 0.0f}));
    stream.push_back(pred_of(1, {0.7f, 0.3f, 0.0f}));  // below? argmax blank -> closed
    stream.push_back(pred_of(2, {0.1f, 0.3f, 0.6f}));
    stream.push_back(pred_of(3, {0.05f, 0.05f, 0.9f}));
    stream.push_back(pred_of(4, {0.2f, 0.4f, 0.4f}));  // tie -> class 1, closes the run
    const auto events = extract_events(stream, 0, 0.05);
    REQUIRE(events.size() >= 1);
    CHECK(events[0].cls == 2);
    CHECK(events[0].score == doctest::Approx(0.9));
    CHECK(events[0].frame == 3);
}

TEST_CASE("event extraction: probabilities (0.3, 0.9, 0.4) give one event at the peak") {
    std::vector<StreamPrediction> stream;
    stream.push_back(pred_of(10, {0.7f, 0.3f}));
    stream.push_back(pred_of(11, {0.1f, 0.9f}));
    stream.push_back(pred_of(12, {0.6f, 0.4f}));
    // class 1 is argmax only at frame 11; (0.3,0.9,0.4) with theta floor
    // keeping all three frames in the run needs argmax to stay at class 1:
    std::vector<StreamPrediction> run;
    run.push_back(pred_of(10, {0.2f, 0.3f, 0.5f, 0.0f}));
    run.push_back(pred_of(11, {0.05f, 0.9f, 0.05f, 0.0f}));
    run.push_back(pred_of(12, {0.3f, 0.4f, 0.3f, 0.0f}));
    run.push_back(pred_of(13, {0.9f, 0.05f, 0.05f, 0.0f}));
    // frames 10..12: argmax = 2,1,1 -> runs {2}, {1,1}
    const auto events = extract_events(run, 0, 0.05);
    REQUIRE(events.size() == 2);
    CHECK(events[0].cls == 2);
    CHECK(events[1].cls == 1);
    CHECK(events[1].score == doctest::Approx(0.9));
    CHECK(events[1].frame == 11);
}

TEST_CASE("event extraction: runs separated by one blank frame stay distinct") {
    std::vector<StreamPrediction> stream;
    stream.push_back(pred_of(0, {0.1f, 0.9f}));
    stream.push_back(pred_of(1, {0.8f, 0.2f}));
    stream.push_back(pred_of(2, {0.2f, 0.8f}));
    const auto events = extract_events(stream, 0, 0.05);
    REQUIRE(events.size() == 2);
    CHECK(events[0].frame == 0);
    CHECK(events[1].frame == 2);
}

TEST_CASE("event extraction is causal: events appear right after their run ends") {
    EventExtractor ex(0, 0.05, 0);
    CHECK(!ex.feed(pred_of(0, {0.1f, 0.9f})).has_value());
    const auto ev = ex.feed(pred_of(1, {0.9f, 0.1f}));
    REQUIRE(ev.has_value());
    CHECK(ev->frame == 0);
    CHECK(!ex.flush().has_value());
    // run still open at end of stream -> flushed
    CHECK(!ex.feed(pred_of(2, {0.2f, 0.8f})).has_value());
    const auto tail = ex.flush();
    REQUIRE(tail.has_value());
    CHECK(tail->frame == 2);
}

TEST_CASE("below-floor probabilities never open a run") {
    std::vector<StreamPrediction> stream;
    stream.push_back(pred_of(0, {0.4f, 0.04f, 0.56f}));
    stream.push_back(pred_of(1, {0.97f, 0.03f, 0.0f}));
    const auto events = extract_events(stream, 0, 0.6);
    CHECK(events.empty());
}

TEST_CASE("ema normalizer: first frame standardized by its own statistics") {
    EmaNormalizer norm(64.0);
    std::vector<float> frame = {10.0f, 20.0f, 30.0f, 40.0f};
    const auto out = norm.normalize(frame.data(), 4);
    double mean = 0.0;
    for (float v : out) mean += v;
    CHECK(std::abs(mean / 4.0) < 1e-6);
    // constant frames later drive the std floor path without NaNs
    std::vector<float> flat(4, 25.0f);
    for (int i = 0; i < 200; ++i) {
        const auto o = norm.normalize(flat.data(), 4);
        for (float v : o) CHECK(std::isfinite(v));
    }
}
