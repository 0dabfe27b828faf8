#include "thermal/streaming.hpp"

#include <cmath>

namespace thermal {

EmaNormalizer::EmaNormalizer(double half_life_frames)
    : decay_(std::pow(0.5, 1.0 / half_life_frames)) {}

std::vector<float> EmaNormalizer::normalize(const float* frame, std::int64_t pixels) {
    double sum = 0.0, sum_sq = 0.0;
    for (std::int64_t i = 0; i < pixels; ++i) {
        sum += frame[i];
        sum_sq += static_cast<double>(frame[i]) * frame[i];
    }
    const double n = static_cast<double>(pixels);
    const double fm = sum / n;
    const double fm2 = sum_sq / n;
    if (!primed_) {
        mean_ = fm;
        mean_sq_ = fm2;
        primed_ = true;
    } else {
        mean_ = decay_ * mean_ + (1.0 - decay_) * fm;
        mean_sq_ = decay_ * mean_sq_ + (1.0 - decay_) * fm2;
    }
    const double var = std::max(0.0, mean_sq_ - mean_ * mean_);
    const double denom = std::max(std::sqrt(var), 1e-6);
    std::vector<float> out(static_cast<std::size_t>(pixels));
    for (std::int64_t i = 0; i < pixels; ++i)
        out[static_cast<std::size_t>(i)] = static_cast<float>((frame[i] - mean_) / denom);
    return out;
}

StreamEngine::StreamEngine(const MiniEncoder<float>& encoder, const Tcn<float>& tcn,
                           const ParamStore<float>& store, StreamConfig cfg)
    : encoder_(encoder), tcn_(tcn), store_(store), cfg_(cfg), normalizer_(cfg.ema_half_life) {
    if (cfg_.window < 1) throw ConfigError("stream: window must be >= 1");
    if (cfg_.delta < 0 || cfg_.delta >= cfg_.window)
        throw ConfigError("stream: delta must lie in [0, window)");
    if (encoder_.config().embedding_dim != tcn_.config().input_dim)
        throw ConfigError("stream: encoder embedding dim does not match tcn input dim");
}

const Tensor32& StreamEngine::push_frame(const float* frame, std::int64_t height,
                                         std::int64_t width) {
    const std::vector<float> norm = normalizer_.normalize(frame, height * width);
    const Tensor32 input = frame_to_encoder_input(norm.data(), height, width, encoder_.config());
    embeddings_.push_back(encoder_.forward(input, store_));
    if (static_cast<std::int64_t>(embeddings_.size()) > cfg_.window) embeddings_.pop_front();
    ++frames_seen_;

    // Window is left-padded with zero embeddings until N frames are cached,
    // matching the zero padding the network sees in training.
    const std::int64_t c = tcn_.config().input_dim;
    Tensor32 window({c, cfg_.window});
    const std::int64_t have = static_cast<std::int64_t>(embeddings_.size());
    const std::int64_t pad = cfg_.window - have;
    for (std::int64_t i = 0; i < have; ++i) {
        const Tensor32& e = embeddings_[static_cast<std::size_t>(i)];
        for (std::int64_t j = 0; j < c; ++j) window.at(j, pad + i) = e[j];
    }
    window_probs_ = prob_sequence(tcn_.forward(window, store_));
    return window_probs_;
}

std::optional<StreamPrediction> StreamEngine::prediction_at(std::int64_t delta) const {
    if (delta < 0 || delta >= cfg_.window)
        throw ConfigError("stream: delta must lie in [0, window)");
    if (frames_seen_ == 0) return std::nullopt;
    const std::int64_t t = frames_seen_ - 1;
    if (t - delta < 0) return std::nullopt;
    StreamPrediction pred;
    pred.frame = t;
    pred.attributed = t - delta;
    pred.warmup = frames_seen_ < cfg_.window;
    const std::int64_t p = window_probs_.dim(1);
    const std::int64_t row = cfg_.window - 1 - delta;
    pred.probs.resize(static_cast<std::size_t>(p));
    for (std::int64_t j = 0; j < p; ++j)
        pred.probs[static_cast<std::size_t>(j)] = window_probs_.at(row, j);
    return pred;
}

std::optional<StreamEvent> EventExtractor::feed(const StreamPrediction& pred) {
    int arg = 0;
    for (std::size_t j = 1; j < pred.probs.size(); ++j)
        if (pred.probs[j] > pred.probs[static_cast<std::size_t>(arg)]) arg = static_cast<int>(j);
    const double score = pred.probs[static_cast<std::size_t>(arg)];
    const bool active = arg != blank_ && score >= theta_;

    std::optional<StreamEvent> emitted;
    if (open_ && (!active || arg != current_.cls)) {
        emitted = current_;
        open_ = false;
    }
    if (active) {
        if (!open_) {
            current_ = StreamEvent{pred.attributed, arg, score, pred.attributed < warmup_};
            open_ = true;
        } else if (score > current_.score) {
            current_.score = score;
            current_.frame = pred.attributed;
            current_.warmup = current_.warmup || pred.attributed < warmup_;
        }
    }
    return emitted;
}

std::optional<StreamEvent> EventExtractor::flush() {
    if (!open_) return std::nullopt;
    open_ = false;
    return current_;
}

std::vector<StreamEvent> extract_events(const std::vector<StreamPrediction>& stream, int blank,
                                        double theta_floor, std::int64_t warmup_frames) {
    EventExtractor ex(blank, theta_floor, warmup_frames);
    std::vector<StreamEvent> out;
    for (const auto& pred : stream) {
        if (auto ev = ex.feed(pred)) out.push_back(*ev);
    }
    if (auto ev = ex.flush()) out.push_back(*ev);
    return out;
}

}  // namespace thermal
