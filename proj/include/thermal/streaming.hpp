#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <vector>

#include "thermal/dataio.hpp"
#include "thermal/tcn.hpp"

namespace thermal {

// Online per-stream normalization: exponential moving estimates of the pixel
// mean and second moment, initialized from the first frame's spatial
// statistics. Stands in for the per-clip standardization used in training.
class EmaNormalizer {
public:
    explicit EmaNormalizer(double half_life_frames = 64.0);

    // Updates the running statistics with the raw frame, then returns the
    // standardized pixels.
    std::vector<float> normalize(const float* frame, std::int64_t pixels);

private:
    double decay_;
    double mean_ = 0.0;
    double mean_sq_ = 0.0;
    bool primed_ = false;
};

struct StreamConfig {
    std::int64_t window = 48;       // N
    std::int64_t delta = 1;         // output offset from the right edge
    double theta_floor = 0.05;      // detection threshold floor
    double ema_half_life = 64.0;
};

struct StreamPrediction {
    std::int64_t frame = 0;        // index of the newest ingested frame
    std::int64_t attributed = 0;   // frame the prediction refers to (frame - delta)
    std::vector<float> probs;      // P class probabilities
    bool warmup = false;           // window still contains zero padding
};

struct StreamEvent {
    std::int64_t frame = 0;  // attributed frame of the run's peak
    int cls = 0;
    double score = 0.0;
    bool warmup = false;
};

// Sliding-window inference with a per-frame embedding cache: the encoder
// runs once per ingested frame, the TCN re-runs over the cached window.
// Single-owner, strictly sequential.
class StreamEngine {
public:
    StreamEngine(const MiniEncoder<float>& encoder, const Tcn<float>& tcn,
                 const ParamStore<float>& store, StreamConfig cfg);

    // Ingests one raw frame (h*w degrees C, the clip geometry given at
    // construction time applies). Returns the probability rows [N,P] of the
    // current window.
    const Tensor32& push_frame(const float* frame, std::int64_t height, std::int64_t width);

    // Prediction at offset delta from the right edge, attributed to frame
    // (t - delta). Empty before frame delta has been ingested.
    std::optional<StreamPrediction> prediction_at(std::int64_t delta) const;
    std::optional<StreamPrediction> prediction() const { return prediction_at(cfg_.delta); }

    std::int64_t frames_seen() const { return frames_seen_; }
    const StreamConfig& config() const { return cfg_; }
    double latency_ms(float fps) const {
        return 1000.0 * static_cast<double>(cfg_.delta) / static_cast<double>(fps);
    }

private:
    const MiniEncoder<float>& encoder_;
    const Tcn<float>& tcn_;
    const ParamStore<float>& store_;
    StreamConfig cfg_;
    EmaNormalizer normalizer_;
    std::deque<Tensor32> embeddings_;  // newest at the back, at most N
    Tensor32 window_probs_;            // [N,P] of the latest window
    std::int64_t frames_seen_ = 0;
};

// Turns a chronological prediction stream into point detections: maximal
// runs where the argmax class is a gesture and its probability clears the
// floor become one event each, placed at the run's peak. An event is emitted
// no later than the first prediction after its run ends; flush() closes a
// run still open at end of stream.
class EventExtractor {
public:
    EventExtractor(int blank, double theta_floor, std::int64_t warmup_frames)
        : blank_(blank), theta_(theta_floor), warmup_(warmup_frames) {}

    std::optional<StreamEvent> feed(const StreamPrediction& pred);
    std::optional<StreamEvent> flush();

private:
    int blank_;
    double theta_;
    std::int64_t warmup_;
    bool open_ = false;
    StreamEvent current_{};
};

std::vector<StreamEvent> extract_events(const std::vector<StreamPrediction>& stream, int blank,
                                        double theta_floor, std::int64_t warmup_frames = 0);

}  // namespace thermal
