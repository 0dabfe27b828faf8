#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "thermal/augment.hpp"
#include "thermal/dataio.hpp"
#include "thermal/objectives.hpp"
#include "thermal/param_store.hpp"
#include "thermal/tcn.hpp"

namespace thermal {

enum class LossKind { ce, ctc };

inline const char* to_string(LossKind k) { return k == LossKind::ce ? "ce" : "ctc"; }

struct TrainConfig {
    std::int64_t epochs = 150;
    std::int64_t batch_size = 8;
    double lr = 1e-4;
    std::int64_t plateau_patience = 20;  // epochs without test-accuracy improvement
    double plateau_factor = 0.1;
    std::uint64_t seed = 1;
    LossKind loss = LossKind::ce;
    std::int64_t window = 48;  // temporal length N
    bool augment = true;
    AugmentParams aug;
    int threads = 0;  // 0 = hardware concurrency

    void validate() const {
        if (epochs < 0 || batch_size < 1 || window < 1) throw ConfigError("train: bad sizes");
        if (lr <= 0.0 || plateau_factor <= 0.0 || plateau_factor > 1.0)
            throw ConfigError("train: bad learning-rate settings");
        if (plateau_patience < 1) throw ConfigError("train: plateau_patience must be >= 1");
    }
};

struct EpochMetrics {
    std::int64_t epoch;
    double train_loss;
    double test_accuracy;
    double lr;
};

struct TrainResult {
    std::vector<EpochMetrics> history;
    std::int64_t best_epoch = -1;
    double best_accuracy = 0.0;
    std::vector<float> best_values;  // parameter snapshot at the best epoch
    double final_lr = 0.0;
    std::int64_t plateau = 0;
};

// Mid-run trainer state for --resume; epoch counting continues after
// `epoch`, so the per-epoch RNG streams pick up where the saved run stopped.
struct ResumePoint {
    std::int64_t epoch = -1;
    double lr = 0.0;
    double best_accuracy = -1.0;
    std::int64_t plateau = 0;
};

// Standard Adam with bias correction; the step counter lives in the store.
// A non-finite gradient aborts with the offending parameter named.
template <typename T>
void adam_step(ParamStore<T>& store, double lr, double beta1 = 0.9, double beta2 = 0.999,
               double eps = 1e-8) {
    const std::int64_t t = ++store.adam_step;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    for (auto& p : store) {
        for (std::int64_t i = 0; i < p.value.size(); ++i) {
            const double g = static_cast<double>(p.grad[i]);
            if (!std::isfinite(g))
                throw NumericError("adam_step: non-finite gradient in " + p.name +
                                   " at index " + std::to_string(i));
            const double m = beta1 * static_cast<double>(p.adam_m[i]) + (1.0 - beta1) * g;
            const double v = beta2 * static_cast<double>(p.adam_v[i]) + (1.0 - beta2) * g * g;
            p.adam_m[i] = static_cast<T>(m);
            p.adam_v[i] = static_cast<T>(v);
            const double mhat = m / bc1;
            const double vhat = v / bc2;
            p.value[i] = static_cast<T>(static_cast<double>(p.value[i]) -
                                        lr * mhat / (std::sqrt(vhat) + eps));
        }
    }
}

// ---------------------------------------------------------------------------
// Clip-level inference helpers (shared by trainer, evaluation and CLI)
// ---------------------------------------------------------------------------

// normalize_clip + per-frame resize to the encoder input resolution.
std::vector<Tensor32> preprocess_clip(const ThermalClip& clip, const EncoderConfig& cfg);

// logits [P,T] over the whole (normalized) clip.
Tensor32 clip_logits(const GestureModel<float>& model, const ParamStore<float>& store,
                     const ThermalClip& clip);

// CE mode: argmax of time-averaged logits. CTC mode: classify_ctc over the
// softmax sequence.
int classify_clip(const GestureModel<float>& model, const ParamStore<float>& store,
                  const ThermalClip& clip, LossKind mode, int blank = kNonGesture);

// ---------------------------------------------------------------------------
// Training loop
// ---------------------------------------------------------------------------

// Mini-batch gradient descent over the train split with per-epoch evaluation
// on the test split; the scheduler and best-checkpoint tracking follow the
// test accuracy of the active loss's own classification mode. Deterministic
// given (config.seed, dataset) regardless of thread count.
TrainResult train(const GestureModel<float>& model, ParamStore<float>& store,
                  const Dataset& dataset, const TrainConfig& cfg, std::ostream* log = nullptr,
                  const ResumePoint* resume = nullptr);

}  // namespace thermal
