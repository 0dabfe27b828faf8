#include "thermal/training.hpp"

#include <algorithm>
#include <cmath>

#include "thermal/analysis.hpp"
#include "thermal/threading.hpp"

namespace thermal {

std::vector<Tensor32> preprocess_clip(const ThermalClip& clip, const EncoderConfig& cfg) {
    const ThermalClip norm = normalize_clip(clip);
    const std::int64_t t = norm.frame_count();
    std::vector<Tensor32> frames;
    frames.reserve(static_cast<std::size_t>(t));
    for (std::int64_t i = 0; i < t; ++i)
        frames.push_back(frame_to_encoder_input(norm.frame(i), norm.height, norm.width, cfg));
    return frames;
}

Tensor32 clip_logits(const GestureModel<float>& model, const ParamStore<float>& store,
                     const ThermalClip& clip) {
    return model.forward(preprocess_clip(clip, model.encoder().config()), store);
}

int classify_clip(const GestureModel<float>& model, const ParamStore<float>& store,
                  const ThermalClip& clip, LossKind mode, int blank) {
    const Tensor32 logits = clip_logits(model, store, clip);  // [P,T]
    if (mode == LossKind::ce) {
        const std::int64_t p = logits.dim(0), t = logits.dim(1);
        int best = 0;
        double best_sum = -1e300;
        for (std::int64_t c = 0; c < p; ++c) {
            double s = 0.0;
            for (std::int64_t i = 0; i < t; ++i) s += logits.at(c, i);
            if (s > best_sum) {
                best_sum = s;
                best = static_cast<int>(c);
            }
        }
        return best;
    }
    return classify_ctc(prob_sequence(logits), blank);
}

namespace {

struct SampleResult {
    double loss = 0.0;
    bool skipped = false;
};

// Forward + loss + backward for one training sample; gradients go into the
// caller's slot store.
SampleResult run_sample(const GestureModel<float>& model, const ParamStore<float>& store,
                        ParamStore<float>& grads, const DatasetEntry& entry,
                        const TrainConfig& cfg, std::uint64_t epoch, std::uint64_t index) {
    Rng rng = Rng::stream(cfg.seed, epoch, index);
    ThermalClip clip;
    try {
        clip = augment(entry.clip, cfg.augment ? cfg.aug : AugmentParams::identity(),
                       cfg.window, rng);
    } catch (const SkipSample&) {
        return {0.0, true};
    }

    const auto frames = preprocess_clip(clip, model.encoder().config());
    typename GestureModel<float>::Ctx ctx;
    const Tensor32 logits = model.forward(frames, store, &ctx);  // [P,T]

    double loss;
    Tensor32 dlogits;
    if (cfg.loss == LossKind::ce) {
        auto [l, g] = ce_clip_loss(transpose2d(logits), clip.clip_class());
        loss = l;
        dlogits = transpose2d(g);
    } else {
        const Tensor32 ly = nn::log_softmax_rows(transpose2d(logits));
        auto [l, glp] = ctc_loss(ly, derive_target(clip.label_sequence), kNonGesture);
        loss = l;
        Tensor32 dtp(ly.shape());
        nn::log_softmax_rows_backward(ly, glp, dtp);
        dlogits = transpose2d(dtp);
    }
    model.backward(ctx, dlogits, store, grads);
    return {loss, false};
}

double test_accuracy(const GestureModel<float>& model, const ParamStore<float>& store,
                     const Dataset& dataset, const std::vector<std::size_t>& test_idx,
                     LossKind mode, int threads) {
    if (test_idx.empty()) throw DataError("train: empty test split");
    std::vector<int> correct(test_idx.size(), 0);
    parallel_for(
        static_cast<std::int64_t>(test_idx.size()),
        [&](std::int64_t i) {
            const auto& entry = dataset.entries[test_idx[static_cast<std::size_t>(i)]];
            const int pred = classify_clip(model, store, entry.clip, mode);
            correct[static_cast<std::size_t>(i)] = pred == entry.clip.clip_class() ? 1 : 0;
        },
        threads);
    std::int64_t ok = 0;
    for (int c : correct) ok += c;
    return static_cast<double>(ok) / static_cast<double>(test_idx.size());
}

}  // namespace

TrainResult train(const GestureModel<float>& model, ParamStore<float>& store,
                  const Dataset& dataset, const TrainConfig& cfg, std::ostream* log,
                  const ResumePoint* resume) {
    cfg.validate();
    const ReceptiveField rf = lookahead(model.tcn().config());
    if (cfg.window < rf.lookahead)
        throw ConfigError("train: window of " + std::to_string(cfg.window) +
                          " frames is smaller than the model lookahead of " +
                          std::to_string(rf.lookahead));

    const auto train_idx = dataset.train_indices();
    const auto test_idx = dataset.test_indices();
    if (train_idx.empty()) throw DataError("train: empty train split");

    TrainResult result;
    result.best_accuracy = -1.0;
    result.best_values = store.snapshot_values();

    // One gradient buffer per batch position: samples never share a buffer,
    // and the final accumulation runs in sample order, so results do not
    // depend on the thread count.
    std::vector<ParamStore<float>> grad_slots(static_cast<std::size_t>(cfg.batch_size), store);
    for (auto& slot : grad_slots) slot.zero_grads();

    double lr = cfg.lr;
    std::int64_t plateau = 0;
    std::int64_t start_epoch = 0;
    if (resume) {
        start_epoch = resume->epoch + 1;
        if (resume->lr > 0.0) lr = resume->lr;
        plateau = resume->plateau;
        result.best_accuracy = resume->best_accuracy;
    }
    result.final_lr = lr;

    for (std::int64_t epoch = start_epoch; epoch < cfg.epochs; ++epoch) {
        auto order = train_idx;
        Rng shuffle_rng = Rng::stream(cfg.seed, static_cast<std::uint64_t>(epoch), 0x5u);
        shuffle_rng.shuffle(order.begin(), order.end());

        double loss_sum = 0.0;
        std::int64_t loss_count = 0;
        for (std::size_t batch_start = 0; batch_start < order.size();
             batch_start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t batch_n =
                std::min(static_cast<std::size_t>(cfg.batch_size), order.size() - batch_start);
            std::vector<SampleResult> results(batch_n);
            parallel_for(
                static_cast<std::int64_t>(batch_n),
                [&](std::int64_t i) {
                    auto& slot = grad_slots[static_cast<std::size_t>(i)];
                    const std::size_t idx = order[batch_start + static_cast<std::size_t>(i)];
                    results[static_cast<std::size_t>(i)] =
                        run_sample(model, store, slot, dataset.entries[idx], cfg,
                                   static_cast<std::uint64_t>(epoch),
                                   static_cast<std::uint64_t>(idx));
                },
                cfg.threads);

            std::size_t used = 0;
            for (const auto& r : results) {
                if (!r.skipped) {
                    loss_sum += r.loss;
                    ++loss_count;
                    ++used;
                }
            }
            if (used == 0) {
                for (std::size_t i = 0; i < batch_n; ++i) grad_slots[i].zero_grads();
                continue;
            }
            const float scale = 1.0f / static_cast<float>(used);
            for (std::size_t p = 0; p < store.size(); ++p) {
                auto& g = store[p].grad;
                g.zero();
                for (std::size_t i = 0; i < batch_n; ++i) {
                    const auto& sg = grad_slots[i][p].grad;
                    for (std::int64_t j = 0; j < g.size(); ++j) g[j] += sg[j];
                }
                for (std::int64_t j = 0; j < g.size(); ++j) g[j] *= scale;
            }
            for (std::size_t i = 0; i < batch_n; ++i) grad_slots[i].zero_grads();
            adam_step(store, lr);
        }

        const double mean_loss = loss_count ? loss_sum / static_cast<double>(loss_count) : 0.0;
        if (!std::isfinite(mean_loss))
            throw NumericError("train: loss diverged at epoch " + std::to_string(epoch));

        const double acc = test_accuracy(model, store, dataset, test_idx, cfg.loss, cfg.threads);
        result.history.push_back({epoch, mean_loss, acc, lr});
        if (log) {
            (*log) << "epoch=" << epoch << " loss=" << mean_loss << " test_acc=" << acc
                   << " lr=" << lr << "\n";
            log->flush();
        }

        if (acc > result.best_accuracy) {
            result.best_accuracy = acc;
            result.best_epoch = epoch;
            result.best_values = store.snapshot_values();
            plateau = 0;
        } else {
            ++plateau;
            if (plateau >= cfg.plateau_patience) {
                lr *= cfg.plateau_factor;
                plateau = 0;
            }
        }
        result.final_lr = lr;
        result.plateau = plateau;
    }
    return result;
}

}  // namespace thermal
