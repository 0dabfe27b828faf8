#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "thermal/kernels.hpp"
#include "thermal/tensor.hpp"

namespace thermal {

// Ordered gesture labels of one clip: {}, {l} or {l,l}. Labels exclude the
// blank (non-gesture) class.
using TargetSequence = std::vector<int>;

inline void validate_target(const TargetSequence& target, int classes, int blank) {
    if (target.size() > 2) throw DataError("target sequence longer than 2 labels");
    if (target.size() == 2 && target[0] != target[1])
        throw DataError("two-label target sequences must repeat one class");
    for (int l : target) {
        if (l < 0 || l >= classes) throw DataError("target label out of range");
        if (l == blank) throw DataError("target label equals the blank class");
    }
}

// Smallest frame count that can realize the target: repeated labels need a
// separating blank.
inline std::int64_t ctc_min_frames(const TargetSequence& target) {
    std::int64_t repeats = 0;
    for (std::size_t i = 1; i < target.size(); ++i)
        if (target[i] == target[i - 1]) ++repeats;
    return static_cast<std::int64_t>(target.size()) + repeats;
}

// Derives the training target from a clip's label sequence:
// non-gesture -> {}, one gesture -> {l}, double gesture -> {l,l}.
TargetSequence derive_target(const std::vector<int>& clip_labels);

// ---------------------------------------------------------------------------
// Cross-entropy on time-averaged logits
// ---------------------------------------------------------------------------

// logits [T,P]; loss = CE(softmax(mean_t logits), label). The gradient wrt
// each step's logits is the averaged-softmax gradient spread 1/T over time.
template <typename T>
std::pair<double, Tensor<T>> ce_clip_loss(const Tensor<T>& logits, int label) {
    if (logits.rank() != 2) throw ConfigError("ce_clip_loss: expected [T,P] logits");
    const std::int64_t t = logits.dim(0), p = logits.dim(1);
    if (label < 0 || label >= p) throw DataError("ce_clip_loss: label out of range");

    Tensor<T> mean({std::int64_t{1}, p});
    for (std::int64_t j = 0; j < p; ++j) {
        T acc{};
        for (std::int64_t i = 0; i < t; ++i) acc += logits.at(i, j);
        mean.at(0, j) = acc / static_cast<T>(t);
    }
    Tensor<T> sm = nn::softmax_rows(mean);
    const double loss = -std::log(std::max(static_cast<double>(sm.at(0, label)),
                                           std::numeric_limits<double>::min()));
    Tensor<T> grad(logits.shape());
    for (std::int64_t j = 0; j < p; ++j) {
        const T g = (sm.at(0, j) - (j == label ? T{1} : T{0})) / static_cast<T>(t);
        for (std::int64_t i = 0; i < t; ++i) grad.at(i, j) = g;
    }
    return {loss, std::move(grad)};
}

// ---------------------------------------------------------------------------
// CTC loss (log-space forward-backward) with analytic gradient
// ---------------------------------------------------------------------------

namespace detail {
template <typename T>
T log_add(T a, T b) {
    const T ninf = -std::numeric_limits<T>::infinity();
    if (a == ninf) return b;
    if (b == ninf) return a;
    const T m = std::max(a, b);
    return m + std::log(std::exp(a - m) + std::exp(b - m));
}
}  // namespace detail

// log_probs [T,P] (rows are log class probabilities); returns
// (-log p(target | probs), gradient wrt log_probs).
template <typename T>
std::pair<double, Tensor<T>> ctc_loss(const Tensor<T>& log_probs, const TargetSequence& target,
                                      int blank) {
    if (log_probs.rank() != 2) throw ConfigError("ctc_loss: expected [T,P] log probabilities");
    const std::int64_t tlen = log_probs.dim(0), p = log_probs.dim(1);
    if (blank < 0 || blank >= p) throw ConfigError("ctc_loss: blank index out of range");
    validate_target(target, static_cast<int>(p), blank);
    const std::int64_t need = std::max<std::int64_t>(1, ctc_min_frames(target));
    if (tlen < need)
        throw InfeasibleTargetError("ctc_loss: target needs at least " + std::to_string(need) +
                                    " frames, got " + std::to_string(tlen));

    // Extended sequence: blanks interleaved around the labels.
    const std::int64_t s = 2 * static_cast<std::int64_t>(target.size()) + 1;
    std::vector<int> ext(static_cast<std::size_t>(s), blank);
    for (std::size_t i = 0; i < target.size(); ++i) ext[2 * i + 1] = target[i];

    const T ninf = -std::numeric_limits<T>::infinity();
    auto lp = [&](std::int64_t tt, std::int64_t si) { return log_probs.at(tt, ext[static_cast<std::size_t>(si)]); };
    auto skip_allowed = [&](std::int64_t si) {
        return si >= 2 && ext[static_cast<std::size_t>(si)] != blank &&
               ext[static_cast<std::size_t>(si)] != ext[static_cast<std::size_t>(si - 2)];
    };

    Tensor<T> la({tlen, s}, ninf);
    la.at(0, 0) = lp(0, 0);
    if (s > 1) la.at(0, 1) = lp(0, 1);
    for (std::int64_t tt = 1; tt < tlen; ++tt) {
        for (std::int64_t si = 0; si < s; ++si) {
            T acc = la.at(tt - 1, si);
            if (si >= 1) acc = detail::log_add(acc, la.at(tt - 1, si - 1));
            if (skip_allowed(si)) acc = detail::log_add(acc, la.at(tt - 1, si - 2));
            la.at(tt, si) = acc == ninf ? ninf : acc + lp(tt, si);
        }
    }
    T log_p = la.at(tlen - 1, s - 1);
    if (s > 1) log_p = detail::log_add(log_p, la.at(tlen - 1, s - 2));
    if (!(log_p > ninf))
        throw NumericError("ctc_loss: zero-probability target");

    Tensor<T> lb({tlen, s}, ninf);
    lb.at(tlen - 1, s - 1) = lp(tlen - 1, s - 1);
    if (s > 1) lb.at(tlen - 1, s - 2) = lp(tlen - 1, s - 2);
    for (std::int64_t tt = tlen - 2; tt >= 0; --tt) {
        for (std::int64_t si = 0; si < s; ++si) {
            T acc = lb.at(tt + 1, si);
            if (si + 1 < s) acc = detail::log_add(acc, lb.at(tt + 1, si + 1));
            if (si + 2 < s && skip_allowed(si + 2)) acc = detail::log_add(acc, lb.at(tt + 1, si + 2));
            lb.at(tt, si) = acc == ninf ? ninf : acc + lp(tt, si);
        }
    }

    // grad wrt log p_t(k) = -posterior mass of emitting k at t.
    Tensor<T> grad(log_probs.shape());
    for (std::int64_t tt = 0; tt < tlen; ++tt) {
        std::vector<T> per_class(static_cast<std::size_t>(p), ninf);
        for (std::int64_t si = 0; si < s; ++si) {
            const T a = la.at(tt, si), b = lb.at(tt, si);
            if (a == ninf || b == ninf) continue;
            auto& slot = per_class[static_cast<std::size_t>(ext[static_cast<std::size_t>(si)])];
            slot = detail::log_add(slot, a + b - lp(tt, si));
        }
        for (std::int64_t k = 0; k < p; ++k) {
            const T v = per_class[static_cast<std::size_t>(k)];
            grad.at(tt, k) = v == ninf ? T{} : -std::exp(v - log_p);
        }
    }
    return {-static_cast<double>(log_p), std::move(grad)};
}

// ---------------------------------------------------------------------------
// Decoding
// ---------------------------------------------------------------------------

struct DecodedLabel {
    int label;
    double score;        // peak probability within the label's run
    std::int64_t frame;  // frame of the peak (first occurrence)
};

// Best-path decoding: per-frame argmax (ties toward the lowest class index),
// collapse repeats, drop blanks. Each entry carries its run's peak.
std::vector<DecodedLabel> best_path_decode(const Tensor<float>& probs, int blank);
std::vector<DecodedLabel> best_path_decode(const Tensor<double>& probs, int blank);

// Clip classification for CTC-trained models: the decoded label with the
// highest peak score; the blank (non-gesture) class when the decode is empty.
int classify_ctc(const Tensor<float>& probs, int blank);
int classify_ctc(const Tensor<double>& probs, int blank);

}  // namespace thermal
