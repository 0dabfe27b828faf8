#include "thermal/objectives.hpp"

namespace thermal {

TargetSequence derive_target(const std::vector<int>& clip_labels) {
    if (clip_labels.empty()) return {};
    if (clip_labels.size() == 1) return {clip_labels[0]};
    if (clip_labels.size() == 2 && clip_labels[0] == clip_labels[1])
        return {clip_labels[0], clip_labels[1]};
    throw DataError("unsupported clip label pattern (want {}, {l} or {l,l})");
}

namespace {

template <typename T>
std::vector<DecodedLabel> decode_impl(const Tensor<T>& probs, int blank) {
    if (probs.rank() != 2) throw ConfigError("best_path_decode: expected [T,P]");
    const std::int64_t tlen = probs.dim(0), p = probs.dim(1);
    std::vector<DecodedLabel> out;
    int prev = -1;
    for (std::int64_t t = 0; t < tlen; ++t) {
        int arg = 0;
        for (std::int64_t j = 1; j < p; ++j)
            if (probs.at(t, j) > probs.at(t, arg)) arg = static_cast<int>(j);
        const double score = static_cast<double>(probs.at(t, arg));
        if (arg != blank) {
            if (arg == prev) {
                if (score > out.back().score) {
                    out.back().score = score;
                    out.back().frame = t;
                }
            } else {
                out.push_back({arg, score, t});
            }
        }
        prev = arg;
    }
    return out;
}

template <typename T>
int classify_impl(const Tensor<T>& probs, int blank) {
    const auto decoded = decode_impl(probs, blank);
    if (decoded.empty()) return blank;
    std::size_t best = 0;
    for (std::size_t i = 1; i < decoded.size(); ++i)
        if (decoded[i].score > decoded[best].score) best = i;
    return decoded[best].label;
}

}  // namespace

std::vector<DecodedLabel> best_path_decode(const Tensor<float>& probs, int blank) {
    return decode_impl(probs, blank);
}
std::vector<DecodedLabel> best_path_decode(const Tensor<double>& probs, int blank) {
    return decode_impl(probs, blank);
}

int classify_ctc(const Tensor<float>& probs, int blank) { return classify_impl(probs, blank); }
int classify_ctc(const Tensor<double>& probs, int blank) { return classify_impl(probs, blank); }

}  // namespace thermal
