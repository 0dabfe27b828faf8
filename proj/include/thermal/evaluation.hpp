#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <vector>

#include "thermal/dataio.hpp"
#include "thermal/tensor.hpp"
#include "thermal/training.hpp"

namespace thermal {

// Scored point detection, as produced by thresholding the streaming output.
struct DetectionEvent {
    std::int64_t frame = 0;
    int cls = 0;
    double score = 0.0;
};

// Interpolated precision on the fixed 101-point recall grid {0.00..1.00}.
struct PrCurve {
    std::array<double, 101> precision{};
    double ap() const {
        double s = 0.0;
        for (double p : precision) s += p;
        return s / static_cast<double>(precision.size());
    }
};

struct MatchResult {
    std::vector<bool> event_is_tp;     // per input event, input order
    std::vector<bool> nucleus_matched; // per input nucleus
    std::int64_t tp = 0, fp = 0, fn = 0;
};

// Greedy score-descending matching: an event is a true positive when its
// frame lies inside a not-yet-matched nucleus of the same class; repeated
// detections in a nucleus and detections outside any nucleus are false
// positives; unmatched nuclei are false negatives. The result is independent
// of the input event order. Overlapping nuclei are rejected.
MatchResult match_events(const std::vector<DetectionEvent>& events,
                         const std::vector<Nucleus>& nuclei);

struct MapResult {
    double map = 0.0;
    std::map<int, PrCurve> per_class;
    PrCurve averaged;                  // grid-wise mean of the class curves
    std::vector<int> excluded_classes; // event classes without any nucleus
};

// Sweeps thresholds over event peak scores per gesture class, interpolates
// precision on the recall grid, averages curves across classes; mAP is the
// area under the averaged curve.
MapResult map_score(const std::vector<DetectionEvent>& events,
                    const std::vector<Nucleus>& nuclei);

// Concatenates a seeded random selection of `fraction` of the clips into one
// long video; nuclei are re-based, the label sequence is left empty.
ThermalClip stitch_test_video(const std::vector<const ThermalClip*>& clips, double fraction,
                              std::uint64_t seed);

// Top-1 classification over clips. `logits_fn` must be safe to call from
// multiple threads.
using LogitsFn = std::function<Tensor32(const ThermalClip&)>;
double top1_accuracy(const LogitsFn& logits_fn, const std::vector<const ThermalClip*>& clips,
                     LossKind mode, int blank = kNonGesture, int threads = 0);

// The several-seeds reporting convention: the mean of per-seed accuracies.
double seed_average(const std::vector<double>& per_seed_accuracy);

}  // namespace thermal
