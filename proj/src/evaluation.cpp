#include "thermal/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "thermal/objectives.hpp"
#include "thermal/threading.hpp"

namespace thermal {

namespace {

void validate_nuclei(const std::vector<Nucleus>& nuclei) {
    for (const auto& n : nuclei) {
        if (n.start_frame >= n.end_frame) throw DataError("nucleus with start >= end");
        if (n.cls == kNonGesture) throw DataError("nucleus with the non-gesture class");
    }
    auto sorted = nuclei;
    std::sort(sorted.begin(), sorted.end(),
              [](const Nucleus& a, const Nucleus& b) { return a.start_frame < b.start_frame; });
    for (std::size_t i = 1; i < sorted.size(); ++i)
        if (sorted[i].start_frame < sorted[i - 1].end_frame)
            throw DataError("overlapping nuclei");
}

// Canonical processing order: score descending, then frame, then class.
std::vector<std::size_t> canonical_order(const std::vector<DetectionEvent>& events) {
    std::vector<std::size_t> order(events.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (events[a].score != events[b].score) return events[a].score > events[b].score;
        if (events[a].frame != events[b].frame) return events[a].frame < events[b].frame;
        return events[a].cls < events[b].cls;
    });
    return order;
}

}  // namespace

MatchResult match_events(const std::vector<DetectionEvent>& events,
                         const std::vector<Nucleus>& nuclei) {
    validate_nuclei(nuclei);
    MatchResult res;
    res.event_is_tp.assign(events.size(), false);
    res.nucleus_matched.assign(nuclei.size(), false);

    for (std::size_t ei : canonical_order(events)) {
        const auto& e = events[ei];
        bool matched = false;
        for (std::size_t ni = 0; ni < nuclei.size(); ++ni) {
            const auto& n = nuclei[ni];
            if (res.nucleus_matched[ni] || n.cls != e.cls) continue;
            if (e.frame >= n.start_frame && e.frame < n.end_frame) {
                res.nucleus_matched[ni] = true;
                res.event_is_tp[ei] = true;
                matched = true;
                break;
            }
        }
        if (matched) ++res.tp; else ++res.fp;
    }
    for (bool m : res.nucleus_matched)
        if (!m) ++res.fn;
    return res;
}

MapResult map_score(const std::vector<DetectionEvent>& events,
                    const std::vector<Nucleus>& nuclei) {
    validate_nuclei(nuclei);

    std::map<int, std::int64_t> nuclei_per_class;
    for (const auto& n : nuclei) ++nuclei_per_class[n.cls];

    // Events of classes with no nucleus cannot be evaluated; report them.
    std::vector<DetectionEvent> usable;
    std::vector<int> excluded;
    for (const auto& e : events) {
        if (nuclei_per_class.count(e.cls)) {
            usable.push_back(e);
        } else if (std::find(excluded.begin(), excluded.end(), e.cls) == excluded.end()) {
            excluded.push_back(e.cls);
        }
    }
    std::sort(excluded.begin(), excluded.end());

    const MatchResult match = match_events(usable, nuclei);

    // Per class: prefix precision/recall in score-descending order.
    struct Scored {
        double score;
        std::int64_t frame;
        bool tp;
    };
    std::map<int, std::vector<Scored>> per_class_events;
    for (std::size_t i = 0; i < usable.size(); ++i)
        per_class_events[usable[i].cls].push_back(
            {usable[i].score, usable[i].frame, match.event_is_tp[i]});

    MapResult out;
    out.excluded_classes = std::move(excluded);
    double ap_sum = 0.0;
    std::int64_t class_count = 0;
    for (const auto& [cls, n_nuclei] : nuclei_per_class) {
        auto scored = per_class_events.count(cls) ? per_class_events[cls] : std::vector<Scored>{};
        std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
            if (a.score != b.score) return a.score > b.score;
            return a.frame < b.frame;
        });
        std::vector<double> recall, precision;
        std::int64_t tp = 0, fp = 0;
        for (const auto& s : scored) {
            s.tp ? ++tp : ++fp;
            recall.push_back(static_cast<double>(tp) / static_cast<double>(n_nuclei));
            precision.push_back(static_cast<double>(tp) / static_cast<double>(tp + fp));
        }
        PrCurve curve;
        for (int g = 0; g <= 100; ++g) {
            const double r = static_cast<double>(g) / 100.0;
            double best = 0.0;
            for (std::size_t i = 0; i < recall.size(); ++i)
                if (recall[i] >= r) best = std::max(best, precision[i]);
            curve.precision[static_cast<std::size_t>(g)] = best;
        }
        ap_sum += curve.ap();
        ++class_count;
        out.per_class[cls] = curve;
    }
    if (class_count == 0) throw DataError("map_score: no nuclei to evaluate against");

    for (int g = 0; g <= 100; ++g) {
        double s = 0.0;
        for (const auto& [cls, curve] : out.per_class) s += curve.precision[static_cast<std::size_t>(g)];
        out.averaged.precision[static_cast<std::size_t>(g)] = s / static_cast<double>(class_count);
    }
    out.map = out.averaged.ap();
    return out;
}

ThermalClip stitch_test_video(const std::vector<const ThermalClip*>& clips, double fraction,
                              std::uint64_t seed) {
    if (clips.empty()) throw DataError("stitch_test_video: no clips");
    for (const auto* c : clips) {
        if (c->width != clips[0]->width || c->height != clips[0]->height ||
            c->fps != clips[0]->fps)
            throw DataError("stitch_test_video: clip geometry/fps mismatch");
    }
    std::vector<std::size_t> order(clips.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng = Rng::stream(seed, 0x571c);
    rng.shuffle(order.begin(), order.end());
    const std::size_t keep = static_cast<std::size_t>(std::clamp<long long>(
        std::llround(fraction * static_cast<double>(clips.size())), 1,
        static_cast<long long>(clips.size())));

    ThermalClip video;
    video.width = clips[0]->width;
    video.height = clips[0]->height;
    video.fps = clips[0]->fps;
    std::int64_t offset = 0;
    for (std::size_t i = 0; i < keep; ++i) {
        const ThermalClip& c = *clips[order[i]];
        video.frames.insert(video.frames.end(), c.frames.begin(), c.frames.end());
        for (const auto& n : c.nuclei)
            video.nuclei.push_back({n.start_frame + offset, n.end_frame + offset, n.cls});
        offset += c.frame_count();
    }
    return video;
}

double top1_accuracy(const LogitsFn& logits_fn, const std::vector<const ThermalClip*>& clips,
                     LossKind mode, int blank, int threads) {
    if (clips.empty()) throw DataError("top1_accuracy: empty test set");
    std::vector<int> correct(clips.size(), 0);
    parallel_for(
        static_cast<std::int64_t>(clips.size()),
        [&](std::int64_t i) {
            const ThermalClip& clip = *clips[static_cast<std::size_t>(i)];
            const Tensor32 logits = logits_fn(clip);  // [P,T]
            int pred;
            if (mode == LossKind::ce) {
                const std::int64_t p = logits.dim(0), t = logits.dim(1);
                pred = 0;
                double best = -1e300;
                for (std::int64_t c = 0; c < p; ++c) {
                    double s = 0.0;
                    for (std::int64_t tt = 0; tt < t; ++tt) s += logits.at(c, tt);
                    if (s > best) {
                        best = s;
                        pred = static_cast<int>(c);
                    }
                }
            } else {
                pred = classify_ctc(prob_sequence(logits), blank);
            }
            correct[static_cast<std::size_t>(i)] = pred == clip.clip_class() ? 1 : 0;
        },
        threads);
    std::int64_t ok = 0;
    for (int c : correct) ok += c;
    return static_cast<double>(ok) / static_cast<double>(clips.size());
}

double seed_average(const std::vector<double>& per_seed_accuracy) {
    if (per_seed_accuracy.empty()) throw DataError("seed_average: no runs");
    double s = 0.0;
    for (double a : per_seed_accuracy) s += a;
    return s / static_cast<double>(per_seed_accuracy.size());
}

}  // namespace thermal
