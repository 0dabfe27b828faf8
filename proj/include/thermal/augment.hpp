#pragma once

#include <cstdint>

#include "thermal/dataio.hpp"
#include "thermal/rng.hpp"

namespace thermal {

// Augmentation magnitudes. The defaults follow the training recipe: corner
// crop keeping 90%, contrast [0.9,1.1], brightness +-2 C, noise sigma drawn
// from [0,0.5] C, temporal shift +-25% of the window, temporal scale +-20%.
struct AugmentParams {
    double crop_keep = 0.9;       // kept fraction of H and W, anchored at a corner
    double contrast_lo = 0.9;
    double contrast_hi = 1.1;
    double brightness_c = 2.0;    // +- range in degrees C
    double noise_sigma_hi_c = 0.5;
    double temporal_shift = 0.25;  // fraction of the window length
    double temporal_scale = 0.20;  // resampling factor range around 1

    static AugmentParams identity() {
        return {1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0};
    }
};

// Per-clip standardization to mean 0 / std 1 (population statistics over
// every pixel of the clip).
ThermalClip normalize_clip(const ThermalClip& clip);

// Applies spatial crop+resize, contrast/brightness, additive noise, then
// temporal shift and nearest-frame rescaling to exactly `window` frames.
// Throws SkipSample when the clip is shorter than window*(1-scale) frames.
// The label sequence is preserved; stale nucleus annotations are dropped.
ThermalClip augment(const ThermalClip& clip, const AugmentParams& params, std::int64_t window,
                    Rng& rng);

}  // namespace thermal
