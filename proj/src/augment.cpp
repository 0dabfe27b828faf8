#include "thermal/augment.hpp"

#include <algorithm>
#include <cmath>

#include "thermal/kernels.hpp"

namespace thermal {

ThermalClip normalize_clip(const ThermalClip& clip) {
    if (clip.frames.empty()) throw DataError("normalize_clip: empty clip");
    double sum = 0.0, sum_sq = 0.0;
    for (float v : clip.frames) {
        sum += v;
        sum_sq += static_cast<double>(v) * v;
    }
    const double n = static_cast<double>(clip.frames.size());
    const double mean = sum / n;
    const double var = std::max(0.0, sum_sq / n - mean * mean);
    const double denom = std::max(std::sqrt(var), 1e-6);

    ThermalClip out = clip;
    for (auto& v : out.frames) v = static_cast<float>((v - mean) / denom);
    return out;
}

ThermalClip augment(const ThermalClip& clip, const AugmentParams& params, std::int64_t window,
                    Rng& rng) {
    const std::int64_t t_in = clip.frame_count();
    if (t_in < 1) throw DataError("augment: empty clip");
    const std::int64_t required =
        static_cast<std::int64_t>(std::ceil(static_cast<double>(window) * (1.0 - params.temporal_scale)));
    if (t_in < required)
        throw SkipSample("augment: clip of " + std::to_string(t_in) +
                         " frames too short for window " + std::to_string(window));

    const int w = clip.width, h = clip.height;

    // Draw all randomness up front in a fixed order.
    const int corner = rng.uniform_int(4);
    const double a = rng.uniform(params.contrast_lo, params.contrast_hi);
    const double b = rng.uniform(-params.brightness_c, params.brightness_c);
    const double sigma = rng.uniform(0.0, params.noise_sigma_hi_c);
    const double shift = rng.uniform(-params.temporal_shift, params.temporal_shift) *
                         static_cast<double>(window);
    const double scale = rng.uniform(1.0 - params.temporal_scale, 1.0 + params.temporal_scale);

    // Temporal resampling: output frame i reads nearest source frame of
    // shift + i*scale, clamped to the clip.
    std::vector<std::int64_t> src(static_cast<std::size_t>(window));
    for (std::int64_t i = 0; i < window; ++i) {
        const double pos = shift + static_cast<double>(i) * scale;
        src[static_cast<std::size_t>(i)] =
            std::clamp<std::int64_t>(std::llround(pos), 0, t_in - 1);
    }

    const int ch = std::max(1, static_cast<int>(std::lround(params.crop_keep * h)));
    const int cw = std::max(1, static_cast<int>(std::lround(params.crop_keep * w)));
    const int y0 = (corner / 2 == 0) ? 0 : h - ch;
    const int x0 = (corner % 2 == 0) ? 0 : w - cw;
    const bool crop = ch != h || cw != w;

    ThermalClip out;
    out.width = w;
    out.height = h;
    out.fps = clip.fps;
    out.label_sequence = clip.label_sequence;
    out.frames.resize(static_cast<std::size_t>(window) * w * h);

    std::vector<float> patch(static_cast<std::size_t>(ch) * cw);
    for (std::int64_t i = 0; i < window; ++i) {
        const float* in = clip.frame(src[static_cast<std::size_t>(i)]);
        float* dst = out.frame(i);
        if (crop) {
            for (int y = 0; y < ch; ++y)
                for (int x = 0; x < cw; ++x)
                    patch[static_cast<std::size_t>(y) * cw + x] = in[(y0 + y) * w + (x0 + x)];
            nn::resize_bilinear(patch.data(), ch, cw, dst, h, w);
        } else {
            std::copy(in, in + w * h, dst);
        }
        if (a != 1.0 || b != 0.0)
            for (int j = 0; j < w * h; ++j)
                dst[j] = static_cast<float>(a * dst[j] + b);
        if (sigma > 0.0)
            for (int j = 0; j < w * h; ++j)
                dst[j] += static_cast<float>(rng.normal(0.0, sigma));
    }
    return out;
}

}  // namespace thermal
