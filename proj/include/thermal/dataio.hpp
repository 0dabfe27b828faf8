#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "thermal/errors.hpp"
#include "thermal/rng.hpp"

namespace thermal {

// Class id convention: 0 is the non-gesture class (and the CTC blank),
// gesture classes are 1..9.
inline constexpr int kNonGesture = 0;
inline constexpr int kNumClasses = 10;

extern const char* const kClassNames[kNumClasses];

// Annotated core interval [start_frame, end_frame) of one gesture.
struct Nucleus {
    std::int64_t start_frame = 0;
    std::int64_t end_frame = 0;
    int cls = 0;
};

// A short video of calibrated temperature frames plus its label sequence.
struct ThermalClip {
    int width = 32;
    int height = 24;
    float fps = 16.0f;
    std::vector<float> frames;  // [T][H][W], degrees C
    std::vector<int> label_sequence;
    std::vector<Nucleus> nuclei;

    std::int64_t frame_count() const {
        return frames.empty() ? 0
                              : static_cast<std::int64_t>(frames.size()) / (width * height);
    }
    float* frame(std::int64_t t) { return frames.data() + t * width * height; }
    const float* frame(std::int64_t t) const { return frames.data() + t * width * height; }

    // Primary class of the clip: the gesture label, or non-gesture.
    int clip_class() const { return label_sequence.empty() ? kNonGesture : label_sequence[0]; }
};

// ---------------------------------------------------------------------------
// Synthetic generator
// ---------------------------------------------------------------------------

struct GeneratorParams {
    int width = 32;
    int height = 24;
    float fps = 16.0f;
    std::int64_t clip_frames = 48;
    // background
    double bg_lo_c = 20.0, bg_hi_c = 26.0;
    double bg_gradient_max_c = 2.0;
    // hand blob
    double amp_lo_c = 4.0, amp_hi_c = 12.0;
    // per-pixel sensor noise sigma range
    double noise_lo_c = 0.1, noise_hi_c = 0.6;
    // fraction of gesture clips with two consecutive gestures of one class
    double double_gesture_prob = 0.15;
    // non-gesture distractor blob amplitude range (0 disables)
    double distractor_lo_c = 1.0, distractor_hi_c = 3.0;
};

// Deterministic given the rng stream: background with a mild spatial
// gradient, a Gaussian hand blob following the class trajectory, per-pixel
// noise. Nuclei cover exactly the frames where the blob envelope exceeds
// half its peak.
ThermalClip generate_clip(int cls, Rng& rng, const GeneratorParams& params = {});

// ---------------------------------------------------------------------------
// Clip container (magic "THGC") and dataset manifest
// ---------------------------------------------------------------------------

void write_clip(const ThermalClip& clip, const std::filesystem::path& path);
ThermalClip read_clip(const std::filesystem::path& path);

struct ManifestEntry {
    std::string path;  // relative to the manifest directory
    bool train = true;
    std::vector<int> labels;
    int cls = 0;
};

struct DatasetEntry {
    ThermalClip clip;
    bool train = true;
    std::string path;  // empty for in-memory datasets
};

struct Dataset {
    std::vector<DatasetEntry> entries;
    std::vector<std::size_t> train_indices() const;
    std::vector<std::size_t> test_indices() const;
};

// Class-balanced in-memory dataset; clip i is fully determined by
// (seed, i). The train/test split is deterministic per seed and globally
// exact to round(0.7*n).
Dataset generate_dataset(std::int64_t n_clips, std::uint64_t seed,
                         const GeneratorParams& params = {});

// Writes clips + line-delimited JSON manifest; returns the manifest path.
std::filesystem::path build_dataset(const std::filesystem::path& dir, std::int64_t n_clips,
                                    std::uint64_t seed, const GeneratorParams& params = {});

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& manifest_path);
Dataset load_dataset(const std::filesystem::path& manifest_path);

// Adapter point for ingesting externally recorded datasets once their
// on-disk format is known; the manifest-backed source is the only
// implementation shipped here.
class ClipSource {
public:
    virtual ~ClipSource() = default;
    virtual std::int64_t size() const = 0;
    virtual ThermalClip load(std::int64_t index) const = 0;
};

class ManifestClipSource : public ClipSource {
public:
    explicit ManifestClipSource(const std::filesystem::path& manifest_path);
    std::int64_t size() const override;
    ThermalClip load(std::int64_t index) const override;
    const std::vector<ManifestEntry>& entries() const { return entries_; }

private:
    std::filesystem::path root_;
    std::vector<ManifestEntry> entries_;
};

}  // namespace thermal
