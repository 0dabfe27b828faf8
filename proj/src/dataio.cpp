#include "thermal/dataio.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace thermal {

const char* const kClassNames[kNumClasses] = {
    "non-gesture", "swipe-left", "swipe-right", "swipe-up",  "swipe-down",
    "circle-cw",   "circle-ccw", "push",        "pull",      "wave",
};

namespace {

constexpr char kClipMagic[4] = {'T', 'H', 'G', 'C'};
constexpr std::uint16_t kClipVersion = 1;

// --- little-endian encode/decode -------------------------------------------

void put_u16(std::string& out, std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
}
void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_f32(std::string& out, float f) {
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    put_u32(out, bits);
}

struct Reader {
    const std::string& buf;
    std::size_t pos = 0;
    const std::string& what;

    void need(std::size_t n, const char* field) {
        if (pos + n > buf.size()) {
            throw FileFormatError(FileErrc::truncated,
                                  what + ": truncated " + field + " (expected " +
                                      std::to_string(pos + n) + " bytes, file has " +
                                      std::to_string(buf.size()) + ")");
        }
    }
    std::uint8_t u8(const char* field) {
        need(1, field);
        return static_cast<std::uint8_t>(buf[pos++]);
    }
    std::uint16_t u16(const char* field) {
        need(2, field);
        std::uint16_t v = 0;
        for (int i = 0; i < 2; ++i) v |= static_cast<std::uint16_t>(static_cast<std::uint8_t>(buf[pos++])) << (8 * i);
        return v;
    }
    std::uint32_t u32(const char* field) {
        need(4, field);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(buf[pos++])) << (8 * i);
        return v;
    }
    float f32(const char* field) {
        const std::uint32_t bits = u32(field);
        float f;
        std::memcpy(&f, &bits, 4);
        return f;
    }
};

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FileFormatError(FileErrc::io_failure, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return std::move(ss).str();
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FileFormatError(FileErrc::io_failure, "cannot open " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw FileFormatError(FileErrc::io_failure, "write failed: " + path.string());
}

// --- generator --------------------------------------------------------------

struct TrajPoint {
    double cx, cy, r;
};

// Per-instance trajectory randomness drawn once so classes differ by motion,
// not appearance.
struct TrajDraws {
    double jx, jy;      // center jitter, fraction of W/H
    double r0;          // base radius, px
    double phase;       // circle start phase
};

TrajPoint trajectory(int cls, double u, double w, double h, const TrajDraws& d) {
    TrajPoint p{0.5 * w, 0.5 * h, d.r0};
    const double circle_r = 0.30 * std::min(w, h);
    switch (cls) {
        case 1:  // swipe-left: x strictly decreasing
            p.cx = (0.85 - 0.70 * u) * w;
            p.cy = (0.5 + d.jy) * h;
            break;
        case 2:  // swipe-right
            p.cx = (0.15 + 0.70 * u) * w;
            p.cy = (0.5 + d.jy) * h;
            break;
        case 3:  // swipe-up: row index decreasing
            p.cx = (0.5 + d.jx) * w;
            p.cy = (0.82 - 0.64 * u) * h;
            break;
        case 4:  // swipe-down
            p.cx = (0.5 + d.jx) * w;
            p.cy = (0.18 + 0.64 * u) * h;
            break;
        case 5:  // circle-cw
            p.cx = 0.5 * w + circle_r * std::cos(d.phase + 2.0 * M_PI * u);
            p.cy = 0.5 * h + circle_r * std::sin(d.phase + 2.0 * M_PI * u);
            break;
        case 6:  // circle-ccw
            p.cx = 0.5 * w + circle_r * std::cos(d.phase - 2.0 * M_PI * u);
            p.cy = 0.5 * h + circle_r * std::sin(d.phase - 2.0 * M_PI * u);
            break;
        case 7:  // push: blob grows
            p.cx = (0.5 + d.jx) * w;
            p.cy = (0.5 + d.jy) * h;
            p.r = 2.0 + 4.5 * u;
            break;
        case 8:  // pull: blob shrinks
            p.cx = (0.5 + d.jx) * w;
            p.cy = (0.5 + d.jy) * h;
            p.r = 6.5 - 4.5 * u;
            break;
        case 9:  // wave: x oscillation
            p.cx = 0.5 * w + 0.30 * w * std::sin(2.0 * M_PI * 2.5 * u);
            p.cy = (0.5 + d.jy) * h;
            break;
        default:
            throw ConfigError("generate_clip: invalid class id " + std::to_string(cls));
    }
    return p;
}

// Trapezoid envelope over a span: linear ramps of length `ramp` around a
// plateau at 1. The nucleus is wherever the envelope exceeds 0.5.
double envelope(std::int64_t i, std::int64_t span, std::int64_t ramp) {
    const double up = (static_cast<double>(i) + 0.5) / static_cast<double>(ramp);
    const double down = (static_cast<double>(span - i) - 0.5) / static_cast<double>(ramp);
    return std::clamp(std::min(up, down), 0.0, 1.0);
}

struct GestureInstance {
    std::int64_t start;  // first frame of the span
    std::int64_t span;
    std::int64_t ramp;
    TrajDraws draws;
};

void render_blob(float* frame, int w, int h, double cx, double cy, double r, double amp) {
    if (amp == 0.0) return;
    const double inv = 1.0 / (2.0 * r * r);
    for (int y = 0; y < h; ++y) {
        const double dy = static_cast<double>(y) - cy;
        for (int x = 0; x < w; ++x) {
            const double dx = static_cast<double>(x) - cx;
            frame[y * w + x] += static_cast<float>(amp * std::exp(-(dx * dx + dy * dy) * inv));
        }
    }
}

}  // namespace

ThermalClip generate_clip(int cls, Rng& rng, const GeneratorParams& params) {
    if (cls < 0 || cls >= kNumClasses)
        throw ConfigError("generate_clip: class id out of range");
    const int w = params.width, h = params.height;
    const std::int64_t t_total = params.clip_frames;
    if (t_total < 8) throw ConfigError("generate_clip: need at least 8 frames");

    ThermalClip clip;
    clip.width = w;
    clip.height = h;
    clip.fps = params.fps;
    clip.frames.assign(static_cast<std::size_t>(t_total) * w * h, 0.0f);

    // background with a mild static gradient
    const double b0 = rng.uniform(params.bg_lo_c + 1.0, params.bg_hi_c);
    const double gx = rng.uniform(-1.0, 1.0) * params.bg_gradient_max_c / 2.0;
    const double gy = rng.uniform(-1.0, 1.0) * params.bg_gradient_max_c / 2.0;
    std::vector<float> bg(static_cast<std::size_t>(w) * h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            bg[static_cast<std::size_t>(y) * w + x] = static_cast<float>(
                b0 + gx * (static_cast<double>(x) / (w - 1) - 0.5) +
                gy * (static_cast<double>(y) / (h - 1) - 0.5));

    const double noise_sigma = rng.uniform(params.noise_lo_c, params.noise_hi_c);
    const double amp = rng.uniform(params.amp_lo_c, params.amp_hi_c);

    auto draw_traj = [&]() {
        TrajDraws d;
        d.jx = rng.uniform(-0.08, 0.08);
        d.jy = rng.uniform(-0.08, 0.08);
        d.r0 = 2.8 + rng.uniform() * 1.2;
        d.phase = rng.uniform(0.0, 2.0 * M_PI);
        return d;
    };

    std::vector<GestureInstance> instances;
    if (cls != kNonGesture) {
        const bool double_gesture = rng.uniform() < params.double_gesture_prob;
        if (double_gesture) {
            const std::int64_t ramp = 4;
            const std::int64_t nl1 = 12 + rng.uniform_int(3);
            const std::int64_t nl2 = 12 + rng.uniform_int(3);
            const std::int64_t s1 = nl1 + ramp, s2 = nl2 + ramp;
            const std::int64_t gap = 3 + rng.uniform_int(3);
            const std::int64_t total = s1 + gap + s2;
            if (total + 2 > t_total)
                throw ConfigError("generate_clip: clip too short for a double gesture");
            const std::int64_t g0 = 1 + rng.uniform_int(static_cast<int>(t_total - total - 1));
            instances.push_back({g0, s1, ramp, draw_traj()});
            instances.push_back({g0 + s1 + gap, s2, ramp, draw_traj()});
            clip.label_sequence = {cls, cls};
        } else {
            const std::int64_t nl = 12 + rng.uniform_int(9);
            const std::int64_t ramp = 4 + rng.uniform_int(3);
            const std::int64_t span = nl + ramp;
            if (span + 4 > t_total)
                throw ConfigError("generate_clip: clip too short for a gesture");
            const std::int64_t g0 = 2 + rng.uniform_int(static_cast<int>(t_total - span - 3));
            instances.push_back({g0, span, ramp, draw_traj()});
            clip.label_sequence = {cls};
        }
    }

    // Non-gesture distractor: a weak blob drifting slowly; never annotated.
    bool distractor = false;
    double dist_amp = 0.0;
    TrajDraws dist_draws{};
    double dist_x0 = 0, dist_y0 = 0, dist_dx = 0, dist_dy = 0;
    if (cls == kNonGesture) {
        dist_amp = rng.uniform(params.distractor_lo_c, params.distractor_hi_c);
        dist_draws = draw_traj();
        dist_x0 = rng.uniform(0.3, 0.7) * w;
        dist_y0 = rng.uniform(0.3, 0.7) * h;
        const double drift = rng.uniform(0.08, 0.18) * w;
        const double ang = rng.uniform(0.0, 2.0 * M_PI);
        dist_dx = drift * std::cos(ang);
        dist_dy = drift * std::sin(ang) * 0.5;
        distractor = dist_amp > 0.0;
    }

    for (std::int64_t t = 0; t < t_total; ++t) {
        float* frame = clip.frame(t);
        std::copy(bg.begin(), bg.end(), frame);
        for (const auto& inst : instances) {
            if (t < inst.start || t >= inst.start + inst.span) continue;
            const std::int64_t i = t - inst.start;
            const double e = envelope(i, inst.span, inst.ramp);
            if (e <= 0.0) continue;
            const double u = static_cast<double>(i) / static_cast<double>(inst.span - 1);
            const TrajPoint p = trajectory(cls, u, w, h, inst.draws);
            render_blob(frame, w, h, p.cx, p.cy, p.r, amp * e);
        }
        if (distractor) {
            const double u = static_cast<double>(t) / static_cast<double>(t_total - 1);
            render_blob(frame, w, h, dist_x0 + dist_dx * u, dist_y0 + dist_dy * u,
                        dist_draws.r0 + 0.7, dist_amp);
        }
        if (noise_sigma > 0.0) {
            for (int i = 0; i < w * h; ++i)
                frame[i] += static_cast<float>(rng.normal(0.0, noise_sigma));
        }
        for (int i = 0; i < w * h; ++i)
            frame[i] = std::clamp(frame[i], -20.0f, 60.0f);
    }

    // Nuclei: exactly the frames where the envelope exceeds half its peak.
    for (const auto& inst : instances) {
        std::int64_t first = -1, last = -1;
        for (std::int64_t i = 0; i < inst.span; ++i) {
            if (envelope(i, inst.span, inst.ramp) > 0.5) {
                if (first < 0) first = i;
                last = i;
            }
        }
        clip.nuclei.push_back({inst.start + first, inst.start + last + 1, cls});
    }
    return clip;
}

// ---------------------------------------------------------------------------
// Container IO
// ---------------------------------------------------------------------------

void write_clip(const ThermalClip& clip, const std::filesystem::path& path) {
    if (clip.label_sequence.size() > 255 || clip.nuclei.size() > 255)
        throw DataError("write_clip: too many labels or nuclei for the container");
    std::string out;
    out.append(kClipMagic, 4);
    put_u16(out, kClipVersion);
    put_u16(out, static_cast<std::uint16_t>(clip.width));
    put_u16(out, static_cast<std::uint16_t>(clip.height));
    put_f32(out, clip.fps);
    put_u32(out, static_cast<std::uint32_t>(clip.frame_count()));
    out.push_back(static_cast<char>(clip.label_sequence.size()));
    for (int l : clip.label_sequence) out.push_back(static_cast<char>(l));
    out.push_back(static_cast<char>(clip.nuclei.size()));
    for (const auto& n : clip.nuclei) {
        put_u32(out, static_cast<std::uint32_t>(n.start_frame));
        put_u32(out, static_cast<std::uint32_t>(n.end_frame));
        out.push_back(static_cast<char>(n.cls));
    }
    for (float f : clip.frames) put_f32(out, f);
    write_file(path, out);
}

ThermalClip read_clip(const std::filesystem::path& path) {
    const std::string buf = read_file(path);
    Reader r{buf, 0, path.string()};

    r.need(4, "magic");
    if (std::memcmp(buf.data(), kClipMagic, 4) != 0)
        throw FileFormatError(FileErrc::bad_magic, path.string() + ": bad magic (not a THGC clip)");
    r.pos = 4;
    const std::uint16_t version = r.u16("version");
    if (version != kClipVersion)
        throw FileFormatError(FileErrc::bad_version,
                              path.string() + ": unsupported clip version " + std::to_string(version));

    ThermalClip clip;
    clip.width = r.u16("width");
    clip.height = r.u16("height");
    clip.fps = r.f32("fps");
    const std::uint32_t frame_count = r.u32("frame_count");
    const std::uint8_t label_count = r.u8("label_count");
    for (int i = 0; i < label_count; ++i) clip.label_sequence.push_back(r.u8("label"));
    const std::uint8_t nucleus_count = r.u8("nucleus_count");
    for (int i = 0; i < nucleus_count; ++i) {
        Nucleus n;
        n.start_frame = r.u32("nucleus start");
        n.end_frame = r.u32("nucleus end");
        n.cls = r.u8("nucleus class");
        clip.nuclei.push_back(n);
    }
    const std::size_t pixels = static_cast<std::size_t>(frame_count) * clip.width * clip.height;
    r.need(pixels * 4, "frame payload");
    clip.frames.resize(pixels);
    for (std::size_t i = 0; i < pixels; ++i) clip.frames[i] = r.f32("frame payload");
    return clip;
}

// ---------------------------------------------------------------------------
// Dataset construction
// ---------------------------------------------------------------------------

std::vector<std::size_t> Dataset::train_indices() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < entries.size(); ++i)
        if (entries[i].train) out.push_back(i);
    return out;
}

std::vector<std::size_t> Dataset::test_indices() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < entries.size(); ++i)
        if (!entries[i].train) out.push_back(i);
    return out;
}

namespace {

// Deterministic 70/30 split: globally exact to round(0.7*n), balanced per
// class to +-1.
std::vector<bool> split_train_flags(const std::vector<int>& classes, std::uint64_t seed) {
    const std::int64_t n = static_cast<std::int64_t>(classes.size());
    const std::int64_t target = std::llround(0.7 * static_cast<double>(n));

    std::vector<std::vector<std::size_t>> by_class(kNumClasses);
    for (std::size_t i = 0; i < classes.size(); ++i)
        by_class[static_cast<std::size_t>(classes[i])].push_back(i);

    std::vector<std::int64_t> take(kNumClasses, 0);
    std::int64_t assigned = 0;
    for (int c = 0; c < kNumClasses; ++c) {
        take[c] = static_cast<std::int64_t>(0.7 * static_cast<double>(by_class[c].size()));
        assigned += take[c];
    }
    for (int c = 0; assigned < target && c < kNumClasses; c = (c + 1) % kNumClasses) {
        if (take[c] < static_cast<std::int64_t>(by_class[c].size())) {
            ++take[c];
            ++assigned;
        }
    }

    std::vector<bool> train(classes.size(), false);
    for (int c = 0; c < kNumClasses; ++c) {
        auto idx = by_class[c];
        Rng rng = Rng::stream(seed, 0x5917, static_cast<std::uint64_t>(c));
        rng.shuffle(idx.begin(), idx.end());
        for (std::int64_t i = 0; i < take[c]; ++i) train[idx[static_cast<std::size_t>(i)]] = true;
    }
    return train;
}

std::vector<int> round_robin_classes(std::int64_t n) {
    std::vector<int> out(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = static_cast<int>(i % kNumClasses);
    return out;
}

}  // namespace

Dataset generate_dataset(std::int64_t n_clips, std::uint64_t seed, const GeneratorParams& params) {
    if (n_clips < 1) throw ConfigError("generate_dataset: need at least 1 clip");
    const auto classes = round_robin_classes(n_clips);
    const auto train = split_train_flags(classes, seed);
    Dataset ds;
    ds.entries.reserve(static_cast<std::size_t>(n_clips));
    for (std::int64_t i = 0; i < n_clips; ++i) {
        Rng rng = Rng::stream(seed, 0xC11F, static_cast<std::uint64_t>(i));
        DatasetEntry e;
        e.clip = generate_clip(classes[static_cast<std::size_t>(i)], rng, params);
        e.train = train[static_cast<std::size_t>(i)];
        ds.entries.push_back(std::move(e));
    }
    return ds;
}

std::filesystem::path build_dataset(const std::filesystem::path& dir, std::int64_t n_clips,
                                    std::uint64_t seed, const GeneratorParams& params) {
    if (n_clips < 10) throw ConfigError("build_dataset: need at least 10 clips");
    std::error_code ec;
    std::filesystem::create_directories(dir / "clips", ec);
    if (ec) throw DataError("build_dataset: cannot create " + (dir / "clips").string());

    const auto classes = round_robin_classes(n_clips);
    const auto train = split_train_flags(classes, seed);

    std::ostringstream manifest;
    for (std::int64_t i = 0; i < n_clips; ++i) {
        Rng rng = Rng::stream(seed, 0xC11F, static_cast<std::uint64_t>(i));
        const ThermalClip clip = generate_clip(classes[static_cast<std::size_t>(i)], rng, params);
        char name[32];
        std::snprintf(name, sizeof(name), "clips/clip_%05lld.thgc", static_cast<long long>(i));
        write_clip(clip, dir / name);

        nlohmann::json rec;
        rec["path"] = name;
        rec["split"] = train[static_cast<std::size_t>(i)] ? "train" : "test";
        rec["labels"] = clip.label_sequence;
        rec["class"] = clip.clip_class();
        manifest << rec.dump() << "\n";
    }
    const auto manifest_path = dir / "manifest.jsonl";
    write_file(manifest_path, manifest.str());
    return manifest_path;
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in) throw DataError("cannot open manifest: " + manifest_path.string());
    std::vector<ManifestEntry> out;
    std::string line;
    std::int64_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        nlohmann::json rec;
        try {
            rec = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw DataError("manifest line " + std::to_string(lineno) + ": " + e.what());
        }
        ManifestEntry e;
        e.path = rec.at("path").get<std::string>();
        e.train = rec.at("split").get<std::string>() == "train";
        e.labels = rec.at("labels").get<std::vector<int>>();
        e.cls = rec.at("class").get<int>();
        out.push_back(std::move(e));
    }
    return out;
}

Dataset load_dataset(const std::filesystem::path& manifest_path) {
    const auto entries = read_manifest(manifest_path);
    const auto root = manifest_path.parent_path();
    Dataset ds;
    ds.entries.reserve(entries.size());
    for (const auto& m : entries) {
        DatasetEntry e;
        e.clip = read_clip(root / m.path);
        e.train = m.train;
        e.path = m.path;
        ds.entries.push_back(std::move(e));
    }
    return ds;
}

ManifestClipSource::ManifestClipSource(const std::filesystem::path& manifest_path)
    : root_(manifest_path.parent_path()), entries_(read_manifest(manifest_path)) {}

std::int64_t ManifestClipSource::size() const {
    return static_cast<std::int64_t>(entries_.size());
}

ThermalClip ManifestClipSource::load(std::int64_t index) const {
    if (index < 0 || index >= size()) throw DataError("clip index out of range");
    return read_clip(root_ / entries_[static_cast<std::size_t>(index)].path);
}

}  // namespace thermal
