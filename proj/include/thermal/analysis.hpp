#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "thermal/encoder.hpp"
#include "thermal/tcn.hpp"

namespace thermal {

// Temporal extent an output position depends on: `lookahead` future frames
// and `lookback` past frames.
struct ReceptiveField {
    std::int64_t lookahead = 0;
    std::int64_t lookback = 0;
    std::int64_t total() const { return lookahead + lookback + 1; }
    bool operator==(const ReceptiveField&) const = default;
};

// Closed form over the block structure: every non-causal block adds its
// dilation on both sides, every causal block adds twice its dilation to the
// past only.
ReceptiveField lookahead(const TcnConfig& config);

// Empirical receptive field from input-gradient probing of a model built
// with strictly positive weights and inputs (ReLU stays in its linear
// regime, so no dependency can be masked). `window` 0 sizes the window from
// the closed form; an explicit window that cannot contain the receptive
// field raises ConfigError ("inconclusive").
ReceptiveField probe_dependencies(const TcnConfig& config, std::int64_t window = 0,
                                  std::uint64_t seed = 1);

// ---------------------------------------------------------------------------
// Layer graphs for FLOP / parameter accounting
// ---------------------------------------------------------------------------

enum class LayerKind {
    conv2d,       // cin,cout,k,stride, optional bias
    shortcut2d,   // projection conv on a residual branch; maps the block
                  // input (cin channels) to the current output shape
    affine2d,     // per-channel scale+shift (normalization stand-in)
    relu,
    gap,          // global average pool
    fc,           // cin -> cout with bias
    conv1d,       // temporal, k=3, dilation/mode recorded
    pointwise1d,  // temporal 1x1
    softmax,
    residual_add,
};

struct LayerDesc {
    LayerKind kind;
    std::int64_t cin = 0;
    std::int64_t cout = 0;
    std::int64_t k = 1;
    std::int64_t stride = 1;
    std::int64_t dilation = 1;
    bool bias = true;
    nn::CausalMode mode = nn::CausalMode::non_causal;
};

// Declarative network description: 2D layers run once per frame, temporal
// layers run over the whole sequence.
struct LayerGraph {
    std::string name;
    std::int64_t input_channels = 0;
    std::int64_t input_h = 0;
    std::int64_t input_w = 0;
    std::vector<LayerDesc> frame_layers;
    std::vector<LayerDesc> temporal_layers;
};

// Convention: one FLOP per weight multiply plus one per bias add; pooling,
// activations and residual adds are free. Temporal layers therefore cost
// exactly their parameter count per time step.
struct CostReport {
    std::int64_t params = 0;
    std::int64_t flops = 0;
};

CostReport count(const LayerGraph& graph, std::int64_t sequence_length);

LayerGraph mini_encoder_descriptor(const EncoderConfig& cfg);
LayerGraph tcn_descriptor(const TcnConfig& cfg);
LayerGraph full_model_descriptor(const EncoderConfig& enc, const TcnConfig& tcn);

// CIFAR-style ResNet18 (3x3 stem, four 2-block stages at 64/128/256/512
// channels, batch-norm counted as per-channel affine, 10-way head) on a
// single-channel 32x32 input. Counting target only; never instantiated.
LayerGraph resnet18_descriptor();

}  // namespace thermal
