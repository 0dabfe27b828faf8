#include "thermal/analysis.hpp"

#include <cmath>

namespace thermal {

ReceptiveField lookahead(const TcnConfig& config) {
    config.validate();
    ReceptiveField rf;
    for (std::int64_t s = 0; s < config.stages; ++s) {
        for (std::int64_t b = 0; b < config.blocks_per_stage; ++b) {
            const std::int64_t d = config.dilation_of_block(b);
            if (config.mode_of_block(b) == nn::CausalMode::non_causal) {
                rf.lookahead += d;
                rf.lookback += d;
            } else {
                rf.lookback += 2 * d;
            }
        }
    }
    return rf;
}

ReceptiveField probe_dependencies(const TcnConfig& config, std::int64_t window,
                                  std::uint64_t seed) {
    const ReceptiveField expected = lookahead(config);
    std::int64_t center;
    if (window == 0) {
        window = expected.total() + 8;
        center = expected.lookback + 4;
    } else {
        if (window < expected.total())
            throw ConfigError("probe_dependencies: window of " + std::to_string(window) +
                              " frames cannot contain the receptive field (" +
                              std::to_string(expected.total()) + "); probe inconclusive");
        center = expected.lookback + (window - expected.total()) / 2;
    }

    ParamStore<double> store;
    Tcn<double> tcn(config, store);
    Rng rng = Rng::stream(seed, 0x9506);
    for (auto& p : store) {
        for (std::int64_t i = 0; i < p.value.size(); ++i)
            p.value[i] = rng.uniform(0.05, 0.30);
    }

    Tensor<double> input({config.input_dim, window});
    for (std::int64_t i = 0; i < input.size(); ++i) input[i] = rng.uniform(0.5, 1.5);

    typename Tcn<double>::Ctx ctx;
    Tensor<double> logits = tcn.forward(input, store, &ctx);

    Tensor<double> dlogits(logits.shape());
    for (std::int64_t c = 0; c < config.classes; ++c) dlogits.at(c, center) = 1.0;
    ParamStore<double> grads = store;  // same layout; parameter gradients discarded
    Tensor<double> dinput = tcn.backward(ctx, dlogits, store, grads);

    std::int64_t lo = center, hi = center;
    for (std::int64_t t = 0; t < window; ++t) {
        bool touched = false;
        for (std::int64_t c = 0; c < config.input_dim && !touched; ++c)
            touched = dinput.at(c, t) != 0.0;
        if (touched) {
            lo = std::min(lo, t);
            hi = std::max(hi, t);
        }
    }
    return {hi - center, center - lo};
}

// ---------------------------------------------------------------------------
// Counting
// ---------------------------------------------------------------------------

CostReport count(const LayerGraph& graph, std::int64_t sequence_length) {
    CostReport report;
    std::int64_t c = graph.input_channels, h = graph.input_h, w = graph.input_w;
    for (const auto& l : graph.frame_layers) {
        switch (l.kind) {
            case LayerKind::conv2d: {
                if (l.cin != c) throw ConfigError("count: conv2d channel chain broken in " + graph.name);
                const std::int64_t ho = nn::conv_out_dim(h, l.k, l.stride);
                const std::int64_t wo = nn::conv_out_dim(w, l.k, l.stride);
                const std::int64_t weights = l.cout * l.cin * l.k * l.k;
                report.params += weights + (l.bias ? l.cout : 0);
                report.flops += weights * ho * wo + (l.bias ? l.cout * ho * wo : 0);
                c = l.cout;
                h = ho;
                w = wo;
                break;
            }
            case LayerKind::shortcut2d: {
                // Branch layer: reads the block input, lands on the current
                // output shape; does not advance the chain.
                if (l.cout != c) throw ConfigError("count: shortcut output mismatch in " + graph.name);
                const std::int64_t weights = l.cout * l.cin * l.k * l.k;
                report.params += weights + (l.bias ? l.cout : 0);
                report.flops += weights * h * w + (l.bias ? l.cout * h * w : 0);
                break;
            }
            case LayerKind::affine2d:
                report.params += 2 * c;
                report.flops += 2 * c * h * w;
                break;
            case LayerKind::fc:
                if (l.cin != c) throw ConfigError("count: fc channel chain broken in " + graph.name);
                report.params += l.cin * l.cout + (l.bias ? l.cout : 0);
                report.flops += l.cin * l.cout + (l.bias ? l.cout : 0);
                c = l.cout;
                break;
            case LayerKind::gap:
                h = 1;
                w = 1;
                break;
            case LayerKind::relu:
            case LayerKind::softmax:
            case LayerKind::residual_add:
                break;
            case LayerKind::conv1d:
            case LayerKind::pointwise1d:
                throw ConfigError("count: temporal layer in the 2D section of " + graph.name);
        }
    }
    std::int64_t tc = graph.temporal_layers.empty() ? 0 : graph.temporal_layers.front().cin;
    for (const auto& l : graph.temporal_layers) {
        switch (l.kind) {
            case LayerKind::conv1d: {
                if (l.cin != tc) throw ConfigError("count: conv1d channel chain broken in " + graph.name);
                const std::int64_t p = l.cout * l.cin * l.k + (l.bias ? l.cout : 0);
                report.params += p;
                report.flops += p * sequence_length;
                tc = l.cout;
                break;
            }
            case LayerKind::pointwise1d: {
                if (l.cin != tc) throw ConfigError("count: pointwise channel chain broken in " + graph.name);
                const std::int64_t p = l.cout * l.cin + (l.bias ? l.cout : 0);
                report.params += p;
                report.flops += p * sequence_length;
                tc = l.cout;
                break;
            }
            case LayerKind::relu:
            case LayerKind::softmax:
            case LayerKind::residual_add:
                break;
            default:
                throw ConfigError("count: 2D layer in the temporal section of " + graph.name);
        }
    }
    return report;
}

LayerGraph mini_encoder_descriptor(const EncoderConfig& cfg) {
    cfg.validate();
    LayerGraph g;
    g.name = "mini-encoder";
    g.input_channels = 1;
    g.input_h = cfg.input_h;
    g.input_w = cfg.input_w;
    std::int64_t cin = 1;
    for (const auto& st : cfg.plan) {
        g.frame_layers.push_back({LayerKind::conv2d, cin, st.channels, 3, st.stride});
        g.frame_layers.push_back({LayerKind::relu});
        cin = st.channels;
    }
    g.frame_layers.push_back({LayerKind::gap});
    return g;
}

LayerGraph tcn_descriptor(const TcnConfig& cfg) {
    cfg.validate();
    LayerGraph g;
    g.name = "tcn";
    g.temporal_layers.push_back({LayerKind::pointwise1d, cfg.input_dim, cfg.channels});
    for (std::int64_t s = 0; s < cfg.stages; ++s) {
        for (std::int64_t b = 0; b < cfg.blocks_per_stage; ++b) {
            LayerDesc dconv{LayerKind::conv1d, cfg.channels, cfg.channels, 3};
            dconv.dilation = cfg.dilation_of_block(b);
            dconv.mode = cfg.mode_of_block(b);
            g.temporal_layers.push_back(dconv);
            g.temporal_layers.push_back({LayerKind::relu});
            g.temporal_layers.push_back({LayerKind::pointwise1d, cfg.channels, cfg.channels});
            g.temporal_layers.push_back({LayerKind::residual_add});
        }
    }
    g.temporal_layers.push_back({LayerKind::pointwise1d, cfg.channels, cfg.classes});
    g.temporal_layers.push_back({LayerKind::softmax});
    return g;
}

LayerGraph full_model_descriptor(const EncoderConfig& enc, const TcnConfig& tcn) {
    LayerGraph g = mini_encoder_descriptor(enc);
    g.name = "full-model";
    g.temporal_layers = tcn_descriptor(tcn).temporal_layers;
    return g;
}

LayerGraph resnet18_descriptor() {
    LayerGraph g;
    g.name = "resnet18-32x32";
    g.input_channels = 1;
    g.input_h = 32;
    g.input_w = 32;

    auto conv = [&](std::int64_t cin, std::int64_t cout, std::int64_t k, std::int64_t stride) {
        LayerDesc d{LayerKind::conv2d, cin, cout, k, stride};
        d.bias = false;  // affine (norm) layers carry the bias
        g.frame_layers.push_back(d);
        g.frame_layers.push_back({LayerKind::affine2d});
    };

    conv(1, 64, 3, 1);
    g.frame_layers.push_back({LayerKind::relu});

    std::int64_t cin = 64;
    const std::int64_t stage_channels[4] = {64, 128, 256, 512};
    for (int stage = 0; stage < 4; ++stage) {
        const std::int64_t ch = stage_channels[stage];
        for (int block = 0; block < 2; ++block) {
            const std::int64_t stride = (block == 0 && stage > 0) ? 2 : 1;
            conv(cin, ch, 3, stride);
            g.frame_layers.push_back({LayerKind::relu});
            conv(ch, ch, 3, 1);
            if (stride != 1 || cin != ch) {
                LayerDesc proj{LayerKind::shortcut2d, cin, ch, 1, stride};
                proj.bias = false;
                g.frame_layers.push_back(proj);
                g.frame_layers.push_back({LayerKind::affine2d});
            }
            g.frame_layers.push_back({LayerKind::residual_add});
            g.frame_layers.push_back({LayerKind::relu});
            cin = ch;
        }
    }
    g.frame_layers.push_back({LayerKind::gap});
    g.frame_layers.push_back({LayerKind::fc, 512, 10});
    return g;
}

}  // namespace thermal
