#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "thermal/kernels.hpp"
#include "thermal/param_store.hpp"
#include "thermal/rng.hpp"

namespace thermal {

// Per-frame 2D encoder configuration. The default is the desk-scale "mini"
// encoder: three 3x3 conv/ReLU stages ending in a global average pool.
struct EncoderConfig {
    struct Stage {
        int64_t channels;
        int64_t stride;
    };
    std::int64_t input_h = 32;
    std::int64_t input_w = 32;
    std::vector<Stage> plan = {{16, 1}, {32, 2}, {64, 2}};
    std::int64_t embedding_dim = 64;

    void validate() const {
        if (plan.empty()) throw ConfigError("encoder: empty channel plan");
        for (const auto& s : plan) {
            if (s.channels < 1) throw ConfigError("encoder: channels must be >= 1");
            if (s.stride != 1 && s.stride != 2)
                throw ConfigError("encoder: stride must be 1 or 2");
        }
        if (plan.back().channels != embedding_dim)
            throw ConfigError(
                "encoder: global average pool must produce exactly embedding_dim values");
        if (input_h < 4 || input_w < 4) throw ConfigError("encoder: input too small");
    }
};

// Maps one normalized frame [1,H,W] to an embedding vector of length C.
// Stateless between frames; parameters live in an external ParamStore.
template <typename T>
class MiniEncoder {
public:
    struct Ctx {
        std::vector<Tensor<T>> inputs;    // input of each conv
        std::vector<Tensor<T>> pre_relu;  // conv output before ReLU
    };

    MiniEncoder(EncoderConfig cfg, ParamStore<T>& store, const std::string& prefix = "enc.")
        : cfg_(std::move(cfg)) {
        cfg_.validate();
        std::int64_t cin = 1;
        for (std::size_t i = 0; i < cfg_.plan.size(); ++i) {
            const auto& st = cfg_.plan[i];
            w_.push_back(store.add(prefix + "conv" + std::to_string(i) + ".w",
                                   {st.channels, cin, 3, 3}));
            b_.push_back(store.add(prefix + "conv" + std::to_string(i) + ".b", {st.channels}));
            cin = st.channels;
        }
    }

    const EncoderConfig& config() const { return cfg_; }

    // He-normal weights, zero biases.
    void init_params(ParamStore<T>& store, Rng& rng) const {
        for (std::size_t i = 0; i < w_.size(); ++i) {
            auto& w = store[w_[i]].value;
            const double fan_in = static_cast<double>(w.dim(1) * w.dim(2) * w.dim(3));
            const double sd = std::sqrt(2.0 / fan_in);
            for (std::int64_t j = 0; j < w.size(); ++j)
                w[j] = static_cast<T>(rng.normal(0.0, sd));
            store[b_[i]].value.zero();
        }
    }

    // frame [1,H,W] (already normalized and resized) -> embedding [C].
    Tensor<T> forward(const Tensor<T>& frame, const ParamStore<T>& store, Ctx* ctx = nullptr) const {
        if (frame.rank() != 3 || frame.dim(0) != 1 || frame.dim(1) != cfg_.input_h ||
            frame.dim(2) != cfg_.input_w)
            throw ConfigError("encoder: frame shape mismatch");
        for (std::int64_t i = 0; i < frame.size(); ++i)
            if (!std::isfinite(static_cast<double>(frame[i])))
                throw NumericError("encoder: non-finite value in input frame");

        if (ctx) {
            ctx->inputs.clear();
            ctx->pre_relu.clear();
        }
        Tensor<T> x = frame;
        for (std::size_t i = 0; i < w_.size(); ++i) {
            Tensor<T> y = nn::conv2d_forward(x, store[w_[i]].value, store[b_[i]].value,
                                             cfg_.plan[i].stride);
            if (ctx) {
                ctx->inputs.push_back(std::move(x));
                x = nn::relu_forward(y);
                ctx->pre_relu.push_back(std::move(y));
            } else {
                x = nn::relu_forward(y);
            }
        }
        return nn::gap2d_forward(x);
    }

    // Accumulates parameter gradients into `grads`; the input gradient is
    // not needed (frames are data), so the first conv skips dx.
    void backward(const Ctx& ctx, const Tensor<T>& dembedding, const ParamStore<T>& store,
                  ParamStore<T>& grads) const {
        const auto& last_pre = ctx.pre_relu.back();
        Tensor<T> drelu(last_pre.shape());
        nn::gap2d_backward(last_pre.shape(), dembedding, drelu);
        for (std::size_t ii = w_.size(); ii-- > 0;) {
            // d(post-relu) -> d(pre-relu)
            Tensor<T> dy(ctx.pre_relu[ii].shape());
            nn::relu_backward(ctx.pre_relu[ii], drelu, dy);
            Tensor<T> dx;
            Tensor<T>* dxp = nullptr;
            if (ii > 0) {
                dx = Tensor<T>(ctx.inputs[ii].shape());
                dxp = &dx;
            }
            nn::conv2d_backward(ctx.inputs[ii], store[w_[ii]].value, cfg_.plan[ii].stride, dy,
                                dxp, grads[w_[ii]].grad, grads[b_[ii]].grad);
            if (ii > 0) drelu = std::move(dx);
        }
    }

private:
    EncoderConfig cfg_;
    std::vector<std::size_t> w_;
    std::vector<std::size_t> b_;
};

// Resizes a raw [H,W] frame to the encoder input resolution as a [1,h,w] tensor.
template <typename T>
Tensor<T> frame_to_encoder_input(const T* frame, std::int64_t h, std::int64_t w,
                                 const EncoderConfig& cfg) {
    Tensor<T> out({1, cfg.input_h, cfg.input_w});
    if (h == cfg.input_h && w == cfg.input_w) {
        std::copy(frame, frame + h * w, out.data());
    } else {
        nn::resize_bilinear(frame, h, w, out.data(), cfg.input_h, cfg.input_w);
    }
    return out;
}

}  // namespace thermal
