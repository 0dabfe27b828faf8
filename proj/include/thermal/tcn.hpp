#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "thermal/encoder.hpp"
#include "thermal/kernels.hpp"
#include "thermal/param_store.hpp"
#include "thermal/rng.hpp"

namespace thermal {

// Temporal network configuration. Within every stage, block i runs at
// dilation 2^i; the first `non_causal_per_stage` blocks are non-causal and
// the remaining blocks causal, identically for all stages.
struct TcnConfig {
    std::int64_t stages = 2;
    std::int64_t blocks_per_stage = 4;
    std::int64_t channels = 32;       // C', feature channels inside the blocks
    std::int64_t input_dim = 64;      // C, embedding dimension
    std::int64_t classes = 10;        // P, includes the non-gesture class
    std::int64_t non_causal_per_stage = 2;  // m

    void validate() const {
        if (stages < 1) throw ConfigError("tcn: stages must be >= 1");
        if (blocks_per_stage < 1) throw ConfigError("tcn: blocks_per_stage must be >= 1");
        if (non_causal_per_stage < 0 || non_causal_per_stage > blocks_per_stage)
            throw ConfigError("tcn: non_causal_per_stage must be in [0, blocks_per_stage]");
        if (channels < 1 || input_dim < 1) throw ConfigError("tcn: bad channel counts");
        if (classes < 2) throw ConfigError("tcn: classes must be >= 2");
    }

    std::int64_t dilation_of_block(std::int64_t block) const { return std::int64_t{1} << block; }
    nn::CausalMode mode_of_block(std::int64_t block) const {
        return block < non_causal_per_stage ? nn::CausalMode::non_causal
                                            : nn::CausalMode::causal;
    }
};

// Stacked-stage TCN: 1x1 input compression, stages x blocks basic blocks
// (dilated conv k=3 -> ReLU -> 1x1 conv -> residual add), 1x1 output head.
// forward() produces pre-softmax logits [P,N]; prob_sequence() applies the
// per-step softmax.
template <typename T>
class Tcn {
public:
    struct Ctx {
        Tensor<T> input;                  // [C,N]
        std::vector<Tensor<T>> bb_in;     // residual input of each block
        std::vector<Tensor<T>> pre_relu;  // dilated conv output
        std::vector<Tensor<T>> post_relu;
        Tensor<T> head_in;                // input of the output 1x1
    };

    Tcn(TcnConfig cfg, ParamStore<T>& store, const std::string& prefix = "tcn.") : cfg_(cfg) {
        cfg_.validate();
        in_w_ = store.add(prefix + "in.w", {cfg_.channels, cfg_.input_dim});
        in_b_ = store.add(prefix + "in.b", {cfg_.channels});
        for (std::int64_t s = 0; s < cfg_.stages; ++s) {
            for (std::int64_t b = 0; b < cfg_.blocks_per_stage; ++b) {
                const std::string base =
                    prefix + "s" + std::to_string(s) + ".b" + std::to_string(b) + ".";
                Block blk;
                blk.dconv_w = store.add(base + "dconv.w", {cfg_.channels, cfg_.channels, 3});
                blk.dconv_b = store.add(base + "dconv.b", {cfg_.channels});
                blk.pw_w = store.add(base + "pw.w", {cfg_.channels, cfg_.channels});
                blk.pw_b = store.add(base + "pw.b", {cfg_.channels});
                blk.dilation = cfg_.dilation_of_block(b);
                blk.mode = cfg_.mode_of_block(b);
                blocks_.push_back(blk);
            }
        }
        out_w_ = store.add(prefix + "out.w", {cfg_.classes, cfg_.channels});
        out_b_ = store.add(prefix + "out.b", {cfg_.classes});
    }

    const TcnConfig& config() const { return cfg_; }

    void init_params(ParamStore<T>& store, Rng& rng) const {
        auto he = [&](Tensor<T>& w, double fan_in) {
            const double sd = std::sqrt(2.0 / fan_in);
            for (std::int64_t i = 0; i < w.size(); ++i)
                w[i] = static_cast<T>(rng.normal(0.0, sd));
        };
        he(store[in_w_].value, static_cast<double>(cfg_.input_dim));
        store[in_b_].value.zero();
        for (const auto& blk : blocks_) {
            he(store[blk.dconv_w].value, static_cast<double>(cfg_.channels * 3));
            store[blk.dconv_b].value.zero();
            he(store[blk.pw_w].value, static_cast<double>(cfg_.channels));
            store[blk.pw_b].value.zero();
        }
        he(store[out_w_].value, static_cast<double>(cfg_.channels));
        store[out_b_].value.zero();
    }

    // embeddings [C,N] -> logits [P,N]
    Tensor<T> forward(const Tensor<T>& embeddings, const ParamStore<T>& store,
                      Ctx* ctx = nullptr) const {
        if (embeddings.rank() != 2 || embeddings.dim(0) != cfg_.input_dim)
            throw ConfigError("tcn: embedding dimension mismatch");
        if (ctx) {
            *ctx = Ctx{};
            ctx->input = embeddings;
        }
        Tensor<T> h = nn::pointwise_forward(embeddings, store[in_w_].value, store[in_b_].value);
        for (const auto& blk : blocks_) {
            Tensor<T> u = nn::conv1d_forward(h, store[blk.dconv_w].value,
                                             store[blk.dconv_b].value, blk.dilation, blk.mode);
            Tensor<T> r = nn::relu_forward(u);
            Tensor<T> v = nn::pointwise_forward(r, store[blk.pw_w].value, store[blk.pw_b].value);
            for (std::int64_t i = 0; i < v.size(); ++i) v[i] += h[i];
            if (ctx) {
                ctx->bb_in.push_back(std::move(h));
                ctx->pre_relu.push_back(std::move(u));
                ctx->post_relu.push_back(std::move(r));
            }
            h = std::move(v);
        }
        if (ctx) ctx->head_in = h;
        return nn::pointwise_forward(h, store[out_w_].value, store[out_b_].value);
    }

    // dlogits [P,N] -> dembeddings [C,N]; parameter gradients accumulate.
    Tensor<T> backward(const Ctx& ctx, const Tensor<T>& dlogits, const ParamStore<T>& store,
                       ParamStore<T>& grads) const {
        Tensor<T> dh(ctx.head_in.shape());
        nn::pointwise_backward(ctx.head_in, store[out_w_].value, dlogits, &dh, grads[out_w_].grad,
                               grads[out_b_].grad);

        for (std::size_t bi = blocks_.size(); bi-- > 0;) {
            const auto& blk = blocks_[bi];
            Tensor<T> dr(ctx.post_relu[bi].shape());
            nn::pointwise_backward(ctx.post_relu[bi], store[blk.pw_w].value, dh, &dr,
                                   grads[blk.pw_w].grad, grads[blk.pw_b].grad);
            Tensor<T> du(ctx.pre_relu[bi].shape());
            nn::relu_backward(ctx.pre_relu[bi], dr, du);
            Tensor<T> dxin(ctx.bb_in[bi].shape());
            nn::conv1d_backward(ctx.bb_in[bi], store[blk.dconv_w].value, blk.dilation, blk.mode,
                                du, &dxin, grads[blk.dconv_w].grad, grads[blk.dconv_b].grad);
            // residual: gradient flows through both the block and the skip
            for (std::int64_t i = 0; i < dh.size(); ++i) dh[i] += dxin[i];
        }

        Tensor<T> dx(ctx.input.shape());
        nn::pointwise_backward(ctx.input, store[in_w_].value, dh, &dx, grads[in_w_].grad,
                               grads[in_b_].grad);
        return dx;
    }

private:
    struct Block {
        std::size_t dconv_w, dconv_b, pw_w, pw_b;
        std::int64_t dilation;
        nn::CausalMode mode;
    };

    TcnConfig cfg_;
    std::size_t in_w_, in_b_, out_w_, out_b_;
    std::vector<Block> blocks_;
};

// logits [P,N] -> per-frame class probabilities [N,P] (rows sum to 1).
template <typename T>
Tensor<T> prob_sequence(const Tensor<T>& logits) {
    const std::int64_t p = logits.dim(0), n = logits.dim(1);
    Tensor<T> rows({n, p});
    for (std::int64_t t = 0; t < n; ++t)
        for (std::int64_t c = 0; c < p; ++c) rows.at(t, c) = logits.at(c, t);
    return nn::softmax_rows(rows);
}

// transpose [T,P] <-> [P,T]
template <typename T>
Tensor<T> transpose2d(const Tensor<T>& x) {
    const std::int64_t a = x.dim(0), b = x.dim(1);
    Tensor<T> y({b, a});
    for (std::int64_t i = 0; i < a; ++i)
        for (std::int64_t j = 0; j < b; ++j) y.at(j, i) = x.at(i, j);
    return y;
}

// End-to-end model: per-frame encoder feeding the TCN.
template <typename T>
class GestureModel {
public:
    struct Ctx {
        std::vector<typename MiniEncoder<T>::Ctx> enc;
        typename Tcn<T>::Ctx tcn;
    };

    GestureModel(const EncoderConfig& ecfg, const TcnConfig& tcfg, ParamStore<T>& store)
        : encoder_(ecfg, store), tcn_(tcfg, store) {
        if (ecfg.embedding_dim != tcfg.input_dim)
            throw ConfigError("model: encoder embedding dim does not match tcn input dim");
    }

    const MiniEncoder<T>& encoder() const { return encoder_; }
    const Tcn<T>& tcn() const { return tcn_; }

    void init_params(ParamStore<T>& store, Rng& rng) const {
        encoder_.init_params(store, rng);
        tcn_.init_params(store, rng);
    }

    // frames: N tensors [1,H,W] (normalized, encoder resolution) -> logits [P,N]
    Tensor<T> forward(const std::vector<Tensor<T>>& frames, const ParamStore<T>& store,
                      Ctx* ctx = nullptr) const {
        const std::int64_t n = static_cast<std::int64_t>(frames.size());
        if (n < 1) throw ConfigError("model: empty frame sequence");
        const std::int64_t c = encoder_.config().embedding_dim;
        Tensor<T> emb({c, n});
        if (ctx) ctx->enc.assign(static_cast<std::size_t>(n), {});
        for (std::int64_t i = 0; i < n; ++i) {
            Tensor<T> e = encoder_.forward(frames[static_cast<std::size_t>(i)], store,
                                           ctx ? &ctx->enc[static_cast<std::size_t>(i)] : nullptr);
            for (std::int64_t j = 0; j < c; ++j) emb.at(j, i) = e[j];
        }
        return tcn_.forward(emb, store, ctx ? &ctx->tcn : nullptr);
    }

    void backward(const Ctx& ctx, const Tensor<T>& dlogits, const ParamStore<T>& store,
                  ParamStore<T>& grads) const {
        Tensor<T> demb = tcn_.backward(ctx.tcn, dlogits, store, grads);
        const std::int64_t c = demb.dim(0), n = demb.dim(1);
        Tensor<T> de({c});
        for (std::int64_t i = 0; i < n; ++i) {
            for (std::int64_t j = 0; j < c; ++j) de[j] = demb.at(j, i);
            encoder_.backward(ctx.enc[static_cast<std::size_t>(i)], de, store, grads);
        }
    }

private:
    MiniEncoder<T> encoder_;
    Tcn<T> tcn_;
};

}  // namespace thermal
