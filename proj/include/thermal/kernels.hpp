#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "thermal/tensor.hpp"

// Differentiable layer primitives. Forward functions are pure; backward
// functions accumulate into dw/db (callers zero the gradients per step) and
// overwrite dx. All loops have a fixed evaluation order, so results are
// bit-identical across runs and thread counts.
namespace thermal::nn {

using std::int64_t;

enum class CausalMode { causal, non_causal };

inline const char* to_string(CausalMode m) {
    return m == CausalMode::causal ? "causal" : "non_causal";
}

// ---------------------------------------------------------------------------
// Dense helpers
// ---------------------------------------------------------------------------

// C (+)= A * B with A[M,K], B[K,N], C[M,N], all row-major.
template <typename T>
void matmul(const T* a, const T* b, T* c, int64_t m, int64_t k, int64_t n,
            bool accumulate) {
    for (int64_t i = 0; i < m; ++i) {
        T* crow = c + i * n;
        if (!accumulate) std::fill(crow, crow + n, T{});
        const T* arow = a + i * k;
        for (int64_t kk = 0; kk < k; ++kk) {
            const T av = arow[kk];
            const T* brow = b + kk * n;
            for (int64_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

// Dot product with eight independent accumulator lanes; vectorizes without
// relying on reassociation of a single serial sum. The summation order is
// fixed, so results stay deterministic.
template <typename T>
T dot_lanes(const T* a, const T* b, int64_t n) {
    T lanes[8] = {};
    int64_t i = 0;
    for (; i + 8 <= n; i += 8)
        for (int l = 0; l < 8; ++l) lanes[l] += a[i + l] * b[i + l];
    T head = ((lanes[0] + lanes[1]) + (lanes[2] + lanes[3])) +
             ((lanes[4] + lanes[5]) + (lanes[6] + lanes[7]));
    for (; i < n; ++i) head += a[i] * b[i];
    return head;
}

template <typename T>
T sum_lanes(const T* a, int64_t n) {
    T lanes[8] = {};
    int64_t i = 0;
    for (; i + 8 <= n; i += 8)
        for (int l = 0; l < 8; ++l) lanes[l] += a[i + l];
    T head = ((lanes[0] + lanes[1]) + (lanes[2] + lanes[3])) +
             ((lanes[4] + lanes[5]) + (lanes[6] + lanes[7]));
    for (; i < n; ++i) head += a[i];
    return head;
}

// C (+)= A * B^T with A[M,K], B[N,K], C[M,N].
template <typename T>
void matmul_bt(const T* a, const T* b, T* c, int64_t m, int64_t k, int64_t n,
               bool accumulate) {
    for (int64_t i = 0; i < m; ++i) {
        const T* arow = a + i * k;
        T* crow = c + i * n;
        for (int64_t j = 0; j < n; ++j) {
            const T acc = dot_lanes(arow, b + j * k, k);
            crow[j] = accumulate ? crow[j] + acc : acc;
        }
    }
}

// C (+)= A^T * B with A[K,M], B[K,N], C[M,N].
template <typename T>
void matmul_at(const T* a, const T* b, T* c, int64_t m, int64_t k, int64_t n,
               bool accumulate) {
    if (!accumulate) std::fill(c, c + m * n, T{});
    for (int64_t kk = 0; kk < k; ++kk) {
        const T* arow = a + kk * m;
        const T* brow = b + kk * n;
        for (int64_t i = 0; i < m; ++i) {
            const T av = arow[i];
            T* crow = c + i * n;
            for (int64_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

// ---------------------------------------------------------------------------
// 2D convolution (zero padding k/2, stride 1 or 2)
// ---------------------------------------------------------------------------

inline int64_t conv_out_dim(int64_t in, int64_t k, int64_t stride) {
    const int64_t pad = k / 2;
    return (in + 2 * pad - k) / stride + 1;
}

// Valid output range [lo, hi) for which xo*stride + off lies in [0, extent).
inline void conv_valid_range(int64_t off, int64_t stride, int64_t extent, int64_t out_extent,
                             int64_t& lo, int64_t& hi) {
    lo = off < 0 ? (-off + stride - 1) / stride : 0;
    hi = std::min(out_extent, (extent - 1 - off) / stride + 1);
    if (hi < lo) hi = lo;
}

template <typename T>
void im2col(const T* x, int64_t cin, int64_t h, int64_t w, int64_t k,
            int64_t stride, T* col) {
    const int64_t pad = k / 2;
    const int64_t ho = conv_out_dim(h, k, stride);
    const int64_t wo = conv_out_dim(w, k, stride);
    for (int64_t ci = 0; ci < cin; ++ci) {
        const T* plane = x + ci * h * w;
        for (int64_t ky = 0; ky < k; ++ky) {
            for (int64_t kx = 0; kx < k; ++kx) {
                T* dst = col + ((ci * k + ky) * k + kx) * ho * wo;
                int64_t xlo, xhi;
                conv_valid_range(kx - pad, stride, w, wo, xlo, xhi);
                for (int64_t yo = 0; yo < ho; ++yo) {
                    const int64_t yi = yo * stride + ky - pad;
                    T* row = dst + yo * wo;
                    if (yi < 0 || yi >= h) {
                        std::fill(row, row + wo, T{});
                        continue;
                    }
                    const T* src = plane + yi * w + kx - pad;
                    std::fill(row, row + xlo, T{});
                    if (stride == 1) {
                        std::copy(src + xlo, src + xhi, row + xlo);
                    } else {
                        for (int64_t xo = xlo; xo < xhi; ++xo) row[xo] = src[xo * stride];
                    }
                    std::fill(row + xhi, row + wo, T{});
                }
            }
        }
    }
}

template <typename T>
void col2im_acc(const T* col, int64_t cin, int64_t h, int64_t w, int64_t k,
                int64_t stride, T* x) {
    const int64_t pad = k / 2;
    const int64_t ho = conv_out_dim(h, k, stride);
    const int64_t wo = conv_out_dim(w, k, stride);
    for (int64_t ci = 0; ci < cin; ++ci) {
        T* plane = x + ci * h * w;
        for (int64_t ky = 0; ky < k; ++ky) {
            for (int64_t kx = 0; kx < k; ++kx) {
                const T* src = col + ((ci * k + ky) * k + kx) * ho * wo;
                int64_t xlo, xhi;
                conv_valid_range(kx - pad, stride, w, wo, xlo, xhi);
                for (int64_t yo = 0; yo < ho; ++yo) {
                    const int64_t yi = yo * stride + ky - pad;
                    if (yi < 0 || yi >= h) continue;
                    T* row = plane + yi * w + kx - pad;
                    const T* srow = src + yo * wo;
                    if (stride == 1) {
                        for (int64_t xo = xlo; xo < xhi; ++xo) row[xo] += srow[xo];
                    } else {
                        for (int64_t xo = xlo; xo < xhi; ++xo) row[xo * stride] += srow[xo];
                    }
                }
            }
        }
    }
}

template <typename T>
std::vector<T>& conv2d_scratch() {
    thread_local std::vector<T> buf;
    return buf;
}

// x[Cin,H,W], w[Cout,Cin,k,k], b[Cout] -> y[Cout,Ho,Wo]
template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b,
                         int64_t stride) {
    if (x.rank() != 3 || w.rank() != 4) throw ConfigError("conv2d: bad tensor ranks");
    if (w.dim(1) != x.dim(0)) throw ConfigError("conv2d: input channels mismatch");
    if (w.dim(2) != w.dim(3)) throw ConfigError("conv2d: kernel must be square");
    if (b.size() != w.dim(0)) throw ConfigError("conv2d: bias size mismatch");
    if (stride != 1 && stride != 2) throw ConfigError("conv2d: stride must be 1 or 2");
    const int64_t cin = x.dim(0), h = x.dim(1), wd = x.dim(2);
    const int64_t cout = w.dim(0), k = w.dim(2);
    const int64_t ho = conv_out_dim(h, k, stride), wo = conv_out_dim(wd, k, stride);
    const int64_t kk = cin * k * k, np = ho * wo;

    auto& col = conv2d_scratch<T>();
    col.resize(static_cast<std::size_t>(kk * np));
    im2col(x.data(), cin, h, wd, k, stride, col.data());

    Tensor<T> y({cout, ho, wo});
    matmul(w.data(), col.data(), y.data(), cout, kk, np, false);
    for (int64_t co = 0; co < cout; ++co) {
        T* row = y.data() + co * np;
        const T bv = b[co];
        for (int64_t i = 0; i < np; ++i) row[i] += bv;
    }
    return y;
}

// dx is overwritten when non-null; dw/db accumulate.
template <typename T>
void conv2d_backward(const Tensor<T>& x, const Tensor<T>& w, int64_t stride,
                     const Tensor<T>& dy, Tensor<T>* dx, Tensor<T>& dw, Tensor<T>& db) {
    const int64_t cin = x.dim(0), h = x.dim(1), wd = x.dim(2);
    const int64_t cout = w.dim(0), k = w.dim(2);
    const int64_t ho = dy.dim(1), wo = dy.dim(2);
    const int64_t kk = cin * k * k, np = ho * wo;

    auto& col = conv2d_scratch<T>();
    col.resize(static_cast<std::size_t>(kk * np));
    im2col(x.data(), cin, h, wd, k, stride, col.data());

    // dW[Cout,KK] += dY[Cout,NP] * col[KK,NP]^T
    matmul_bt(dy.data(), col.data(), dw.data(), cout, np, kk, true);
    for (int64_t co = 0; co < cout; ++co) db[co] += sum_lanes(dy.data() + co * np, np);
    if (dx) {
        // dcol[KK,NP] = W[Cout,KK]^T * dY[Cout,NP], then scatter.
        matmul_at(w.data(), dy.data(), col.data(), kk, cout, np, false);
        dx->zero();
        col2im_acc(col.data(), cin, h, wd, k, stride, dx->data());
    }
}

// ---------------------------------------------------------------------------
// 1D dilated convolution, kernel size 3, temporal length preserved
// ---------------------------------------------------------------------------

// Tap offsets relative to the output position; weight index 0 is the
// leftmost tap. non_causal reads {t-d, t, t+d}; causal reads {t-2d, t-d, t}.
inline void conv1d_offsets(CausalMode mode, int64_t d, int64_t out[3]) {
    if (mode == CausalMode::non_causal) {
        out[0] = -d; out[1] = 0; out[2] = d;
    } else {
        out[0] = -2 * d; out[1] = -d; out[2] = 0;
    }
}

// x[Cin,T], w[Cout,Cin,3], b[Cout] -> y[Cout,T]
template <typename T>
Tensor<T> conv1d_forward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b,
                         int64_t dilation, CausalMode mode) {
    if (x.rank() != 2 || w.rank() != 3 || w.dim(2) != 3)
        throw ConfigError("conv1d: bad tensor shapes");
    if (w.dim(1) != x.dim(0)) throw ConfigError("conv1d: input channels mismatch");
    if (b.size() != w.dim(0)) throw ConfigError("conv1d: bias size mismatch");
    if (dilation < 1) throw ConfigError("conv1d: dilation must be >= 1");
    const int64_t cin = x.dim(0), t = x.dim(1), cout = w.dim(0);
    int64_t off[3];
    conv1d_offsets(mode, dilation, off);

    Tensor<T> y({cout, t});
    for (int64_t co = 0; co < cout; ++co) {
        T* yrow = y.data() + co * t;
        std::fill(yrow, yrow + t, b[co]);
        for (int64_t ci = 0; ci < cin; ++ci) {
            const T* xrow = x.data() + ci * t;
            for (int64_t tap = 0; tap < 3; ++tap) {
                const T wv = w.data()[(co * cin + ci) * 3 + tap];
                const int64_t o = off[tap];
                const int64_t lo = std::max<int64_t>(0, -o);
                const int64_t hi = std::min<int64_t>(t, t - o);
                for (int64_t tt = lo; tt < hi; ++tt) yrow[tt] += wv * xrow[tt + o];
            }
        }
    }
    return y;
}

template <typename T>
void conv1d_backward(const Tensor<T>& x, const Tensor<T>& w, int64_t dilation,
                     CausalMode mode, const Tensor<T>& dy, Tensor<T>* dx,
                     Tensor<T>& dw, Tensor<T>& db) {
    const int64_t cin = x.dim(0), t = x.dim(1), cout = w.dim(0);
    int64_t off[3];
    conv1d_offsets(mode, dilation, off);

    if (dx) dx->zero();
    for (int64_t co = 0; co < cout; ++co) {
        const T* dyrow = dy.data() + co * t;
        db[co] += sum_lanes(dyrow, t);
        for (int64_t ci = 0; ci < cin; ++ci) {
            const T* xrow = x.data() + ci * t;
            T* dxrow = dx ? dx->data() + ci * t : nullptr;
            for (int64_t tap = 0; tap < 3; ++tap) {
                const int64_t o = off[tap];
                const int64_t lo = std::max<int64_t>(0, -o);
                const int64_t hi = std::min<int64_t>(t, t - o);
                if (hi <= lo) continue;
                dw.data()[(co * cin + ci) * 3 + tap] +=
                    dot_lanes(dyrow + lo, xrow + lo + o, hi - lo);
                if (dxrow) {
                    const T wv = w.data()[(co * cin + ci) * 3 + tap];
                    for (int64_t tt = lo; tt < hi; ++tt) dxrow[tt + o] += wv * dyrow[tt];
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// 1x1 convolution over a [C,T] map (a linear map applied per time step)
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> pointwise_forward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b) {
    if (x.rank() != 2 || w.rank() != 2) throw ConfigError("pointwise: bad tensor ranks");
    if (w.dim(1) != x.dim(0)) throw ConfigError("pointwise: input channels mismatch");
    if (b.size() != w.dim(0)) throw ConfigError("pointwise: bias size mismatch");
    const int64_t cout = w.dim(0), cin = x.dim(0), t = x.dim(1);
    Tensor<T> y({cout, t});
    matmul(w.data(), x.data(), y.data(), cout, cin, t, false);
    for (int64_t co = 0; co < cout; ++co) {
        T* row = y.data() + co * t;
        const T bv = b[co];
        for (int64_t tt = 0; tt < t; ++tt) row[tt] += bv;
    }
    return y;
}

template <typename T>
void pointwise_backward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& dy,
                        Tensor<T>* dx, Tensor<T>& dw, Tensor<T>& db) {
    const int64_t cout = w.dim(0), cin = x.dim(0), t = x.dim(1);
    matmul_bt(dy.data(), x.data(), dw.data(), cout, t, cin, true);
    for (int64_t co = 0; co < cout; ++co) db[co] += sum_lanes(dy.data() + co * t, t);
    if (dx) matmul_at(w.data(), dy.data(), dx->data(), cin, cout, t, false);
}

// ---------------------------------------------------------------------------
// Elementwise / reduction layers
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> relu_forward(const Tensor<T>& x) {
    Tensor<T> y(x.shape());
    for (int64_t i = 0; i < x.size(); ++i) y[i] = x[i] > T{} ? x[i] : T{};
    return y;
}

template <typename T>
void relu_backward(const Tensor<T>& x, const Tensor<T>& dy, Tensor<T>& dx) {
    for (int64_t i = 0; i < x.size(); ++i) dx[i] = x[i] > T{} ? dy[i] : T{};
}

// [C,H,W] -> [C]
template <typename T>
Tensor<T> gap2d_forward(const Tensor<T>& x) {
    if (x.rank() != 3) throw ConfigError("gap2d: expected rank-3 input");
    const int64_t c = x.dim(0), n = x.dim(1) * x.dim(2);
    Tensor<T> y({c});
    for (int64_t ci = 0; ci < c; ++ci)
        y[ci] = sum_lanes(x.data() + ci * n, n) / static_cast<T>(n);
    return y;
}

template <typename T>
void gap2d_backward(const std::vector<int64_t>& xshape, const Tensor<T>& dy, Tensor<T>& dx) {
    const int64_t c = xshape[0], n = xshape[1] * xshape[2];
    for (int64_t ci = 0; ci < c; ++ci) {
        const T g = dy[ci] / static_cast<T>(n);
        T* plane = dx.data() + ci * n;
        std::fill(plane, plane + n, g);
    }
}

// Row-wise softmax over the last dimension of [T,P]; max-shifted.
template <typename T>
Tensor<T> softmax_rows(const Tensor<T>& x) {
    if (x.rank() != 2) throw ConfigError("softmax: expected rank-2 input");
    const int64_t t = x.dim(0), p = x.dim(1);
    Tensor<T> y(x.shape());
    for (int64_t i = 0; i < t; ++i) {
        const T* row = x.data() + i * p;
        T* out = y.data() + i * p;
        T mx = row[0];
        for (int64_t j = 1; j < p; ++j) mx = std::max(mx, row[j]);
        T sum{};
        for (int64_t j = 0; j < p; ++j) {
            out[j] = std::exp(row[j] - mx);
            sum += out[j];
        }
        for (int64_t j = 0; j < p; ++j) out[j] /= sum;
    }
    return y;
}

template <typename T>
Tensor<T> log_softmax_rows(const Tensor<T>& x) {
    if (x.rank() != 2) throw ConfigError("log_softmax: expected rank-2 input");
    const int64_t t = x.dim(0), p = x.dim(1);
    Tensor<T> y(x.shape());
    for (int64_t i = 0; i < t; ++i) {
        const T* row = x.data() + i * p;
        T* out = y.data() + i * p;
        T mx = row[0];
        for (int64_t j = 1; j < p; ++j) mx = std::max(mx, row[j]);
        T sum{};
        for (int64_t j = 0; j < p; ++j) sum += std::exp(row[j] - mx);
        const T lse = mx + std::log(sum);
        for (int64_t j = 0; j < p; ++j) out[j] = row[j] - lse;
    }
    return y;
}

// dx from y = softmax(x): dx_i = y_i * (dy_i - sum_j dy_j y_j), per row.
template <typename T>
void softmax_rows_backward(const Tensor<T>& y, const Tensor<T>& dy, Tensor<T>& dx) {
    const int64_t t = y.dim(0), p = y.dim(1);
    for (int64_t i = 0; i < t; ++i) {
        const T* yr = y.data() + i * p;
        const T* gr = dy.data() + i * p;
        T* xr = dx.data() + i * p;
        T dot{};
        for (int64_t j = 0; j < p; ++j) dot += gr[j] * yr[j];
        for (int64_t j = 0; j < p; ++j) xr[j] = yr[j] * (gr[j] - dot);
    }
}

// dx from ly = log_softmax(x): dx_i = dy_i - exp(ly_i) * sum_j dy_j, per row.
template <typename T>
void log_softmax_rows_backward(const Tensor<T>& ly, const Tensor<T>& dy, Tensor<T>& dx) {
    const int64_t t = ly.dim(0), p = ly.dim(1);
    for (int64_t i = 0; i < t; ++i) {
        const T* lr = ly.data() + i * p;
        const T* gr = dy.data() + i * p;
        T* xr = dx.data() + i * p;
        T sum{};
        for (int64_t j = 0; j < p; ++j) sum += gr[j];
        for (int64_t j = 0; j < p; ++j) xr[j] = gr[j] - std::exp(lr[j]) * sum;
    }
}

// ---------------------------------------------------------------------------
// Bilinear resize (half-pixel sampling, clamped borders)
// ---------------------------------------------------------------------------

template <typename T>
void resize_bilinear(const T* src, int64_t h, int64_t w, T* dst, int64_t ho, int64_t wo) {
    const double sy = static_cast<double>(h) / static_cast<double>(ho);
    const double sx = static_cast<double>(w) / static_cast<double>(wo);
    for (int64_t y = 0; y < ho; ++y) {
        double fy = (static_cast<double>(y) + 0.5) * sy - 0.5;
        fy = std::clamp(fy, 0.0, static_cast<double>(h - 1));
        const int64_t y0 = static_cast<int64_t>(fy);
        const int64_t y1 = std::min(y0 + 1, h - 1);
        const double wy = fy - static_cast<double>(y0);
        for (int64_t x = 0; x < wo; ++x) {
            double fx = (static_cast<double>(x) + 0.5) * sx - 0.5;
            fx = std::clamp(fx, 0.0, static_cast<double>(w - 1));
            const int64_t x0 = static_cast<int64_t>(fx);
            const int64_t x1 = std::min(x0 + 1, w - 1);
            const double wx = fx - static_cast<double>(x0);
            const double v0 = (1.0 - wx) * static_cast<double>(src[y0 * w + x0]) +
                              wx * static_cast<double>(src[y0 * w + x1]);
            const double v1 = (1.0 - wx) * static_cast<double>(src[y1 * w + x0]) +
                              wx * static_cast<double>(src[y1 * w + x1]);
            dst[y * wo + x] = static_cast<T>((1.0 - wy) * v0 + wy * v1);
        }
    }
}

}  // namespace thermal::nn
