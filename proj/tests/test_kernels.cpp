#include <doctest.h>

#include "oracles.hpp"
#include "thermal/kernels.hpp"
#include "thermal/rng.hpp"

using namespace thermal;
using nn::CausalMode;

namespace {

Tensor64 tensor1d(std::vector<double> v) {
    return Tensor64({static_cast<std::int64_t>(v.size())}, std::move(v));
}

}  // namespace

TEST_CASE("tensor invariants") {
    CHECK_THROWS_AS(Tensor32({2, 0}), ConfigError);
    CHECK_THROWS_AS(Tensor32(std::vector<std::int64_t>{}), ConfigError);
    CHECK_THROWS_AS(Tensor32({2, 2}, std::vector<float>{1.f, 2.f, 3.f}), ConfigError);
    Tensor32 t({2, 3});
    CHECK(t.size() == 6);
}

TEST_CASE("conv2d: 1x1 identity kernel passes input through") {
    Rng rng(3);
    Tensor64 x({1, 4, 5});
    oracle::fill_uniform(x, rng, -1.0, 1.0);
    Tensor64 w({1, 1, 1, 1}, std::vector<double>{1.0});
    Tensor64 b({1});
    const Tensor64 y = nn::conv2d_forward(x, w, b, 1);
    REQUIRE(y.shape() == x.shape());
    for (std::int64_t i = 0; i < x.size(); ++i) CHECK(y[i] == x[i]);
}

TEST_CASE("conv2d: zero weights with bias give a constant map") {
    Tensor64 x({2, 3, 3}, 1.5);
    Tensor64 w({3, 2, 3, 3});
    Tensor64 b({3}, std::vector<double>{0.5, -1.0, 2.0});
    const Tensor64 y = nn::conv2d_forward(x, w, b, 1);
    for (std::int64_t co = 0; co < 3; ++co)
        for (std::int64_t i = 0; i < 9; ++i)
            CHECK(y[co * 9 + i] == b[co]);
}

TEST_CASE("conv2d: 3x3 ones on 3x3 ones counts the covered cells") {
    Tensor64 x({1, 3, 3}, 1.0);
    Tensor64 w({1, 1, 3, 3}, 1.0);
    Tensor64 b({1});
    const Tensor64 y = nn::conv2d_forward(x, w, b, 1);
    CHECK(y.at(0, 1, 1) == 9.0);
    CHECK(y.at(0, 0, 0) == 4.0);
    CHECK(y.at(0, 0, 2) == 4.0);
    CHECK(y.at(0, 2, 0) == 4.0);
    CHECK(y.at(0, 2, 2) == 4.0);
    CHECK(y.at(0, 0, 1) == 6.0);
}

TEST_CASE("conv2d: stride 2 output dims are ceil(in/2) and match the oracle") {
    Rng rng(11);
    for (const auto [h, w] : {std::pair<int, int>{32, 32}, {24, 32}, {7, 9}}) {
        Tensor64 x({3, h, w});
        Tensor64 wt({4, 3, 3, 3});
        Tensor64 b({4});
        oracle::fill_uniform(x, rng, -1.0, 1.0);
        oracle::fill_uniform(wt, rng, -0.5, 0.5);
        oracle::fill_uniform(b, rng, -0.1, 0.1);
        const Tensor64 y = nn::conv2d_forward(x, wt, b, 2);
        CHECK(y.dim(1) == (h + 1) / 2);
        CHECK(y.dim(2) == (w + 1) / 2);
        const Tensor64 ref = oracle::conv2d(x, wt, b, 2);
        REQUIRE(y.shape() == ref.shape());
        for (std::int64_t i = 0; i < y.size(); ++i)
            CHECK(y[i] == doctest::Approx(ref[i]).epsilon(1e-12));
    }
}

TEST_CASE("conv1d: causal running sum example") {
    Tensor64 x({1, 4}, std::vector<double>{1, 2, 3, 4});
    Tensor64 w({1, 1, 3}, std::vector<double>{1, 1, 1});
    Tensor64 b({1});
    const Tensor64 y = nn::conv1d_forward(x, w, b, 1, CausalMode::causal);
    CHECK(y[0] == 1.0);
    CHECK(y[1] == 3.0);
    CHECK(y[2] == 6.0);
    CHECK(y[3] == 9.0);
}

TEST_CASE("conv1d: non-causal running sum example") {
    Tensor64 x({1, 4}, std::vector<double>{1, 2, 3, 4});
    Tensor64 w({1, 1, 3}, std::vector<double>{1, 1, 1});
    Tensor64 b({1});
    const Tensor64 y = nn::conv1d_forward(x, w, b, 1, CausalMode::non_causal);
    CHECK(y[0] == 3.0);
    CHECK(y[1] == 6.0);
    CHECK(y[2] == 9.0);
    CHECK(y[3] == 7.0);
}

TEST_CASE("conv1d: center-tap kernel is the identity for any dilation and mode") {
    Rng rng(5);
    Tensor64 x({2, 9});
    oracle::fill_uniform(x, rng, -2.0, 2.0);
    for (const auto mode : {CausalMode::causal, CausalMode::non_causal}) {
        for (const std::int64_t d : {1, 2, 4}) {
            Tensor64 w({2, 2, 3});
            // tap index of offset 0: causal -> 2, non-causal -> 1
            const std::int64_t tap = mode == CausalMode::causal ? 2 : 1;
            w.at(0, 0, tap) = 1.0;
            w.at(1, 1, tap) = 1.0;
            Tensor64 b({2});
            const Tensor64 y = nn::conv1d_forward(x, w, b, d, mode);
            for (std::int64_t i = 0; i < x.size(); ++i) CHECK(y[i] == x[i]);
        }
    }
}

TEST_CASE("conv1d matches the direct oracle on random instances") {
    Rng rng(17);
    for (const auto mode : {CausalMode::causal, CausalMode::non_causal}) {
        for (const std::int64_t d : {1, 2, 3, 8}) {
            Tensor64 x({3, 20});
            Tensor64 w({5, 3, 3});
            Tensor64 b({5});
            oracle::fill_uniform(x, rng, -1.0, 1.0);
            oracle::fill_uniform(w, rng, -0.5, 0.5);
            oracle::fill_uniform(b, rng, -0.1, 0.1);
            const Tensor64 y = nn::conv1d_forward(x, w, b, d, mode);
            const Tensor64 ref = oracle::conv1d(x, w, b, d, mode);
            for (std::int64_t i = 0; i < y.size(); ++i)
                CHECK(y[i] == doctest::Approx(ref[i]).epsilon(1e-12));
        }
    }
}

TEST_CASE("conv1d causal mode never reads the future (exact invariance)") {
    Rng rng(23);
    Tensor64 x({2, 16});
    Tensor64 w({2, 2, 3});
    Tensor64 b({2});
    oracle::fill_uniform(x, rng, -1.0, 1.0);
    oracle::fill_uniform(w, rng, -1.0, 1.0);
    oracle::fill_uniform(b, rng, -1.0, 1.0);
    for (const std::int64_t d : {1, 3}) {
        const Tensor64 y = nn::conv1d_forward(x, w, b, d, CausalMode::causal);
        for (std::int64_t t = 0; t < 16; ++t) {
            Tensor64 x2 = x;
            for (std::int64_t f = t + 1; f < 16; ++f)
                for (std::int64_t c = 0; c < 2; ++c) x2.at(c, f) += 100.0;
            const Tensor64 y2 = nn::conv1d_forward(x2, w, b, d, CausalMode::causal);
            for (std::int64_t c = 0; c < 2; ++c) CHECK(y2.at(c, t) == y.at(c, t));
        }
    }
}

TEST_CASE("conv1d non-causal mode only reads within one dilation") {
    Rng rng(29);
    Tensor64 x({1, 16});
    Tensor64 w({1, 1, 3});
    Tensor64 b({1});
    oracle::fill_uniform(x, rng, -1.0, 1.0);
    oracle::fill_uniform(w, rng, -1.0, 1.0);
    const std::int64_t d = 3;
    const Tensor64 y = nn::conv1d_forward(x, w, b, d, CausalMode::non_causal);
    const std::int64_t t = 8;
    for (std::int64_t f = 0; f < 16; ++f) {
        if (std::abs(f - t) <= d) continue;
        Tensor64 x2 = x;
        x2.at(0, f) += 50.0;
        const Tensor64 y2 = nn::conv1d_forward(x2, w, b, d, CausalMode::non_causal);
        CHECK(y2.at(0, t) == y.at(0, t));
    }
}

TEST_CASE("softmax / relu / gap basics") {
    Tensor64 x({1, 2}, std::vector<double>{0.0, 0.0});
    const Tensor64 y = nn::softmax_rows(x);
    CHECK(y[0] == doctest::Approx(0.5));
    CHECK(y[1] == doctest::Approx(0.5));

    Tensor64 r({2}, std::vector<double>{-1.0, 2.0});
    const Tensor64 rr = nn::relu_forward(r);
    CHECK(rr[0] == 0.0);
    CHECK(rr[1] == 2.0);

    Tensor64 g({2, 3, 4}, 2.5);
    const Tensor64 gg = nn::gap2d_forward(g);
    CHECK(gg[0] == doctest::Approx(2.5));
    CHECK(gg[1] == doctest::Approx(2.5));
}

TEST_CASE("softmax rows always sum to one") {
    Rng rng(31);
    Tensor64 x({7, 5});
    oracle::fill_uniform(x, rng, -8.0, 8.0);
    const Tensor64 y = nn::softmax_rows(x);
    for (std::int64_t t = 0; t < 7; ++t) {
        double s = 0.0;
        for (std::int64_t j = 0; j < 5; ++j) s += y.at(t, j);
        CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("determinism: identical inputs give bit-identical outputs") {
    Rng rng(37);
    Tensor32 x({3, 16, 16});
    Tensor32 w({8, 3, 3, 3});
    Tensor32 b({8});
    oracle::fill_uniform(x, rng, -1.0, 1.0);
    oracle::fill_uniform(w, rng, -1.0, 1.0);
    oracle::fill_uniform(b, rng, -1.0, 1.0);
    const Tensor32 y1 = nn::conv2d_forward(x, w, b, 2);
    const Tensor32 y2 = nn::conv2d_forward(x, w, b, 2);
    for (std::int64_t i = 0; i < y1.size(); ++i) CHECK(y1[i] == y2[i]);
}

// ---------------------------------------------------------------------------
// Gradient checks: analytic backward vs central differences (64-bit, h=1e-5)
// ---------------------------------------------------------------------------

namespace {

// Scalar objective: weighted sum of layer outputs, with fixed weights.
Tensor64 loss_weights(const std::vector<std::int64_t>& shape, Rng& rng) {
    Tensor64 w(shape);
    oracle::fill_uniform(w, rng, -1.0, 1.0);
    return w;
}

double dot_all(const Tensor64& a, const Tensor64& b) {
    double s = 0.0;
    for (std::int64_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

constexpr double kGradTol = 1e-4;

}  // namespace

TEST_CASE("gradient check: conv2d (stride 1 and 2) wrt input, weights, bias") {
    Rng rng(41);
    for (const std::int64_t stride : {1, 2}) {
        Tensor64 x({2, 6, 7});
        Tensor64 w({3, 2, 3, 3});
        Tensor64 b({3});
        oracle::fill_uniform(x, rng, -1.0, 1.0);
        oracle::fill_uniform(w, rng, -0.7, 0.7);
        oracle::fill_uniform(b, rng, -0.2, 0.2);
        const Tensor64 y0 = nn::conv2d_forward(x, w, b, stride);
        const Tensor64 lw = loss_weights(y0.shape(), rng);

        Tensor64 dx(x.shape()), dw(w.shape()), db(b.shape());
        nn::conv2d_backward(x, w, stride, lw, &dx, dw, db);

        auto flatten = [](const Tensor64& t) {
            return std::vector<double>(t.data(), t.data() + t.size());
        };
        // wrt input
        auto fin = [&](const std::vector<double>& v) {
            Tensor64 xx(x.shape(), v);
            return dot_all(nn::conv2d_forward(xx, w, b, stride), lw);
        };
        CHECK(oracle::max_rel_err(flatten(dx), oracle::finite_diff(fin, flatten(x))) < kGradTol);
        // wrt weights
        auto fw = [&](const std::vector<double>& v) {
            Tensor64 ww(w.shape(), v);
            return dot_all(nn::conv2d_forward(x, ww, b, stride), lw);
        };
        CHECK(oracle::max_rel_err(flatten(dw), oracle::finite_diff(fw, flatten(w))) < kGradTol);
        // wrt bias
        auto fb = [&](const std::vector<double>& v) {
            Tensor64 bb(b.shape(), v);
            return dot_all(nn::conv2d_forward(x, w, bb, stride), lw);
        };
        CHECK(oracle::max_rel_err(flatten(db), oracle::finite_diff(fb, flatten(b))) < kGradTol);
    }
}

TEST_CASE("gradient check: conv1d dilated, both modes") {
    Rng rng(43);
    for (const auto mode : {CausalMode::causal, CausalMode::non_causal}) {
        for (const std::int64_t d : {1, 2, 4}) {
            Tensor64 x({2, 12});
            Tensor64 w({3, 2, 3});
            Tensor64 b({3});
            oracle::fill_uniform(x, rng, -1.0, 1.0);
            oracle::fill_uniform(w, rng, -0.7, 0.7);
            oracle::fill_uniform(b, rng, -0.2, 0.2);
            const Tensor64 y0 = nn::conv1d_forward(x, w, b, d, mode);
            const Tensor64 lw = loss_weights(y0.shape(), rng);

            Tensor64 dx(x.shape()), dw(w.shape()), db(b.shape());
            nn::conv1d_backward(x, w, d, mode, lw, &dx, dw, db);

            auto flatten = [](const Tensor64& t) {
                return std::vector<double>(t.data(), t.data() + t.size());
            };
            auto fin = [&](const std::vector<double>& v) {
                Tensor64 xx(x.shape(), v);
                return dot_all(nn::conv1d_forward(xx, w, b, d, mode), lw);
            };
            CHECK(oracle::max_rel_err(flatten(dx), oracle::finite_diff(fin, flatten(x))) < kGradTol);
            auto fw = [&](const std::vector<double>& v) {
                Tensor64 ww(w.shape(), v);
                return dot_all(nn::conv1d_forward(x, ww, b, d, mode), lw);
            };
            CHECK(oracle::max_rel_err(flatten(dw), oracle::finite_diff(fw, flatten(w))) < kGradTol);
            auto fb = [&](const std::vector<double>& v) {
                Tensor64 bb(b.shape(), v);
                return dot_all(nn::conv1d_forward(x, w, bb, d, mode), lw);
            };
            CHECK(oracle::max_rel_err(flatten(db), oracle::finite_diff(fb, flatten(b))) < kGradTol);
        }
    }
}

TEST_CASE("gradient check: pointwise 1x1, relu, gap, softmax") {
    Rng rng(47);
    auto flatten = [](const Tensor64& t) {
        return std::vector<double>(t.data(), t.data() + t.size());
    };

    // pointwise
    {
        Tensor64 x({3, 6}), w({4, 3}), b({4});
        oracle::fill_uniform(x, rng, -1.0, 1.0);
        oracle::fill_uniform(w, rng, -0.7, 0.7);
        oracle::fill_uniform(b, rng, -0.2, 0.2);
        const Tensor64 lw = loss_weights({4, 6}, rng);
        Tensor64 dx(x.shape()), dw(w.shape()), db(b.shape());
        nn::pointwise_backward(x, w, lw, &dx, dw, db);
        auto fin = [&](const std::vector<double>& v) {
            return dot_all(nn::pointwise_forward(Tensor64(x.shape(), v), w, b), lw);
        };
        CHECK(oracle::max_rel_err(flatten(dx), oracle::finite_diff(fin, flatten(x))) < kGradTol);
        auto fw = [&](const std::vector<double>& v) {
            return dot_all(nn::pointwise_forward(x, Tensor64(w.shape(), v), b), lw);
        };
        CHECK(oracle::max_rel_err(flatten(dw), oracle::finite_diff(fw, flatten(w))) < kGradTol);
    }
    // relu (inputs kept away from the kink)
    {
        Tensor64 x({10});
        for (std::int64_t i = 0; i < 10; ++i) x[i] = (i % 2 ? 1.0 : -1.0) * (0.5 + 0.1 * i);
        const Tensor64 lw = loss_weights({10}, rng);
        Tensor64 dx(x.shape());
        nn::relu_backward(x, lw, dx);
        auto f = [&](const std::vector<double>& v) {
            return dot_all(nn::relu_forward(Tensor64(x.shape(), v)), lw);
        };
        CHECK(oracle::max_rel_err(flatten(dx), oracle::finite_diff(f, flatten(x))) < kGradTol);
    }
    // gap
    {
        Tensor64 x({2, 3, 4});
        oracle::fill_uniform(x, rng, -1.0, 1.0);
        const Tensor64 lw = loss_weights({2}, rng);
        Tensor64 dx(x.shape());
        nn::gap2d_backward(x.shape(), lw, dx);
        auto f = [&](const std::vector<double>& v) {
            return dot_all(nn::gap2d_forward(Tensor64(x.shape(), v)), lw);
        };
        CHECK(oracle::max_rel_err(flatten(dx), oracle::finite_diff(f, flatten(x))) < kGradTol);
    }
    // softmax and log-softmax
    {
        Tensor64 x({4, 5});
        oracle::fill_uniform(x, rng, -2.0, 2.0);
        const Tensor64 lw = loss_weights({4, 5}, rng);
        {
            const Tensor64 y = nn::softmax_rows(x);
            Tensor64 dx(x.shape());
            nn::softmax_rows_backward(y, lw, dx);
            auto f = [&](const std::vector<double>& v) {
                return dot_all(nn::softmax_rows(Tensor64(x.shape(), v)), lw);
            };
            CHECK(oracle::max_rel_err(flatten(dx), oracle::finite_diff(f, flatten(x))) < kGradTol);
        }
        {
            const Tensor64 ly = nn::log_softmax_rows(x);
            Tensor64 dx(x.shape());
            nn::log_softmax_rows_backward(ly, lw, dx);
            auto f = [&](const std::vector<double>& v) {
                return dot_all(nn::log_softmax_rows(Tensor64(x.shape(), v)), lw);
            };
            CHECK(oracle::max_rel_err(flatten(dx), oracle::finite_diff(f, flatten(x))) < kGradTol);
        }
    }
}

TEST_CASE("conv shape errors are configuration errors") {
    Tensor64 x({2, 4, 4});
    Tensor64 w({1, 3, 3, 3});  // cin mismatch
    Tensor64 b({1});
    CHECK_THROWS_AS(nn::conv2d_forward(x, w, b, 1), ConfigError);
    Tensor64 w2({1, 2, 3, 3});
    CHECK_THROWS_AS(nn::conv2d_forward(x, w2, b, 3), ConfigError);
}
