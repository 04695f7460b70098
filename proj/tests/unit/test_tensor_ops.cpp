// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <random>

#include "doctest.h"
#include "physmamba/autograd.hpp"
#include "physmamba/errors.hpp"
#include "physmamba/ops.hpp"
#include "../support/loop_oracles.hpp"

using namespace physmamba;

TEST_CASE("conv3d: all-ones summation and identity kernel") {
    const Tensor x = Tensor::ones({1, 1, 3, 1, 1});
    const Tensor w = Tensor::ones({1, 1, 3, 1, 1});
    const Tensor y = ops::conv3d(x, w, std::nullopt, {1, 1, 1}, {0, 0, 0});
    CHECK(y.shape() == Shape{1, 1, 1, 1, 1});
    CHECK(y.item() == 3.0);

    std::mt19937_64 rng(1);
    const Tensor xr = Tensor::randn({2, 1, 4, 3, 5}, rng);
    const Tensor id = Tensor::ones({1, 1, 1, 1, 1});
    const Tensor yr = ops::conv3d(xr, id, std::nullopt, {1, 1, 1}, {0, 0, 0});
    CHECK(yr.shape() == xr.shape());
    CHECK(oracle::max_abs_diff(yr, xr) == 0.0);
}

TEST_CASE("conv3d matches the loop oracle on the documented case") {
    std::mt19937_64 rng(7);
    const Tensor x = Tensor::randn({1, 2, 4, 3, 3}, rng);
    const Tensor w = Tensor::randn({2, 2, 3, 3, 3}, rng);
    const Tensor y = ops::conv3d(x, w, std::nullopt, {1, 1, 1}, {1, 1, 1});
    const Tensor ref = oracle::conv3d(x, w, nullptr, 1, 1, 1, 1, 1, 1);
    REQUIRE(y.shape() == ref.shape());
    CHECK(oracle::rel_diff(y, ref) <= 1e-12);
}

TEST_CASE("conv3d rejects a channel mismatch") {
    const Tensor x = Tensor::ones({1, 2, 3, 3, 3});
    const Tensor w = Tensor::ones({1, 3, 1, 1, 1});
    CHECK_THROWS_AS(ops::conv3d(x, w, std::nullopt, {1, 1, 1}, {0, 0, 0}), DimensionError);
}

TEST_CASE("conv3d, linear and maxpool3d agree with loop oracles on 100 random shapes") {
    std::mt19937_64 rng(2024);
    auto pick = [&](std::size_t lo, std::size_t hi) { return std::uniform_int_distribution<std::size_t>(lo, hi)(rng); };
    double worst_conv = 0.0, worst_linear = 0.0, worst_pool = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t B = pick(1, 2), Ci = pick(1, 3), Co = pick(1, 3);
        const std::size_t kt = pick(1, 3), kh = pick(1, 3), kw = pick(1, 3);
        const std::size_t st = pick(1, 2), sh = pick(1, 2), sw = pick(1, 2);
        const std::size_t pt = pick(0, kt - 1), ph = pick(0, kh - 1), pw = pick(0, kw - 1);
        const std::size_t T = pick(kt, 6), H = pick(kh, 6), W = pick(kw, 6);
        const Tensor x = Tensor::randn({B, Ci, T, H, W}, rng);
        const Tensor w = Tensor::randn({Co, Ci, kt, kh, kw}, rng);
        const Tensor bias = Tensor::randn({Co}, rng);
        const Tensor y = ops::conv3d(x, w, bias, {st, sh, sw}, {pt, ph, pw});
        const Tensor ref = oracle::conv3d(x, w, &bias, st, sh, sw, pt, ph, pw);
        REQUIRE(y.shape() == ref.shape());
        worst_conv = std::max(worst_conv, oracle::rel_diff(y, ref));

        const std::size_t din = pick(1, 9), dout = pick(1, 7);
        const Tensor xl = Tensor::randn({pick(1, 3), pick(1, 5), din}, rng);
        const Tensor wl = Tensor::randn({dout, din}, rng);
        const Tensor bl = Tensor::randn({dout}, rng);
        worst_linear = std::max(worst_linear, oracle::rel_diff(ops::linear(xl, wl, bl), oracle::linear(xl, wl, &bl)));

        const Tensor yp = ops::maxpool3d(x, {kt, kh, kw}, {st, sh, sw});
        const Tensor rp = oracle::maxpool3d(x, kt, kh, kw, st, sh, sw);
        REQUIRE(yp.shape() == rp.shape());
        worst_pool = std::max(worst_pool, oracle::rel_diff(yp, rp));
    }
    CHECK(worst_conv <= 1e-12);
    CHECK(worst_linear <= 1e-12);
    CHECK(worst_pool == 0.0);
}

TEST_CASE("conv output extents follow the floor formula (property)") {
    std::mt19937_64 rng(99);
    auto pick = [&](std::size_t lo, std::size_t hi) { return std::uniform_int_distribution<std::size_t>(lo, hi)(rng); };
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t k = pick(1, 5), s = pick(1, 4), p = pick(0, 3);
        const std::size_t in = pick(k > 2 * p ? k - 2 * p : 1, 20);
        const std::size_t expected = (in + 2 * p - k) / s + 1;
        CHECK(ops::conv_out_extent(in, k, s, p) == expected);
        const Tensor x = Tensor::zeros({1, 1, in, 1, 1});
        const Tensor w = Tensor::zeros({1, 1, k, 1, 1});
        CHECK(ops::conv3d(x, w, std::nullopt, {s, 1, 1}, {p, 0, 0}).size(2) == expected);
    }
    CHECK_THROWS_AS(ops::conv_out_extent(2, 5, 1, 1), DimensionError);
    CHECK_THROWS_AS(ops::conv_out_extent(4, 3, 0, 0), ArgumentError);
}

TEST_CASE("linear: identity and hand arithmetic") {
    const Tensor x({2}, {1.0, 2.0});
    const Tensor eye({2, 2}, {1.0, 0.0, 0.0, 1.0});
    const Tensor y = ops::linear(x, eye, Tensor({2}, {0.0, 0.0}));
    CHECK(y.data()[0] == 1.0);
    CHECK(y.data()[1] == 2.0);
    const Tensor z = ops::linear(x, Tensor({1, 2}, {3.0, 4.0}), Tensor({1}, {1.0}));
    CHECK(z.shape() == Shape{1});
    CHECK(z.item() == 12.0);
    CHECK_THROWS_AS(ops::linear(x, Tensor::ones({1, 3}), std::nullopt), DimensionError);
}

TEST_CASE("linear matches the triple-loop oracle on (2,5,4)x(3,4)") {
    std::mt19937_64 rng(5);
    const Tensor x = Tensor::randn({2, 5, 4}, rng);
    const Tensor w = Tensor::randn({3, 4}, rng);
    const Tensor b = Tensor::randn({3}, rng);
    const Tensor y = ops::linear(x, w, b);
    CHECK(y.shape() == Shape{2, 5, 3});
    CHECK(oracle::rel_diff(y, oracle::linear(x, w, &b)) <= 1e-12);
}

TEST_CASE("elementwise analytic values") {
    const Tensor zero = Tensor::scalar(0.0);
    CHECK(ops::silu(zero).item() == 0.0);
    CHECK(ops::sigmoid(zero).item() == 0.5);
    CHECK(ops::softplus(zero).item() == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    CHECK(ops::silu(Tensor::scalar(1.0)).item() == doctest::Approx(0.7310585786300049).epsilon(1e-14));
    CHECK(ops::softplus(Tensor::scalar(800.0)).item() == 800.0);
    CHECK(ops::softplus(Tensor::scalar(-800.0)).item() == 0.0);
    CHECK(ops::tanh(Tensor::scalar(0.0)).item() == 0.0);
    CHECK(ops::relu(Tensor({2}, {-1.0, 2.0})).data()[1] == 2.0);
}

TEST_CASE("flip is an involution and reverses the named axis") {
    std::mt19937_64 rng(3);
    const Tensor x = Tensor::randn({2, 3, 4, 5}, rng);
    const Tensor f = ops::flip(x, 2);
    CHECK(f.at({1, 2, 0, 3}) == x.at({1, 2, 3, 3}));
    CHECK(oracle::max_abs_diff(ops::flip(f, 2), x) == 0.0);
}

TEST_CASE("binary ops: shapes, scalar broadcast and division by zero") {
    const Tensor a({3}, {1.0, 2.0, 3.0});
    const Tensor s = Tensor::scalar(2.0);
    CHECK(ops::mul(a, s).data()[2] == 6.0);
    CHECK(ops::sub(s, a).data()[0] == 1.0);
    CHECK_THROWS_AS(ops::add(a, Tensor::ones({2})), DimensionError);
    CHECK_THROWS_AS(ops::div(a, Tensor::zeros({3})), NumericError);
    CHECK(ops::scale(a, -1.0).data()[1] == -2.0);
}

TEST_CASE("reductions: mean, std and degenerate std") {
    const Tensor x({3}, {1.0, 2.0, 3.0});
    CHECK(ops::mean(x).item() == 2.0);
    CHECK(ops::std(x).item() == doctest::Approx(std::sqrt(2.0 / 3.0)).epsilon(1e-15));
    CHECK(ops::sum(x).item() == 6.0);
    CHECK(ops::max(x).item() == 3.0);
    CHECK_THROWS_AS(ops::std(Tensor({1}, {4.0}), 0.0), ReductionError);
    CHECK(ops::std(Tensor({1}, {4.0}), 1e-5).item() == doctest::Approx(std::sqrt(1e-5)));

    std::mt19937_64 rng(4);
    const Tensor m = Tensor::randn({2, 3, 4}, rng);
    const Tensor r = ops::mean(m, {0, 2});
    CHECK(r.shape() == Shape{3});
    double s = 0.0;
    for (std::size_t a = 0; a < 2; ++a)
        for (std::size_t c = 0; c < 4; ++c) s += m.at({a, 1, c});
    CHECK(r.data()[1] == doctest::Approx(s / 8.0).epsilon(1e-14));
    CHECK(ops::sum(m, 1, true).shape() == Shape{2, 1, 4});
}

TEST_CASE("layer_norm: constant rows give zeros; random rows are standardized") {
    const Tensor gamma = Tensor::ones({4});
    const Tensor beta = Tensor::zeros({4});
    const Tensor c = Tensor::full({2, 4}, 3.5);
    const Tensor zc = ops::layer_norm(c, gamma, beta);
    for (double v : zc.data()) CHECK(v == 0.0);

    std::mt19937_64 rng(8);
    const Tensor x = Tensor::randn({5, 4}, rng, 3.0);
    const Tensor y = ops::layer_norm(x, gamma, beta, 0.0);
    for (std::size_t r = 0; r < 5; ++r) {
        double mu = 0.0, var = 0.0;
        for (std::size_t i = 0; i < 4; ++i) mu += y.at({r, i});
        mu /= 4;
        for (std::size_t i = 0; i < 4; ++i) var += (y.at({r, i}) - mu) * (y.at({r, i}) - mu);
        CHECK(std::abs(mu) < 1e-14);
        CHECK(var / 4 == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("batch_norm: eval with identity statistics is the identity; train updates running stats") {
    std::mt19937_64 rng(9);
    const Tensor x = Tensor::randn({2, 3, 2, 2, 2}, rng);
    ops::BatchNormState state(3);
    const Tensor gamma = Tensor::ones({3});
    const Tensor beta = Tensor::zeros({3});
    const Tensor y = ops::batch_norm(x, gamma, beta, state, false);
    CHECK(oracle::max_abs_diff(y, x) <= 1e-5 * 4);  // 1/sqrt(1 + eps) scaling only
    for (std::size_t i = 0; i < x.numel(); ++i) CHECK(y.data()[i] == doctest::Approx(x.data()[i] / std::sqrt(1.0 + 1e-5)));

    const Tensor yt = ops::batch_norm(x, gamma, beta, state, true);
    double mu0 = 0.0;
    for (std::size_t b = 0; b < 2; ++b)
        for (std::size_t i = 0; i < 8; ++i) mu0 += x.data()[(b * 3) * 8 + i];
    mu0 /= 16.0;
    CHECK(state.running_mean[0] == doctest::Approx(0.1 * mu0).epsilon(1e-12));
    double out_mean = 0.0;
    for (std::size_t b = 0; b < 2; ++b)
        for (std::size_t i = 0; i < 8; ++i) out_mean += yt.data()[(b * 3 + 1) * 8 + i];
    CHECK(std::abs(out_mean) < 1e-12);
}

TEST_CASE("shape ops: permute, slice, concat, broadcast, repeat") {
    std::mt19937_64 rng(10);
    const Tensor x = Tensor::randn({2, 3, 4}, rng);
    const Tensor p = ops::permute(x, {2, 0, 1});
    CHECK(p.shape() == Shape{4, 2, 3});
    CHECK(p.at({3, 1, 2}) == x.at({1, 2, 3}));
    const Tensor s = ops::slice(x, 1, 1, 2);
    CHECK(s.at({1, 0, 2}) == x.at({1, 1, 2}));
    const Tensor c = ops::concat({x, s}, 1);
    CHECK(c.shape() == Shape{2, 5, 4});
    CHECK(c.at({1, 4, 3}) == x.at({1, 2, 3}));
    const Tensor g = ops::broadcast_to(Tensor({2, 1}, {1.0, 2.0}), {2, 3});
    CHECK(g.at({1, 2}) == 2.0);
    const Tensor r = ops::repeat_interleave(Tensor({1, 3}, {1.0, 2.0, 3.0}), 1, 2);
    CHECK(r.shape() == Shape{1, 6});
    CHECK(r.at({0, 3}) == 2.0);
    CHECK_THROWS_AS(ops::reshape(x, {5, 5}), DimensionError);
    CHECK_THROWS_AS(ops::broadcast_to(x, {2, 3, 5}), DimensionError);
}

TEST_CASE("conv_transpose1d and depthwise causal conv match gather-form oracles") {
    std::mt19937_64 rng(11);
    const Tensor x = Tensor::randn({2, 3, 5}, rng);
    const Tensor w = Tensor::randn({3, 2, 4}, rng);
    const Tensor b = Tensor::randn({2}, rng);
    const Tensor y = ops::conv_transpose1d(x, w, b, 2, 1);
    CHECK(y.shape() == Shape{2, 2, 10});
    CHECK(oracle::rel_diff(y, oracle::conv_transpose1d(x, w, &b, 2, 1)) <= 1e-12);

    const Tensor u = Tensor::randn({1, 6, 2}, rng);
    const Tensor k = Tensor::randn({2, 4}, rng);
    const Tensor yc = ops::conv1d_depthwise_causal(u, k, std::nullopt);
    for (std::size_t l = 0; l < 6; ++l)
        for (std::size_t d = 0; d < 2; ++d) {
            double s = 0.0;
            for (std::size_t j = 0; j < 4; ++j) {
                // causal: tap j looks back 3 - j steps
                if (l + j >= 3) s += k.at({d, j}) * u.at({0, l + j - 3, d});
            }
            CHECK(yc.at({0, l, d}) == doctest::Approx(s).epsilon(1e-14));
        }
}

TEST_CASE("identical inputs give bit-identical outputs") {
    auto run = [] {
        std::mt19937_64 rng(12);
        const Tensor x = Tensor::randn({1, 2, 4, 6, 6}, rng);
        const Tensor w = Tensor::randn({3, 2, 3, 3, 3}, rng);
        return ops::conv3d(x, w, std::nullopt, {1, 1, 1}, {1, 1, 1});
    };
    const Tensor a = run();
    const Tensor b = run();
    CHECK(oracle::max_abs_diff(a, b) == 0.0);
}
