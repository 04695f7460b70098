// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <random>

#include "doctest.h"
#include "physmamba/autograd.hpp"
#include "physmamba/errors.hpp"
#include "physmamba/model.hpp"
#include "physmamba/ops.hpp"
#include "physmamba/verify.hpp"
#include "../support/loop_oracles.hpp"

using namespace physmamba;
using model::ModelConfig;

namespace {

// Direct double sum: sum_{p in R} w(p) x(p0+p) - theta * x(p0) * sum_{p in R'} w(p).
Tensor tdc_oracle(const Tensor& x, const Tensor& w, double theta) {
    const std::size_t B = x.size(0), Ci = x.size(1), T = x.size(2), H = x.size(3), W = x.size(4);
    const std::size_t Co = w.size(0), kt = w.size(2), kh = w.size(3), kw = w.size(4);
    const long pt = long(kt / 2), ph = long(kh / 2), pw = long(kw / 2);
    Tensor y({B, Co, T, H, W});
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t o = 0; o < Co; ++o)
            for (std::size_t t = 0; t < T; ++t)
                for (std::size_t h = 0; h < H; ++h)
                    for (std::size_t v = 0; v < W; ++v) {
                        double vanilla = 0.0, diff = 0.0;
                        for (std::size_t c = 0; c < Ci; ++c) {
                            for (std::size_t a = 0; a < kt; ++a)
                                for (std::size_t i = 0; i < kh; ++i)
                                    for (std::size_t j = 0; j < kw; ++j) {
                                        const long tt = long(t) + long(a) - pt, hh = long(h) + long(i) - ph,
                                                   vv = long(v) + long(j) - pw;
                                        const double wv = w.at({o, c, a, i, j});
                                        if (tt >= 0 && tt < long(T) && hh >= 0 && hh < long(H) && vv >= 0 && vv < long(W))
                                            vanilla += wv * x.at({b, c, std::size_t(tt), std::size_t(hh), std::size_t(vv)});
                                        if (a != kt / 2) diff += wv * x.at({b, c, t, h, v});
                                    }
                        }
                        y.data_mut()[(((b * Co + o) * T + t) * H + h) * W + v] = vanilla - theta * diff;
                    }
    return y;
}

ModelConfig toy_config(std::size_t channels = 8, std::size_t blocks = 2, std::uint64_t seed = 1) {
    ModelConfig c;
    c.channels = channels;
    c.blocks_per_stream = blocks;
    c.ca_ratio = 4;
    c.state_dim = 4;
    c.seed = seed;
    return c;
}

}  // namespace

TEST_CASE("tdc: theta = 0 is bit-identical to conv3d") {
    std::mt19937_64 rng(1);
    const Tensor x = Tensor::randn({1, 2, 4, 5, 5}, rng);
    const Tensor w = Tensor::randn({3, 2, 3, 3, 3}, rng);
    const Tensor a = model::tdc_forward(x, w, 0.0);
    const Tensor b = ops::conv3d(x, w, std::nullopt, {1, 1, 1}, {1, 1, 1});
    CHECK(oracle::max_abs_diff(a, b) == 0.0);
}

TEST_CASE("tdc: hand-evaluated 3x1x1 kernel on a single pulse") {
    const Tensor x({1, 1, 5, 1, 1}, {0.0, 0.0, 1.0, 0.0, 0.0});
    const Tensor w = Tensor::ones({1, 1, 3, 1, 1});
    const Tensor y = model::tdc_forward(x, w, 0.5);
    // vanilla term 1, difference term -0.5 * 1 * 2
    CHECK(y.at({0, 0, 2, 0, 0}) == 0.0);
    CHECK(y.at({0, 0, 1, 0, 0}) == 1.0);
}

TEST_CASE("tdc: matches the double-sum oracle; theta outside [0,1] is rejected") {
    std::mt19937_64 rng(2);
    const Tensor x = Tensor::randn({2, 3, 4, 4, 5}, rng);
    const Tensor w = Tensor::randn({2, 3, 3, 3, 3}, rng);
    CHECK(oracle::rel_diff(model::tdc_forward(x, w, 0.5), tdc_oracle(x, w, 0.5)) <= 1e-12);
    CHECK_THROWS_AS(model::tdc_forward(x, w, 1.5), ConfigError);
    CHECK_THROWS_AS(model::tdc_forward(x, w, -0.1), ConfigError);
}

TEST_CASE("channel attention: zero weights halve the input; zero input stays zero; gates in (0,1)") {
    std::mt19937_64 rng(3);
    model::ChannelAttention ca(16, 8, rng);
    const Tensor x = Tensor::randn({2, 16, 2, 3, 3}, rng);
    const Tensor g = ca.gates(x);
    CHECK(g.shape() == Shape{2, 16});
    for (double v : g.data()) {
        CHECK(v > 0.0);
        CHECK(v < 1.0);
    }
    CHECK(ca(x).shape() == x.shape());
    const Tensor z = ca(Tensor::zeros(x.shape()));
    for (double v : z.data()) CHECK(v == 0.0);

    for (Tensor* t : {&ca.fc1.weight, &*ca.fc1.bias, &ca.fc2.weight, &*ca.fc2.bias})
        for (double& v : t->data_mut()) v = 0.0;
    const Tensor half = ca(x);
    for (std::size_t i = 0; i < x.numel(); ++i) CHECK(half.data()[i] == 0.5 * x.data()[i]);
    CHECK_THROWS_AS(model::ChannelAttention(10, 4, rng), ConfigError);
}

TEST_CASE("td-mamba block: shape contract and residual-only path") {
    ModelConfig cfg = toy_config(8);
    cfg.ca_ratio = 8;
    std::mt19937_64 rng(4);
    model::TDMambaBlock block(8, cfg, rng);
    const Tensor f = Tensor::randn({1, 8, 4, 4, 4}, rng);
    NoGradGuard ng;
    const Tensor y = block(f, false);
    CHECK(y.shape() == f.shape());
    for (double v : y.data()) CHECK(std::isfinite(v));

    // zero C projection: the Bi-Mamba branch outputs zero and only the residual remains
    for (auto* p : {&block.mamba.ssm_fwd, &block.mamba.ssm_bwd}) {
        auto w = p->x_proj.data_mut();
        const std::size_t D = p->channels(), R = p->dt_rank, N = p->state_dim;
        for (std::size_t row = R + N; row < R + 2 * N; ++row)
            for (std::size_t d = 0; d < D; ++d) w[row * D + d] = 0.0;
    }
    const Tensor got = block(f, false);
    const Tensor h = ops::relu(block.bn(model::tdc_forward(f, block.tdc_weight, block.theta), false));
    const Tensor seq = ops::reshape(ops::permute(h, {0, 2, 3, 4, 1}), {1, 64, 8});
    const Tensor normed = block.norm_out(seq);
    const Tensor expect = block.ca(ops::permute(ops::reshape(normed, {1, 4, 4, 4, 8}), {0, 4, 1, 2, 3}));
    CHECK(oracle::max_abs_diff(got, expect) == 0.0);
}

TEST_CASE("td-mamba block: capacity budget") {
    ModelConfig cfg = toy_config(8);
    cfg.max_sequence_elements = 8 * 63;
    std::mt19937_64 rng(5);
    model::TDMambaBlock block(8, cfg, rng);
    NoGradGuard ng;
    CHECK_THROWS_AS(block(Tensor::zeros({1, 8, 4, 4, 4}), false), CapacityError);
    CHECK_NOTHROW(block(Tensor::zeros({1, 8, 3, 3, 7}), false));
}

TEST_CASE("td-mamba block: gradient of mean(output) on a (1,4,4,2,2) input") {
    ModelConfig cfg = toy_config(4);
    cfg.ca_ratio = 2;
    std::mt19937_64 rng(6);
    model::TDMambaBlock block(4, cfg, rng);
    nn::Registry reg;
    block.collect("block", reg);
    Tensor f = Tensor::randn({1, 4, 4, 2, 2}, rng);
    auto params = reg.params();
    params.push_back({"input", f});
    auto loss = [&] { return ops::mean(block(f, true)); };
    verify::GradCheckOptions opts;
    opts.samples = 200;
    const auto res = verify::check_gradients("td_mamba_block", loss, params, rng, opts);
    INFO(res.worst << " rel " << res.max_rel_error);
    CHECK(res.checked == 200);
    CHECK(res.passed);
}

TEST_CASE("stem and split: toy shapes and zero input") {
    ModelConfig cfg = toy_config(16);
    std::mt19937_64 rng(7);
    model::Stem stem(cfg, rng);
    NoGradGuard ng;
    const auto out = stem(Tensor::randn({2, 3, 8, 16, 16}, rng), true);
    CHECK(out.slow.shape() == Shape{2, 16, 2, 4, 4});
    CHECK(out.fast.shape() == Shape{2, 8, 4, 4, 4});
    model::Stem fresh(cfg, rng);  // running statistics still (0,1)
    const auto zero = fresh(Tensor::zeros({1, 3, 8, 16, 16}), false);
    for (double v : zero.slow.data()) CHECK(v == 0.0);
    for (double v : zero.fast.data()) CHECK(v == 0.0);
    CHECK_THROWS_AS(stem(Tensor::zeros({1, 3, 6, 16, 16}), false), ConfigError);
}

TEST_CASE("lateral: shapes, zero fusion and impulse support") {
    std::mt19937_64 rng(8);
    model::Lateral lat(32, 64, rng);
    NoGradGuard ng;
    CHECK(lat(Tensor::zeros({1, 32, 64, 8, 8})).shape() == Shape{1, 64, 32, 8, 8});

    model::Lateral small(2, 4, rng);
    const Tensor slow = Tensor::randn({1, 4, 3, 2, 2}, rng);
    CHECK(oracle::max_abs_diff(small.fuse(slow, Tensor::zeros({1, 2, 6, 2, 2})), slow) == 0.0);

    Tensor impulse = Tensor::zeros({1, 2, 6, 2, 2});
    impulse.data_mut()[(1 * 6 + 3) * 4 + 1] = 1.0;  // channel 1, t = 3, (h,w) = (0,1)
    const Tensor y = small(impulse);
    const Tensor ref = oracle::conv3d(impulse, small.conv.weight, nullptr, 2, 1, 1, 1, 0, 0);
    CHECK(oracle::max_abs_diff(y, ref) == 0.0);
    // t = 3 reaches outputs t' with 2t' - 1 + k = 3, k in {0,1,2}: t' = 1 and 2
    for (std::size_t t = 0; t < 3; ++t)
        for (std::size_t c = 0; c < 4; ++c) {
            const bool support = t == 1 || t == 2;
            CHECK((y.at({0, c, t, 0, 1}) != 0.0) == support);
            CHECK(y.at({0, c, t, 1, 0}) == 0.0);
        }
    CHECK_THROWS_AS(small.fuse(Tensor::zeros({1, 4, 2, 2, 2}), impulse), DimensionError);
}

TEST_CASE("head: output length, spatial invariance and length mismatch") {
    std::mt19937_64 rng(9);
    model::Head head(16, 8, rng);
    NoGradGuard ng;
    const Tensor y = head(Tensor::randn({2, 16, 2, 1, 1}, rng), Tensor::randn({2, 8, 4, 1, 1}, rng), true);
    CHECK(y.shape() == Shape{2, 8});

    // maps constant over space give the same signal as their 1x1 spatial mean
    const Tensor s1 = Tensor::randn({1, 16, 4, 1, 1}, rng);
    const Tensor f1 = Tensor::randn({1, 8, 8, 1, 1}, rng);
    const Tensor s3 = ops::broadcast_to(s1, {1, 16, 4, 3, 3});
    const Tensor f3 = ops::broadcast_to(f1, {1, 8, 8, 3, 3});
    CHECK(oracle::max_abs_diff(head(s1, f1, false), head(s3, f3, false)) <= 1e-13);

    // constant feature maps with tap-balanced upsampling weights give a constant interior
    for (std::size_t ci = 0; ci < 24; ++ci)
        for (std::size_t co = 0; co < 8; ++co)
            for (std::size_t k = 0; k < 4; ++k) head.up_weight.data_mut()[(ci * 8 + co) * 4 + k] = 0.01 * double(co + 1);
    const Tensor yc = head(Tensor::full({1, 16, 4, 2, 2}, 0.7), Tensor::full({1, 8, 8, 2, 2}, 0.7), false);
    for (std::size_t t = 1; t + 1 < 16; ++t) CHECK(yc.at({0, t}) == doctest::Approx(yc.at({0, 1})).epsilon(1e-13));

    CHECK_THROWS_AS(head(Tensor::zeros({1, 16, 3, 1, 1}), Tensor::zeros({1, 8, 4, 1, 1}), false), DimensionError);
}

TEST_CASE("physmamba: toy forward shapes over random valid configurations") {
    std::mt19937_64 rng(10);
    auto pick = [&](std::size_t lo, std::size_t hi) { return std::uniform_int_distribution<std::size_t>(lo, hi)(rng); };
    NoGradGuard ng;
    for (int trial = 0; trial < 8; ++trial) {
        ModelConfig cfg = toy_config(pick(1, 2) * 8, pick(1, 3), trial);
        model::PhysMamba net(cfg);
        const std::size_t B = pick(1, 2), T = 4 * pick(1, 4), H = 16 * pick(1, 2), W = 16 * pick(1, 2);
        const Tensor y = net.forward(Tensor::uniform({B, 3, T, H, W}, -1.0, 1.0, rng), trial % 2 == 0);
        INFO("config C=" << cfg.channels << " blocks=" << cfg.blocks_per_stream << " input " << T << "x" << H << "x" << W);
        CHECK(y.shape() == Shape{B, T});
        for (double v : y.data()) CHECK(std::isfinite(v));
    }
    model::PhysMamba net(toy_config());
    CHECK(net.forward(Tensor::zeros({2, 3, 16, 16, 16}), false).shape() == Shape{2, 16});
    CHECK_THROWS_AS(net.forward(Tensor::zeros({1, 3, 10, 16, 16}), false), ConfigError);
    CHECK_THROWS_AS(net.forward(Tensor::zeros({1, 3, 8, 24, 16}), false), ConfigError);
}

TEST_CASE("physmamba: input scale changes the eval output; train-mode BN absorbs it") {
    model::PhysMamba net(toy_config());
    std::mt19937_64 rng(11);
    const Tensor x = Tensor::uniform({2, 3, 8, 16, 16}, -1.0, 1.0, rng);
    const Tensor x2 = ops::scale(x, 2.0);
    NoGradGuard ng;
    CHECK(oracle::max_abs_diff(net.forward(x, false), net.forward(x2, false)) > 1e-3);
    // the first conv is bias-free, so batch statistics cancel the scale up to the epsilon guard
    const Tensor a = net.forward(x, true);
    const Tensor b = net.forward(x2, true);
    CHECK(oracle::max_abs_diff(a, b) < 1e-2 * std::max(1.0, oracle::max_abs_diff(a, Tensor::zeros(a.shape()))));
}

TEST_CASE("physmamba: every input frame influences the output") {
    model::PhysMamba net(toy_config(8, 2, 3));
    std::mt19937_64 rng(12);
    const Tensor x = Tensor::uniform({1, 3, 8, 16, 16}, -1.0, 1.0, rng);
    NoGradGuard ng;
    const Tensor y = net.forward(x, false);
    for (std::size_t t = 0; t < 8; ++t) {
        Tensor xp = x.clone();
        for (std::size_t c = 0; c < 3; ++c)
            for (std::size_t i = 0; i < 256; ++i) xp.data_mut()[(c * 8 + t) * 256 + i] += 0.5;
        INFO("frame " << t);
        CHECK(oracle::max_abs_diff(net.forward(xp, false), y) > 0.0);
    }
}

TEST_CASE("profile: analytic parameter count equals the live model; hand-checked layers") {
    nn::Registry reg;
    std::mt19937_64 rng(13);
    nn::Conv3d conv(3, 8, {3, 3, 3}, {1, 1, 1}, {1, 1, 1}, false, rng);
    conv.collect("conv", reg);
    CHECK(reg.param_count() == 648);

    for (const ModelConfig& cfg : {ModelConfig{}, toy_config(8, 1), toy_config(16, 3)}) {
        model::PhysMamba net(cfg);
        CHECK(model::profile_model(cfg, 16, 32, 32).params == net.registry().param_count());
    }
    const auto prof = model::profile_model(ModelConfig{}, 128, 128, 128);
    CHECK(prof.layers.front().name == "stem.conv1.conv");
    CHECK(prof.layers.front().params == 16 * 3 * 25);
    CHECK(prof.layers.front().macs == 16ull * 3 * 25 * 128 * 128 * 128);
    std::uint64_t total = 0;
    for (const auto& l : prof.layers) total += l.macs;
    CHECK(total == prof.macs);
}
