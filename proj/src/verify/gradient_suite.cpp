// SPDX-License-Identifier: Apache-2.0
#include <functional>
#include <random>

#include "physmamba/autograd.hpp"
#include "physmamba/model.hpp"
#include "physmamba/ops.hpp"
#include "physmamba/signal.hpp"
#include "physmamba/verify.hpp"

namespace physmamba::verify {

namespace {

Tensor leaf(Shape shape, std::mt19937_64& rng) {
    Tensor t = Tensor::randn(std::move(shape), rng);
    t.requires_grad_();
    return t;
}

Tensor positive_leaf(Shape shape, std::mt19937_64& rng) {
    Tensor t = Tensor::uniform(std::move(shape), 0.5, 2.0, rng);
    t.requires_grad_();
    return t;
}

struct Probe {
    std::string name;
    std::vector<nn::NamedParam> inputs;
    std::function<Tensor()> op;
};

// Scalar projection <op(), r> with a fixed random r.
GradCheckResult run_probe(const Probe& probe, std::uint64_t seed, std::size_t samples) {
    std::mt19937_64 rng(seed);
    Tensor y0;
    {
        NoGradGuard ng;
        y0 = probe.op();
    }
    const Tensor r = Tensor::randn(y0.shape(), rng);
    GradCheckOptions opts;
    opts.samples = samples;
    return check_projected_gradients(probe.name, probe.op, r, probe.inputs, rng, opts);
}

std::vector<Probe> op_probes(std::mt19937_64& rng) {
    const Tensor x = leaf({3, 4}, rng);
    const Tensor y = leaf({3, 4}, rng);
    const Tensor p = positive_leaf({3, 4}, rng);
    const Tensor s = leaf({}, rng);
    const Tensor x3 = leaf({2, 3, 4}, rng);
    const Tensor y3 = leaf({2, 2, 4}, rng);
    const Tensor col = leaf({2, 1, 4}, rng);
    const Tensor x5 = leaf({2, 3, 2, 4, 4}, rng);
    const Tensor gamma = leaf({3}, rng);
    const Tensor beta = leaf({3}, rng);
    const Tensor xl = leaf({3, 5}, rng);
    const Tensor lg = leaf({5}, rng);
    const Tensor lb = leaf({5}, rng);
    const Tensor xc = leaf({2, 2, 4, 4, 3}, rng);
    const Tensor wc = leaf({3, 2, 3, 3, 3}, rng);
    const Tensor bc = leaf({3}, rng);
    const Tensor ws = leaf({3, 2, 3, 1, 1}, rng);
    const Tensor xs = leaf({2, 5, 3}, rng);
    const Tensor kd = leaf({3, 4}, rng);
    const Tensor bd = leaf({3}, rng);
    const Tensor xt = leaf({2, 3, 5}, rng);
    const Tensor wt = leaf({3, 2, 4}, rng);
    const Tensor bt = leaf({2}, rng);
    const Tensor wl = leaf({4, 3}, rng);
    const Tensor bl = leaf({4}, rng);
    return {
        {"exp", {{"x", x}}, [=] { return ops::exp(x); }},
        {"log", {{"p", p}}, [=] { return ops::log(p); }},
        {"sqrt", {{"p", p}}, [=] { return ops::sqrt(p); }},
        {"square", {{"x", x}}, [=] { return ops::square(x); }},
        {"neg", {{"x", x}}, [=] { return ops::neg(x); }},
        {"relu", {{"x", x}}, [=] { return ops::relu(x); }},
        {"silu", {{"x", x}}, [=] { return ops::silu(x); }},
        {"sigmoid", {{"x", x}}, [=] { return ops::sigmoid(x); }},
        {"softplus", {{"x", x}}, [=] { return ops::softplus(x); }},
        {"tanh", {{"x", x}}, [=] { return ops::tanh(x); }},
        {"add", {{"x", x}, {"y", y}}, [=] { return ops::add(x, y); }},
        {"sub", {{"x", x}, {"y", y}}, [=] { return ops::sub(x, y); }},
        {"mul", {{"x", x}, {"y", y}}, [=] { return ops::mul(x, y); }},
        {"div", {{"x", x}, {"p", p}}, [=] { return ops::div(x, p); }},
        {"mul_scalar_tensor", {{"x", x}, {"s", s}}, [=] { return ops::mul(x, s); }},
        {"scale", {{"x", x}}, [=] { return ops::scale(x, -1.7); }},
        {"add_scalar", {{"x", x}}, [=] { return ops::add_scalar(x, 0.3); }},
        {"flip", {{"x", x}}, [=] { return ops::flip(x, 1); }},
        {"reshape", {{"x", x3}}, [=] { return ops::reshape(x3, {6, 4}); }},
        {"permute", {{"x", x3}}, [=] { return ops::permute(x3, {2, 0, 1}); }},
        {"slice", {{"x", x3}}, [=] { return ops::slice(x3, 1, 1, 2); }},
        {"concat", {{"x", x3}, {"y", y3}}, [=] { return ops::concat({x3, y3}, 1); }},
        {"broadcast_to", {{"col", col}}, [=] { return ops::broadcast_to(col, {2, 3, 4}); }},
        {"repeat_interleave", {{"x", x3}}, [=] { return ops::repeat_interleave(x3, 2, 2); }},
        {"sum", {{"x", x3}}, [=] { return ops::sum(x3); }},
        {"sum_axis", {{"x", x3}}, [=] { return ops::sum(x3, 1, true); }},
        {"mean", {{"x", x3}}, [=] { return ops::mean(x3); }},
        {"mean_axes", {{"x", x3}}, [=] { return ops::mean(x3, {0, 2}); }},
        {"std", {{"x", x3}}, [=] { return ops::std(x3, 1e-8); }},
        {"max", {{"x", x3}}, [=] { return ops::max(x3); }},
        {"batch_norm_train",
         {{"x", x5}, {"gamma", gamma}, {"beta", beta}},
         [=] {
             ops::BatchNormState st(3);
             return ops::batch_norm(x5, gamma, beta, st, true);
         }},
        {"batch_norm_eval",
         {{"x", x5}, {"gamma", gamma}, {"beta", beta}},
         [=] {
             ops::BatchNormState st(3);
             st.running_mean = {0.1, -0.2, 0.3};
             st.running_var = {0.5, 1.5, 2.0};
             return ops::batch_norm(x5, gamma, beta, st, false);
         }},
        {"layer_norm", {{"x", xl}, {"gamma", lg}, {"beta", lb}}, [=] { return ops::layer_norm(xl, lg, lb); }},
        {"maxpool3d", {{"x", x5}}, [=] { return ops::maxpool3d(x5, {1, 2, 2}, {1, 2, 2}); }},
        {"avgpool_spatial", {{"x", x5}}, [=] { return ops::avgpool_spatial(x5); }},
        {"conv3d", {{"x", xc}, {"w", wc}, {"b", bc}}, [=] { return ops::conv3d(xc, wc, bc, {1, 1, 1}, {1, 1, 1}); }},
        {"conv3d_strided", {{"x", xc}, {"w", ws}}, [=] { return ops::conv3d(xc, ws, std::nullopt, {2, 1, 1}, {1, 0, 0}); }},
        {"conv1d_depthwise_causal", {{"x", xs}, {"k", kd}, {"b", bd}}, [=] { return ops::conv1d_depthwise_causal(xs, kd, bd); }},
        {"conv_transpose1d", {{"x", xt}, {"w", wt}, {"b", bt}}, [=] { return ops::conv_transpose1d(xt, wt, bt, 2, 1); }},
        {"linear", {{"x", xs}, {"w", wl}, {"b", bl}}, [=] { return ops::linear(xs, wl, bl); }},
        {"tdc", {{"x", xc}, {"w", wc}}, [=] { return model::tdc_forward(xc, wc, 0.5); }},
    };
}

}  // namespace

std::vector<GradCheckResult> run_gradient_suite(const GradientSuiteOptions& options,
                                                const std::function<void(const GradCheckResult&)>& on_result) {
    std::vector<GradCheckResult> out;
    auto record = [&](GradCheckResult r) {
        if (on_result) on_result(r);
        out.push_back(std::move(r));
    };
    const std::size_t probe_samples = options.full ? 1000 : 200;
    std::mt19937_64 rng(options.seed);

    std::uint64_t seed = options.seed + 1;
    for (const auto& probe : op_probes(rng)) record(run_probe(probe, seed++, probe_samples));

    {
        const std::size_t Bt = 2, L = 6, D = 3, N = 4;
        Tensor u = leaf({Bt, L, D}, rng);
        Tensor delta = Tensor::uniform({Bt, L, D}, 0.05, 0.6, rng).requires_grad_();
        Tensor A({D, N});
        for (double& v : A.data_mut()) v = -std::uniform_real_distribution<double>(0.2, 2.0)(rng);
        A.data_mut()[0] = -1e-4;
        A.requires_grad_();
        Tensor B = leaf({Bt, L, N}, rng);
        Tensor C = leaf({Bt, L, N}, rng);
        record(run_probe({"selective_scan", {{"u", u}, {"delta", delta}, {"A", A}, {"B", B}, {"C", C}},
                          [=] { return ssm::selective_scan_op(u, delta, A, B, C); }},
                         seed++, probe_samples));
    }
    {
        ssm::BiMamba m(4, 2, 4, rng);
        nn::Registry reg;
        m.collect("bimamba", reg);
        Tensor h = leaf({2, 5, 4}, rng);
        auto params = reg.params();
        params.push_back({"h", h});
        record(run_probe({"bimamba", params, [&m, h] { return m(h); }}, seed++, probe_samples));
    }
    {
        model::ModelConfig cfg;
        cfg.channels = 4;
        cfg.state_dim = 4;
        cfg.ca_ratio = 2;
        model::TDMambaBlock block(4, cfg, rng);
        nn::Registry reg;
        block.collect("block", reg);
        Tensor f = leaf({1, 4, 4, 2, 2}, rng);
        auto params = reg.params();
        params.push_back({"input", f});
        std::mt19937_64 pick(seed++);
        GradCheckOptions opts;
        opts.samples = probe_samples;
        record(check_gradients("td_mamba_block", [&block, f] { return ops::mean(block(f, true)); }, params, pick, opts));
    }
    {
        model::ChannelAttention ca(4, 2, rng);
        nn::Registry reg;
        ca.collect("ca", reg);
        Tensor f = leaf({2, 4, 2, 2, 2}, rng);
        auto params = reg.params();
        params.push_back({"input", f});
        record(run_probe({"channel_attention", params, [&ca, f] { return ca(f); }}, seed++, probe_samples));
    }
    {
        Tensor pred = leaf({3, 16}, rng);
        const Tensor target = Tensor::randn({3, 16}, rng);
        record(run_probe({"neg_pearson", {{"pred", pred}}, [=] { return signal::neg_pearson_loss(pred, target); }},
                         seed++, probe_samples));
    }
    {
        model::ModelConfig cfg;
        cfg.channels = options.full ? 16 : 8;
        cfg.blocks_per_stream = 2;
        cfg.ca_ratio = 4;
        cfg.state_dim = 4;
        cfg.seed = options.seed;
        model::PhysMamba net(cfg);
        const std::size_t T = 8;
        const Tensor x = Tensor::uniform({1, 3, T, 16, 16}, -1.0, 1.0, rng);
        const Tensor y = Tensor::randn({1, T}, rng);
        auto loss = [&] { return signal::neg_pearson_loss(net.forward(x, true), y); };
        GradCheckOptions opts;
        opts.samples = options.full ? 4 * options.network_samples : options.network_samples;
        record(check_gradients("physmamba_2block", loss, net.registry().params(), rng, opts));
    }
    return out;
}

}  // namespace physmamba::verify
