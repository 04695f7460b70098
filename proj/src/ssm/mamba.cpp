// SPDX-License-Identifier: Apache-2.0
#include <cmath>

#include "physmamba/autograd.hpp"
#include "physmamba/errors.hpp"
#include "physmamba/ops.hpp"
#include "physmamba/ssm.hpp"

namespace physmamba::ssm {

using detail::Node;

namespace {

// d/da of (exp(x)-1)/a at fixed delta is delta^2 * psi(delta*a),
// psi(x) = (x e^x - e^x + 1) / x^2.
double zoh_input_psi(double x) {
    if (std::abs(x) < 1e-2) {
        return 0.5 + x * (1.0 / 3.0 + x * (1.0 / 8.0 + x * (1.0 / 30.0 + x * (1.0 / 144.0 + x / 840.0))));
    }
    return (x * std::exp(x) - std::expm1(x)) / (x * x);
}

double inverse_softplus(double y) { return y + std::log(-std::expm1(-y)); }

}  // namespace

SSMParams::SSMParams(std::size_t channels, std::size_t state_dim_, std::size_t dt_rank_, std::mt19937_64& rng)
    : state_dim(state_dim_), dt_rank(dt_rank_) {
    a_log = Tensor({channels, state_dim});
    auto al = a_log.data_mut();
    for (std::size_t d = 0; d < channels; ++d)
        for (std::size_t n = 0; n < state_dim; ++n) al[d * state_dim + n] = std::log(static_cast<double>(n + 1));
    a_log.requires_grad_();

    x_proj = nn::init_fan_in({dt_rank + 2 * state_dim, channels}, channels, rng);
    dt_proj = nn::init_fan_in({channels, dt_rank}, dt_rank, rng);

    std::uniform_real_distribution<double> log_dt(std::log(1e-3), std::log(1e-1));
    dt_bias = Tensor({channels});
    for (double& v : dt_bias.data_mut()) v = inverse_softplus(std::exp(log_dt(rng)));
    dt_bias.requires_grad_();
}

Tensor SSMParams::A() const { return ops::neg(ops::exp(a_log)); }

void SSMParams::collect(const std::string& prefix, nn::Registry& reg) {
    reg.add_param(prefix + ".a_log", a_log);
    reg.add_param(prefix + ".x_proj.weight", x_proj);
    if (x_proj_bias) reg.add_param(prefix + ".x_proj.bias", *x_proj_bias);
    reg.add_param(prefix + ".dt_proj.weight", dt_proj);
    reg.add_param(prefix + ".dt_proj.bias", dt_bias);
}

Tensor selective_scan_op(const Tensor& u, const Tensor& delta, const Tensor& A, const Tensor& B, const Tensor& C) {
    if (u.dim() != 3) throw DimensionError("selective scan input must be (B,L,D), got " + shape_str(u.shape()));
    const std::size_t Bt = u.size(0), L = u.size(1), D = u.size(2);
    if (delta.shape() != u.shape()) throw DimensionError("delta must match input shape " + shape_str(u.shape()));
    if (A.dim() != 2 || A.size(0) != D) throw DimensionError("A must be (D,N), got " + shape_str(A.shape()));
    const std::size_t N = A.size(1);
    const Shape bc_shape{Bt, L, N};
    if (B.shape() != bc_shape || C.shape() != bc_shape) {
        throw DimensionError("B and C must be " + shape_str(bc_shape));
    }
    const auto ud = u.data();
    const auto dd = delta.data();
    const auto ad = A.data();
    const auto bd = B.data();
    const auto cd = C.data();
    for (double v : dd) {
        if (!(v > 0.0)) throw ParameterizationError("selective scan step size must be positive");
    }

    const bool keep_states =
        grad_enabled() && (u.requires_grad() || delta.requires_grad() || A.requires_grad() || B.requires_grad() ||
                           C.requires_grad());
    auto states = std::make_shared<std::vector<double>>();
    if (keep_states) states->resize(Bt * L * D * N);

    std::vector<double> y(Bt * L * D, 0.0);
    std::vector<double> h(D * N);
    for (std::size_t b = 0; b < Bt; ++b) {
        std::fill(h.begin(), h.end(), 0.0);
        for (std::size_t t = 0; t < L; ++t) {
            const std::size_t row = b * L + t;
            const double* bt = bd.data() + row * N;
            const double* ct = cd.data() + row * N;
            for (std::size_t d = 0; d < D; ++d) {
                const double dl = dd[row * D + d];
                const double xv = ud[row * D + d];
                double* hd = h.data() + d * N;
                double acc = 0.0;
                for (std::size_t n = 0; n < N; ++n) {
                    const double a = ad[d * N + n];
                    hd[n] = zoh_transition(dl, a) * hd[n] + zoh_input(dl, a, bt[n]) * xv;
                    acc += ct[n] * hd[n];
                }
                if (!std::isfinite(acc)) {
                    throw NumericError("non-finite selective scan state at step " + std::to_string(t));
                }
                y[row * D + d] = acc;
                if (keep_states) std::copy(hd, hd + N, states->data() + (row * D + d) * N);
            }
        }
    }

    auto bw = [=](Node& node, std::span<const double> g) {
        auto* gu = node.input_grad(0);
        auto* gdelta = node.input_grad(1);
        auto* gA = node.input_grad(2);
        auto* gB = node.input_grad(3);
        auto* gC = node.input_grad(4);
        const auto& uv = node.inputs[0]->data;
        const auto& dv = node.inputs[1]->data;
        const auto& av = node.inputs[2]->data;
        const auto& bv = node.inputs[3]->data;
        const auto& cv = node.inputs[4]->data;
        const auto& hs = *states;
        std::vector<double> dh(D * N);
        for (std::size_t b = 0; b < Bt; ++b) {
            std::fill(dh.begin(), dh.end(), 0.0);
            for (std::size_t t = L; t-- > 0;) {
                const std::size_t row = b * L + t;
                for (std::size_t d = 0; d < D; ++d) {
                    const double gy = g[row * D + d];
                    const double dl = dv[row * D + d];
                    const double xv = uv[row * D + d];
                    const double* h_t = hs.data() + (row * D + d) * N;
                    const double* h_prev = t > 0 ? hs.data() + ((row - 1) * D + d) * N : nullptr;
                    double* dhd = dh.data() + d * N;
                    double du = 0.0;
                    double ddelta = 0.0;
                    for (std::size_t n = 0; n < N; ++n) {
                        const double a = av[d * N + n];
                        const double bn = bv[row * N + n];
                        const double x = dl * a;
                        const double a_bar = std::exp(x);
                        const double b_coef = zoh_input(dl, a, 1.0);
                        if (gC) (*gC)[row * N + n] += gy * h_t[n];
                        dhd[n] += gy * cv[row * N + n];
                        const double gh = dhd[n];
                        const double hp = h_prev ? h_prev[n] : 0.0;
                        const double g_abar = gh * hp;
                        const double g_bbar = gh * xv;
                        du += gh * b_coef * bn;
                        ddelta += g_abar * a * a_bar + g_bbar * a_bar * bn;
                        if (gA) (*gA)[d * N + n] += g_abar * dl * a_bar + g_bbar * bn * dl * dl * zoh_input_psi(x);
                        if (gB) (*gB)[row * N + n] += g_bbar * b_coef;
                        dhd[n] = gh * a_bar;
                    }
                    if (gu) (*gu)[row * D + d] += du;
                    if (gdelta) (*gdelta)[row * D + d] += ddelta;
                }
            }
        }
    };
    return detail::make_result("selective_scan", u.shape(), std::move(y), {u, delta, A, B, C}, bw);
}

BiMamba::BiMamba(std::size_t d_model_, std::size_t expand, std::size_t state_dim, std::mt19937_64& rng)
    : d_model(d_model_), d_inner(expand * d_model_), norm(d_model_) {
    in_proj = nn::Linear(d_model, 2 * d_inner, false, rng);
    conv_weight = nn::init_fan_in({d_inner, conv_kernel}, conv_kernel, rng);
    conv_bias = nn::init_fan_in({d_inner}, conv_kernel, rng);
    const std::size_t rank = dt_rank_for(d_model);
    ssm_fwd = SSMParams(d_inner, state_dim, rank, rng);
    ssm_bwd = SSMParams(d_inner, state_dim, rank, rng);
    out_proj = nn::Linear(d_inner, d_model, false, rng);
}

std::pair<Tensor, Tensor> BiMamba::project(const Tensor& h) const {
    if (h.dim() != 3 || h.size(2) != d_model) {
        throw DimensionError("Bi-Mamba input must be (B,L," + std::to_string(d_model) + "), got " +
                             shape_str(h.shape()));
    }
    const Tensor xz = in_proj(norm(h));
    return {ops::slice(xz, 2, 0, d_inner), ops::slice(xz, 2, d_inner, d_inner)};
}

Tensor BiMamba::direction_forward(const Tensor& x, Direction dir) const {
    const SSMParams& p = dir == Direction::forward ? ssm_fwd : ssm_bwd;
    const Tensor xs = dir == Direction::backward ? ops::flip(x, 1) : x;
    // shorter sequences than the kernel are fine: the causal padding is zeros
    const Tensor xc = ops::silu(ops::conv1d_depthwise_causal(xs, conv_weight, conv_bias));
    const Tensor proj = ops::linear(xc, p.x_proj, p.x_proj_bias);
    const Tensor dt_low = ops::slice(proj, 2, 0, p.dt_rank);
    const Tensor B = ops::slice(proj, 2, p.dt_rank, p.state_dim);
    const Tensor C = ops::slice(proj, 2, p.dt_rank + p.state_dim, p.state_dim);
    const Tensor delta = ops::softplus(ops::linear(dt_low, p.dt_proj, p.dt_bias));
    Tensor y = selective_scan_op(xc, delta, p.A(), B, C);
    return dir == Direction::backward ? ops::flip(y, 1) : y;
}

Tensor BiMamba::forward_direction(const Tensor& h, Direction dir) const {
    return direction_forward(project(h).first, dir);
}

Tensor BiMamba::operator()(const Tensor& h) const {
    const auto [x, z] = project(h);
    const Tensor gate = ops::silu(z);
    const Tensor y_fwd = ops::mul(direction_forward(x, Direction::forward), gate);
    const Tensor y_bwd = ops::mul(direction_forward(x, Direction::backward), gate);
    return out_proj(ops::add(y_fwd, y_bwd));
}

void BiMamba::collect(const std::string& prefix, nn::Registry& reg) {
    norm.collect(prefix + ".norm", reg);
    in_proj.collect(prefix + ".in_proj", reg);
    reg.add_param(prefix + ".conv1d.weight", conv_weight);
    reg.add_param(prefix + ".conv1d.bias", conv_bias);
    ssm_fwd.collect(prefix + ".ssm_fwd", reg);
    ssm_bwd.collect(prefix + ".ssm_bwd", reg);
    out_proj.collect(prefix + ".out_proj", reg);
}

}  // namespace physmamba::ssm
