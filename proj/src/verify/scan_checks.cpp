// SPDX-License-Identifier: Apache-2.0
#include <cmath>

#include "physmamba/autograd.hpp"
#include "physmamba/errors.hpp"
#include "physmamba/ops.hpp"
#include "physmamba/ssm.hpp"
#include "physmamba/verify.hpp"

namespace physmamba::verify {

Tensor reference_selective_scan(const ssm::SSMParams& params, const Tensor& x) {
    const std::size_t L = x.size(0);
    const std::size_t D = x.size(1);
    const std::size_t N = params.state_dim;
    const std::size_t R = params.dt_rank;
    const auto xv = x.data();
    const auto wx = params.x_proj.data();
    const auto wdt = params.dt_proj.data();
    const auto bdt = params.dt_bias.data();
    const auto alog = params.a_log.data();

    std::vector<double> h(D * N, 0.0);
    Tensor y({L, D});
    auto yv = y.data_mut();
    std::vector<double> row(R + 2 * N);
    for (std::size_t t = 0; t < L; ++t) {
        // row = W_x x_t (+ bias)
        for (std::size_t j = 0; j < R + 2 * N; ++j) {
            double s = params.x_proj_bias ? params.x_proj_bias->data()[j] : 0.0;
            for (std::size_t d = 0; d < D; ++d) s += wx[j * D + d] * xv[t * D + d];
            row[j] = s;
        }
        for (std::size_t d = 0; d < D; ++d) {
            double pre = bdt[d];
            for (std::size_t r = 0; r < R; ++r) pre += wdt[d * R + r] * row[r];
            const double delta = std::log(1.0 + std::exp(pre));
            double out = 0.0;
            for (std::size_t n = 0; n < N; ++n) {
                const double a = -std::exp(alog[d * N + n]);
                const double b = row[R + n];
                const double c = row[R + N + n];
                const double a_bar = std::exp(delta * a);
                const double b_bar = (a_bar - 1.0) / a * b;
                h[d * N + n] = a_bar * h[d * N + n] + b_bar * xv[t * D + d];
                out += c * h[d * N + n];
            }
            yv[t * D + d] = out;
        }
    }
    return y;
}

ScanCheckReport check_lti_equivalence(std::size_t cases, std::uint64_t seed, double tolerance) {
    ScanCheckReport report{"recurrent vs convolutional (LTI)", 0, 0.0, tolerance, false, true};
    std::mt19937_64 rng(seed);
    const std::size_t lengths[] = {1, 2, 17, 64};
    std::uniform_int_distribution<std::size_t> channels(1, 8);
    std::uniform_real_distribution<double> log_a(std::log(0.05), std::log(16.0));
    std::uniform_real_distribution<double> log_dt(std::log(1e-3), std::log(0.5));
    const std::size_t N = 16;
    for (std::size_t c = 0; c < cases; ++c) {
        const std::size_t L = lengths[c % 4];
        const std::size_t D = channels(rng);
        Tensor A({D, N});
        for (double& v : A.data_mut()) v = -std::exp(log_a(rng));
        Tensor B = Tensor::randn({N}, rng);
        Tensor C = Tensor::randn({D, N}, rng);
        Tensor delta({D});
        for (double& v : delta.data_mut()) v = std::exp(log_dt(rng));
        Tensor x = Tensor::randn({L, D}, rng);
        const auto disc = ssm::discretize_zoh(A, B, delta);
        const Tensor rec = ssm::scan_recurrent(disc.a_bar, disc.b_bar, C, x);
        const Tensor conv = ssm::scan_convolutional(disc.a_bar, disc.b_bar, C, x);
        report.max_rel_error = std::max(report.max_rel_error, max_relative_error(conv, rec));
        ++report.cases;
    }
    report.passed = report.max_rel_error <= tolerance;
    return report;
}

namespace {

ssm::SSMParams random_params(std::size_t D, std::size_t N, std::mt19937_64& rng) {
    ssm::SSMParams p(D, N, ssm::BiMamba::dt_rank_for(D), rng);
    // spread A away from its deterministic initialization
    for (double& v : p.a_log.data_mut()) v += std::normal_distribution<double>(0.0, 0.3)(rng);
    return p;
}

}  // namespace

ScanCheckReport check_selective_reference(std::size_t cases, std::uint64_t seed, double tolerance) {
    ScanCheckReport report{"selective scan vs reference interpreter", 0, 0.0, tolerance, false, true};
    std::mt19937_64 rng(seed);
    for (std::size_t c = 0; c < cases; ++c) {
        const std::size_t L = 32, D = 4, N = 16;
        ssm::SSMParams p = random_params(D, N, rng);
        const Tensor x = Tensor::randn({L, D}, rng);
        const Tensor y = ssm::selective_scan(p, x);
        const Tensor ref = reference_selective_scan(p, x);
        report.max_rel_error = std::max(report.max_rel_error, max_relative_error(y, ref));
        ++report.cases;
    }
    report.passed = report.max_rel_error <= tolerance;
    return report;
}

ScanCheckReport check_selective_degeneration(std::size_t cases, std::uint64_t seed) {
    ScanCheckReport report{"constant projections == LTI scan (bitwise)", 0, 0.0, 0.0, true, true};
    std::mt19937_64 rng(seed);
    NoGradGuard no_grad;
    for (std::size_t c = 0; c < cases; ++c) {
        const std::size_t L = 24, D = 4, N = 16;
        ssm::SSMParams p = random_params(D, N, rng);
        const std::size_t R = p.dt_rank;
        for (double& v : p.x_proj.data_mut()) v = 0.0;
        p.x_proj_bias = Tensor::randn({R + 2 * N}, rng);
        const Tensor x = Tensor::randn({L, D}, rng);
        const Tensor y = ssm::selective_scan(p, x);

        const Tensor dt_low = ops::reshape(ops::slice(*p.x_proj_bias, 0, 0, R), {1, R});
        const Tensor b = ops::slice(*p.x_proj_bias, 0, R, N);
        const Tensor cvec = ops::slice(*p.x_proj_bias, 0, R + N, N);
        const Tensor delta = ops::reshape(ops::softplus(ops::linear(dt_low, p.dt_proj, p.dt_bias)), {D});
        const auto disc = ssm::discretize_zoh(p.A(), b, delta);
        const Tensor lti = ssm::scan_recurrent(disc.a_bar, disc.b_bar, cvec, x);

        const auto yd = y.data();
        const auto ld = lti.data();
        for (std::size_t i = 0; i < yd.size(); ++i) {
            if (yd[i] != ld[i]) report.passed = false;
        }
        report.max_rel_error = std::max(report.max_rel_error, max_relative_error(y, lti));
        ++report.cases;
    }
    return report;
}

}  // namespace physmamba::verify
