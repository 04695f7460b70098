// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <random>
#include <string>
#include <vector>

#include "physmamba/nn.hpp"
#include "physmamba/ssm.hpp"
#include "physmamba/tensor.hpp"

// Independent oracles used by the verification suites and the CLI. Nothing in
// here shares code paths with the kernels it checks beyond the Tensor container.
namespace physmamba::verify {

struct GradCheckOptions {
    double step = 1e-5;
    double tolerance = 1e-4;
    /// Denominator floor for the relative error, so gradients that are zero up
    /// to finite-difference noise are compared on an absolute scale.
    double floor = 1e-6;
    std::size_t samples = 50;  // coordinates checked across all tensors; all of them if fewer exist
};

struct GradCheckResult {
    std::string name;
    std::size_t checked = 0;
    double max_rel_error = 0.0;
    std::string worst;  // "param[index]: analytic vs numeric" of the worst coordinate
    bool passed = true;
};

double relative_error(double analytic, double numeric, double floor);

/// Compares the tape gradient of `loss_fn` against central differences over
/// sampled coordinates of `params`. loss_fn must be deterministic.
GradCheckResult check_gradients(const std::string& name, const std::function<Tensor()>& loss_fn,
                                const std::vector<nn::NamedParam>& params, std::mt19937_64& rng,
                                const GradCheckOptions& options = {});

/// Checks the gradient of <output_fn(), direction>. The central difference is
/// taken on the outputs elementwise before projecting.
GradCheckResult check_projected_gradients(const std::string& name, const std::function<Tensor()>& output_fn,
                                          const Tensor& direction, const std::vector<nn::NamedParam>& params,
                                          std::mt19937_64& rng, const GradCheckOptions& options = {});

/// Straight-line selective scan: projections, softplus, ZOH and recurrence
/// written out token by token. x is (L,D).
Tensor reference_selective_scan(const ssm::SSMParams& params, const Tensor& x);

struct ScanCheckReport {
    std::string name;
    std::size_t cases = 0;
    double max_rel_error = 0.0;
    double tolerance = 0.0;
    bool bitwise = false;  // for exact-equality checks
    bool passed = true;
};

/// Recurrent vs convolutional evaluation on random time-invariant systems.
ScanCheckReport check_lti_equivalence(std::size_t cases, std::uint64_t seed, double tolerance = 1e-8);
/// Selective scan vs the reference interpreter.
ScanCheckReport check_selective_reference(std::size_t cases, std::uint64_t seed, double tolerance = 1e-10);
/// Constant projections reduce the selective scan to the time-invariant scan, bit for bit.
ScanCheckReport check_selective_degeneration(std::size_t cases, std::uint64_t seed);

/// max_i |a_i - b_i| / max(max_i |b_i|, tiny).
double max_relative_error(const Tensor& a, const Tensor& b);

struct GradientSuiteOptions {
    bool full = false;          // more samples per check and a larger network
    std::uint64_t seed = 2024;
    std::size_t network_samples = 150;
};

/// Finite-difference checks of every differentiable op, the scan, the layers,
/// the loss, and a 2-block network under NegPearson. Results in run order.
std::vector<GradCheckResult> run_gradient_suite(const GradientSuiteOptions& options = {},
                                                const std::function<void(const GradCheckResult&)>& on_result = {});

}  // namespace physmamba::verify
