// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <utility>
#include <random>
#include <string>

#include "physmamba/nn.hpp"
#include "physmamba/tensor.hpp"

// State-space kernels. Shapes use L = sequence length, D = channels, N = state size.
// A is diagonal per (channel, state), so every matrix exponential is elementwise.
namespace physmamba::ssm {

/// Below this |delta * a| the input matrix uses its Taylor branch.
inline constexpr double kZohSeriesThreshold = 1e-8;

/// exp(delta * a).
double zoh_transition(double delta, double a);
/// (exp(delta*a) - 1) / a * b, continuous through delta*a -> 0.
double zoh_input(double delta, double a, double b);

struct Discretized {
    Tensor a_bar;  // (D,N) time-invariant or (L,D,N) per token
    Tensor b_bar;  // same shape as a_bar
    bool selective() const { return a_bar.dim() == 3; }
};

/// Zero-order-hold discretization.
///
/// A is (D,N). B is (N) for a time-invariant system or (L,N) per token; delta is
/// a scalar, (D), or (L,D). If either B or delta carries a time axis the result
/// is per token, (L,D,N). Non-positive delta raises ParameterizationError.
Discretized discretize_zoh(const Tensor& A, const Tensor& B, const Tensor& delta);

/// h(t) = a_bar h(t-1) + b_bar x(t), y(t) = C h(t), h(-1) = 0.
///
/// Time-invariant: a_bar, b_bar (D,N); C (N) or (D,N). Selective: a_bar, b_bar
/// (L,D,N); C (L,N). x is (L,D); the result is (L,D).
Tensor scan_recurrent(const Tensor& a_bar, const Tensor& b_bar, const Tensor& C, const Tensor& x);

/// Convolution kernel K[k,d] = sum_n C a_bar^k b_bar for a time-invariant system, shape (L,D).
Tensor lti_kernel(const Tensor& a_bar, const Tensor& b_bar, const Tensor& C, std::size_t length);

/// y = x * K, causal per channel. Selective parameters raise ModeError.
Tensor scan_convolutional(const Tensor& a_bar, const Tensor& b_bar, const Tensor& C, const Tensor& x);

/// Parameters of one selective SSM (one scan direction).
struct SSMParams {
    Tensor a_log;            // (D,N); A = -exp(a_log)
    Tensor x_proj;           // (R + 2N, D): rows are [delta_low | B | C]
    std::optional<Tensor> x_proj_bias;  // (R + 2N), absent in the Mamba layer
    Tensor dt_proj;          // (D, R)
    Tensor dt_bias;          // (D)
    std::size_t state_dim = 16;
    std::size_t dt_rank = 1;

    SSMParams() = default;
    /// Standard initialization: a = -(n+1), softplus(dt_bias) log-uniform in [1e-3, 1e-1].
    SSMParams(std::size_t channels, std::size_t state_dim, std::size_t dt_rank, std::mt19937_64& rng);

    std::size_t channels() const { return a_log.size(0); }
    /// Differentiable A = -exp(a_log).
    Tensor A() const;
    void collect(const std::string& prefix, nn::Registry& reg);
};

/// Projections of x (L,D) into per-token (delta, B, C), then discretize and scan.
Tensor selective_scan(const SSMParams& params, const Tensor& x);

/// Differentiable fused selective scan over a batch.
///
/// u, delta: (Bt,L,D); A: (D,N); B, C: (Bt,L,N). Returns (Bt,L,D). The reverse
/// pass is hand-derived and stores the hidden states of the forward pass.
Tensor selective_scan_op(const Tensor& u, const Tensor& delta, const Tensor& A, const Tensor& B, const Tensor& C);

enum class Direction { forward, backward };

/// Bidirectional Mamba layer: LN -> in-projection -> per-direction (conv1d, SiLU, SSM) -> SiLU(z) gate -> out-projection.
///
/// Both directions share the in/out projections and the depthwise conv; each has its own SSM parameters.
struct BiMamba {
    std::size_t d_model = 0;
    std::size_t d_inner = 0;
    std::size_t conv_kernel = 4;
    nn::LayerNorm norm;
    nn::Linear in_proj;   // d_model -> 2 d_inner (x | z)
    Tensor conv_weight;   // (d_inner, conv_kernel)
    Tensor conv_bias;     // (d_inner)
    SSMParams ssm_fwd;
    SSMParams ssm_bwd;
    nn::Linear out_proj;  // d_inner -> d_model

    BiMamba() = default;
    BiMamba(std::size_t d_model, std::size_t expand, std::size_t state_dim, std::mt19937_64& rng);

    static std::size_t dt_rank_for(std::size_t d_model) { return (d_model + 15) / 16; }

    /// (x, z) halves of the in-projection of LN(h): each (B,L,d_inner).
    std::pair<Tensor, Tensor> project(const Tensor& h) const;
    /// SSM branch for one direction given the x half, returned in forward order, (B,L,d_inner).
    Tensor direction_forward(const Tensor& x, Direction dir) const;
    /// One direction from the layer input h (B,L,d_model): SSM output before gating.
    Tensor forward_direction(const Tensor& h, Direction dir) const;
    /// out_proj(y_fwd * silu(z) + y_bwd * silu(z)), (B,L,d_model). No residual.
    Tensor operator()(const Tensor& h) const;

    void collect(const std::string& prefix, nn::Registry& reg);
};

}  // namespace physmamba::ssm
