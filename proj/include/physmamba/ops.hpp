// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <vector>

#include "physmamba/tensor.hpp"

// Differentiable operations. Binary ops take equal shapes or a single-element
// operand on either side; anything else needs an explicit broadcast_to.
namespace physmamba::ops {

// ---- elementwise -----------------------------------------------------------

enum class Unary { exp, log, sqrt, square, neg, relu, silu, sigmoid, softplus, tanh };
enum class Binary { add, sub, mul, div };

Tensor unary(Unary kind, const Tensor& x);
Tensor binary(Binary kind, const Tensor& x, const Tensor& y);

inline Tensor exp(const Tensor& x) { return unary(Unary::exp, x); }
inline Tensor log(const Tensor& x) { return unary(Unary::log, x); }
inline Tensor sqrt(const Tensor& x) { return unary(Unary::sqrt, x); }
inline Tensor square(const Tensor& x) { return unary(Unary::square, x); }
inline Tensor neg(const Tensor& x) { return unary(Unary::neg, x); }
inline Tensor relu(const Tensor& x) { return unary(Unary::relu, x); }
inline Tensor silu(const Tensor& x) { return unary(Unary::silu, x); }
inline Tensor sigmoid(const Tensor& x) { return unary(Unary::sigmoid, x); }
inline Tensor softplus(const Tensor& x) { return unary(Unary::softplus, x); }
inline Tensor tanh(const Tensor& x) { return unary(Unary::tanh, x); }

inline Tensor add(const Tensor& x, const Tensor& y) { return binary(Binary::add, x, y); }
inline Tensor sub(const Tensor& x, const Tensor& y) { return binary(Binary::sub, x, y); }
inline Tensor mul(const Tensor& x, const Tensor& y) { return binary(Binary::mul, x, y); }
inline Tensor div(const Tensor& x, const Tensor& y) { return binary(Binary::div, x, y); }

/// x * factor.
Tensor scale(const Tensor& x, double factor);
/// x + offset.
Tensor add_scalar(const Tensor& x, double offset);
/// Reverses one axis.
Tensor flip(const Tensor& x, std::size_t axis);

// ---- shape -----------------------------------------------------------------

Tensor reshape(const Tensor& x, Shape shape);
Tensor permute(const Tensor& x, const std::vector<std::size_t>& order);
/// Contiguous range [start, start+length) along one axis.
Tensor slice(const Tensor& x, std::size_t axis, std::size_t start, std::size_t length);
Tensor concat(const std::vector<Tensor>& parts, std::size_t axis);
/// Expands size-1 axes to the target shape (same rank required).
Tensor broadcast_to(const Tensor& x, const Shape& shape);
/// Repeats every element `factor` times along one axis (nearest-neighbour upsampling).
Tensor repeat_interleave(const Tensor& x, std::size_t axis, std::size_t factor);

// ---- reductions ------------------------------------------------------------

Tensor sum(const Tensor& x);
Tensor sum(const Tensor& x, std::size_t axis, bool keepdim = false);
Tensor mean(const Tensor& x);
Tensor mean(const Tensor& x, const std::vector<std::size_t>& axes, bool keepdim = false);
/// Population standard deviation sqrt(var + eps). eps = 0 on a single element is a ReductionError.
Tensor std(const Tensor& x, double eps = 0.0);
/// Maximum over all elements; the gradient flows to the first maximal element.
Tensor max(const Tensor& x);

// ---- normalization ---------------------------------------------------------

/// Per-channel running statistics for batch_norm.
struct BatchNormState {
    std::vector<double> running_mean;
    std::vector<double> running_var;
    double momentum = 0.1;
    double eps = 1e-5;

    explicit BatchNormState(std::size_t channels = 0)
        : running_mean(channels, 0.0), running_var(channels, 1.0) {}
};

/// Normalizes over every axis except axis 1. In training mode uses batch
/// statistics and updates `state` (unbiased running variance); otherwise uses
/// the running statistics.
Tensor batch_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, BatchNormState& state,
                  bool training);

/// Normalizes over the last axis, then applies gamma/beta (both of that axis' extent).
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps = 1e-5);

// ---- pooling ---------------------------------------------------------------

using Triple = std::array<std::size_t, 3>;

/// Max pooling on (B,C,T,H,W) without padding.
Tensor maxpool3d(const Tensor& x, Triple kernel, Triple stride);
/// Mean over the two trailing (spatial) axes: (B,C,T,H,W) -> (B,C,T).
Tensor avgpool_spatial(const Tensor& x);

// ---- convolution / affine --------------------------------------------------

/// Output extent for a strided, zero-padded window.
std::size_t conv_out_extent(std::size_t in, std::size_t kernel, std::size_t stride, std::size_t padding);

/// x (B,Cin,T,H,W) * w (Cout,Cin,kt,kh,kw) with zero padding.
Tensor conv3d(const Tensor& x, const Tensor& w, const std::optional<Tensor>& bias, Triple stride,
              Triple padding);

/// Depthwise causal convolution along axis 1 of x (B,L,D); w is (D,K), left padding K-1.
Tensor conv1d_depthwise_causal(const Tensor& x, const Tensor& w, const std::optional<Tensor>& bias);

/// Transposed convolution over time: x (B,Cin,T), w (Cin,Cout,K) -> (B,Cout,(T-1)*stride-2*padding+K).
Tensor conv_transpose1d(const Tensor& x, const Tensor& w, const std::optional<Tensor>& bias,
                        std::size_t stride, std::size_t padding);

/// Affine map over the last axis: x (...,Din), w (Dout,Din).
Tensor linear(const Tensor& x, const Tensor& w, const std::optional<Tensor>& bias);

}  // namespace physmamba::ops
