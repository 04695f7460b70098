// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <random>
#include <string>
#include <vector>

#include "physmamba/ops.hpp"
#include "physmamba/tensor.hpp"

// Parameter-holding wrappers over the differentiable ops.
namespace physmamba::nn {

struct NamedParam {
    std::string name;
    Tensor tensor;
};

struct NamedBuffer {
    std::string name;
    std::vector<double>* values;
};

/// Ordered view of a model's learnable tensors and non-learnable state.
/// Pointers stay valid only while the owning model is alive and unmoved.
class Registry {
public:
    void add_param(std::string name, const Tensor& t) { params_.push_back({std::move(name), t}); }
    void add_buffer(std::string name, std::vector<double>& values) { buffers_.push_back({std::move(name), &values}); }

    const std::vector<NamedParam>& params() const { return params_; }
    const std::vector<NamedBuffer>& buffers() const { return buffers_; }
    std::size_t param_count() const;

private:
    std::vector<NamedParam> params_;
    std::vector<NamedBuffer> buffers_;
};

/// U(-1/sqrt(fan_in), 1/sqrt(fan_in)), marked as requiring a gradient.
Tensor init_fan_in(Shape shape, std::size_t fan_in, std::mt19937_64& rng);
Tensor make_param(Shape shape, double fill);

struct Linear {
    Tensor weight;  // (out, in)
    std::optional<Tensor> bias;

    Linear() = default;
    Linear(std::size_t in, std::size_t out, bool with_bias, std::mt19937_64& rng);
    Tensor operator()(const Tensor& x) const { return ops::linear(x, weight, bias); }
    void collect(const std::string& prefix, Registry& reg);
};

struct LayerNorm {
    Tensor gamma;
    Tensor beta;
    double eps = 1e-5;

    LayerNorm() = default;
    explicit LayerNorm(std::size_t width);
    Tensor operator()(const Tensor& x) const { return ops::layer_norm(x, gamma, beta, eps); }
    void collect(const std::string& prefix, Registry& reg);
};

struct BatchNorm {
    Tensor gamma;
    Tensor beta;
    ops::BatchNormState state;

    BatchNorm() = default;
    explicit BatchNorm(std::size_t channels);
    Tensor operator()(const Tensor& x, bool training) { return ops::batch_norm(x, gamma, beta, state, training); }
    void collect(const std::string& prefix, Registry& reg);
};

struct Conv3d {
    Tensor weight;  // (Cout, Cin, kt, kh, kw)
    std::optional<Tensor> bias;
    ops::Triple stride{1, 1, 1};
    ops::Triple padding{0, 0, 0};

    Conv3d() = default;
    Conv3d(std::size_t cin, std::size_t cout, ops::Triple kernel, ops::Triple stride, ops::Triple padding,
           bool with_bias, std::mt19937_64& rng);
    Tensor operator()(const Tensor& x) const { return ops::conv3d(x, weight, bias, stride, padding); }
    void collect(const std::string& prefix, Registry& reg);
};

}  // namespace physmamba::nn
