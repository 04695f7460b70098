// SPDX-License-Identifier: Apache-2.0
#include "physmamba/nn.hpp"

#include <cmath>

namespace physmamba::nn {

std::size_t Registry::param_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.tensor.numel();
    return n;
}

Tensor init_fan_in(Shape shape, std::size_t fan_in, std::mt19937_64& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    Tensor t = Tensor::uniform(std::move(shape), -bound, bound, rng);
    t.requires_grad_();
    return t;
}

Tensor make_param(Shape shape, double fill) {
    Tensor t(std::move(shape), fill);
    t.requires_grad_();
    return t;
}

Linear::Linear(std::size_t in, std::size_t out, bool with_bias, std::mt19937_64& rng)
    : weight(init_fan_in({out, in}, in, rng)) {
    if (with_bias) bias = init_fan_in({out}, in, rng);
}

void Linear::collect(const std::string& prefix, Registry& reg) {
    reg.add_param(prefix + ".weight", weight);
    if (bias) reg.add_param(prefix + ".bias", *bias);
}

LayerNorm::LayerNorm(std::size_t width) : gamma(make_param({width}, 1.0)), beta(make_param({width}, 0.0)) {}

void LayerNorm::collect(const std::string& prefix, Registry& reg) {
    reg.add_param(prefix + ".weight", gamma);
    reg.add_param(prefix + ".bias", beta);
}

BatchNorm::BatchNorm(std::size_t channels)
    : gamma(make_param({channels}, 1.0)), beta(make_param({channels}, 0.0)), state(channels) {}

void BatchNorm::collect(const std::string& prefix, Registry& reg) {
    reg.add_param(prefix + ".weight", gamma);
    reg.add_param(prefix + ".bias", beta);
    reg.add_buffer(prefix + ".running_mean", state.running_mean);
    reg.add_buffer(prefix + ".running_var", state.running_var);
}

Conv3d::Conv3d(std::size_t cin, std::size_t cout, ops::Triple kernel, ops::Triple stride_, ops::Triple padding_,
               bool with_bias, std::mt19937_64& rng)
    : stride(stride_), padding(padding_) {
    const std::size_t fan_in = cin * kernel[0] * kernel[1] * kernel[2];
    weight = init_fan_in({cout, cin, kernel[0], kernel[1], kernel[2]}, fan_in, rng);
    if (with_bias) bias = init_fan_in({cout}, fan_in, rng);
}

void Conv3d::collect(const std::string& prefix, Registry& reg) {
    reg.add_param(prefix + ".weight", weight);
    if (bias) reg.add_param(prefix + ".bias", *bias);
}

}  // namespace physmamba::nn
