// SPDX-License-Identifier: Apache-2.0
#include <cmath>

#include "physmamba/autograd.hpp"
#include "physmamba/errors.hpp"
#include "physmamba/ops.hpp"

namespace physmamba::ops {

using detail::make_result;
using detail::Node;

namespace {

double sigmoid_value(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double softplus_value(double x) {
    // log(1 + e^x) without overflow
    return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

const char* unary_name(Unary kind) {
    switch (kind) {
        case Unary::exp: return "exp";
        case Unary::log: return "log";
        case Unary::sqrt: return "sqrt";
        case Unary::square: return "square";
        case Unary::neg: return "neg";
        case Unary::relu: return "relu";
        case Unary::silu: return "silu";
        case Unary::sigmoid: return "sigmoid";
        case Unary::softplus: return "softplus";
        case Unary::tanh: return "tanh";
    }
    return "unary";
}

}  // namespace

Tensor unary(Unary kind, const Tensor& x) {
    const auto xs = x.data();
    std::vector<double> out(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double v = xs[i];
        switch (kind) {
            case Unary::exp: out[i] = std::exp(v); break;
            case Unary::log: out[i] = std::log(v); break;
            case Unary::sqrt: out[i] = std::sqrt(v); break;
            case Unary::square: out[i] = v * v; break;
            case Unary::neg: out[i] = -v; break;
            case Unary::relu: out[i] = v > 0 ? v : 0.0; break;
            case Unary::silu: out[i] = v * sigmoid_value(v); break;
            case Unary::sigmoid: out[i] = sigmoid_value(v); break;
            case Unary::softplus: out[i] = softplus_value(v); break;
            case Unary::tanh: out[i] = std::tanh(v); break;
        }
    }
    // derivative evaluated from input and output values
    auto bw = [kind](Node& node, std::span<const double> g) {
        auto* gx = node.input_grad(0);
        if (!gx) return;
        const auto& xv = node.inputs[0]->data;
        const auto out_impl = node.output.lock();
        const auto& yv = out_impl->data;
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double v = xv[i];
            double d = 0.0;
            switch (kind) {
                case Unary::exp: d = yv[i]; break;
                case Unary::log: d = 1.0 / v; break;
                case Unary::sqrt: d = 0.5 / yv[i]; break;
                case Unary::square: d = 2.0 * v; break;
                case Unary::neg: d = -1.0; break;
                case Unary::relu: d = v > 0 ? 1.0 : 0.0; break;
                case Unary::silu: {
                    const double s = sigmoid_value(v);
                    d = s * (1.0 + v * (1.0 - s));
                    break;
                }
                case Unary::sigmoid: d = yv[i] * (1.0 - yv[i]); break;
                case Unary::softplus: d = sigmoid_value(v); break;
                case Unary::tanh: d = 1.0 - yv[i] * yv[i]; break;
            }
            (*gx)[i] += g[i] * d;
        }
    };
    return make_result(unary_name(kind), x.shape(), std::move(out), {x}, bw);
}

Tensor binary(Binary kind, const Tensor& x, const Tensor& y) {
    const bool x_scalar = x.numel() == 1 && y.numel() != 1;
    const bool y_scalar = y.numel() == 1 && x.numel() != 1;
    if (!x_scalar && !y_scalar && x.shape() != y.shape()) {
        throw DimensionError("binary op on mismatched shapes " + shape_str(x.shape()) + " and " +
                             shape_str(y.shape()));
    }
    const Shape shape = x_scalar ? y.shape() : x.shape();
    const std::size_t n = shape_numel(shape);
    const auto xs = x.data();
    const auto ys = y.data();
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double a = xs[x_scalar ? 0 : i];
        const double b = ys[y_scalar ? 0 : i];
        switch (kind) {
            case Binary::add: out[i] = a + b; break;
            case Binary::sub: out[i] = a - b; break;
            case Binary::mul: out[i] = a * b; break;
            case Binary::div: out[i] = a / b; break;
        }
    }
    static constexpr const char* names[] = {"add", "sub", "mul", "div"};
    auto bw = [kind, x_scalar, y_scalar](Node& node, std::span<const double> g) {
        auto* gx = node.input_grad(0);
        auto* gy = node.input_grad(1);
        const auto& xv = node.inputs[0]->data;
        const auto& yv = node.inputs[1]->data;
        for (std::size_t i = 0; i < g.size(); ++i) {
            const std::size_t ix = x_scalar ? 0 : i;
            const std::size_t iy = y_scalar ? 0 : i;
            double dx = 0.0;
            double dy = 0.0;
            switch (kind) {
                case Binary::add: dx = 1.0; dy = 1.0; break;
                case Binary::sub: dx = 1.0; dy = -1.0; break;
                case Binary::mul: dx = yv[iy]; dy = xv[ix]; break;
                case Binary::div:
                    dx = 1.0 / yv[iy];
                    dy = -xv[ix] / (yv[iy] * yv[iy]);
                    break;
            }
            if (gx) (*gx)[ix] += g[i] * dx;
            if (gy) (*gy)[iy] += g[i] * dy;
        }
    };
    return make_result(names[static_cast<int>(kind)], shape, std::move(out), {x, y}, bw);
}

Tensor scale(const Tensor& x, double factor) {
    const auto xs = x.data();
    std::vector<double> out(xs.begin(), xs.end());
    for (double& v : out) v *= factor;
    return make_result("scale", x.shape(), std::move(out), {x}, [factor](Node& node, std::span<const double> g) {
        if (auto* gx = node.input_grad(0))
            for (std::size_t i = 0; i < g.size(); ++i) (*gx)[i] += g[i] * factor;
    });
}

Tensor add_scalar(const Tensor& x, double offset) {
    const auto xs = x.data();
    std::vector<double> out(xs.begin(), xs.end());
    for (double& v : out) v += offset;
    return make_result("add_scalar", x.shape(), std::move(out), {x}, [](Node& node, std::span<const double> g) {
        if (auto* gx = node.input_grad(0))
            for (std::size_t i = 0; i < g.size(); ++i) (*gx)[i] += g[i];
    });
}

Tensor flip(const Tensor& x, std::size_t axis) {
    const Shape& s = x.shape();
    if (axis >= s.size()) throw DimensionError("flip axis out of range for " + shape_str(s));
    std::size_t outer = 1;
    for (std::size_t i = 0; i < axis; ++i) outer *= s[i];
    std::size_t inner = 1;
    for (std::size_t i = axis + 1; i < s.size(); ++i) inner *= s[i];
    const std::size_t len = s[axis];

    // flip is its own inverse: the same index map serves both directions
    auto apply = [=](std::span<const double> src, std::vector<double>& dst, bool accumulate) {
        for (std::size_t o = 0; o < outer; ++o)
            for (std::size_t k = 0; k < len; ++k) {
                const double* from = src.data() + (o * len + (len - 1 - k)) * inner;
                double* to = dst.data() + (o * len + k) * inner;
                for (std::size_t i = 0; i < inner; ++i) to[i] = accumulate ? to[i] + from[i] : from[i];
            }
    };
    std::vector<double> out(x.numel());
    apply(x.data(), out, false);
    return make_result("flip", s, std::move(out), {x}, [apply](Node& node, std::span<const double> g) {
        if (auto* gx = node.input_grad(0)) apply(g, *gx, true);
    });
}

}  // namespace physmamba::ops
