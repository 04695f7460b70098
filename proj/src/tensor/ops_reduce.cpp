// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>

#include "physmamba/autograd.hpp"
#include "physmamba/errors.hpp"
#include "physmamba/ops.hpp"

namespace physmamba::ops {

using detail::make_result;
using detail::Node;

namespace {

// Maps every input element to its reduced output slot.
struct ReductionPlan {
    Shape out_shape;
    std::vector<std::size_t> target;  // per input element
    std::size_t group = 1;            // elements per output slot
};

ReductionPlan plan_reduction(const Shape& s, std::vector<std::size_t> axes, bool keepdim) {
    std::sort(axes.begin(), axes.end());
    axes.erase(std::unique(axes.begin(), axes.end()), axes.end());
    std::vector<bool> reduced(s.size(), false);
    for (std::size_t a : axes) {
        if (a >= s.size()) throw DimensionError("reduction axis out of range for " + shape_str(s));
        reduced[a] = true;
    }
    ReductionPlan plan;
    Shape kept;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (reduced[i]) {
            plan.group *= s[i];
            if (keepdim) plan.out_shape.push_back(1);
        } else {
            kept.push_back(s[i]);
            plan.out_shape.push_back(s[i]);
        }
    }
    const auto kept_strides = strides_of(kept);
    const std::size_t n = shape_numel(s);
    plan.target.resize(n);
    std::vector<std::size_t> idx(s.size(), 0);
    for (std::size_t flat = 0; flat < n; ++flat) {
        std::size_t t = 0;
        std::size_t k = 0;
        for (std::size_t a = 0; a < s.size(); ++a) {
            if (!reduced[a]) t += idx[a] * kept_strides[k++];
        }
        plan.target[flat] = t;
        for (std::size_t a = s.size(); a-- > 0;) {
            if (++idx[a] < s[a]) break;
            idx[a] = 0;
        }
    }
    return plan;
}

Tensor reduce_mean_or_sum(const char* name, const Tensor& x, const std::vector<std::size_t>& axes, bool keepdim,
                          bool average) {
    auto plan = std::make_shared<ReductionPlan>(plan_reduction(x.shape(), axes, keepdim));
    const double factor = average ? 1.0 / static_cast<double>(plan->group) : 1.0;
    const auto xs = x.data();
    std::vector<double> out(shape_numel(plan->out_shape), 0.0);
    for (std::size_t i = 0; i < xs.size(); ++i) out[plan->target[i]] += xs[i];
    if (average)
        for (double& v : out) v *= factor;
    return make_result(name, plan->out_shape, std::move(out), {x}, [plan, factor](Node& node, std::span<const double> g) {
        if (auto* gx = node.input_grad(0))
            for (std::size_t i = 0; i < gx->size(); ++i) (*gx)[i] += g[plan->target[i]] * factor;
    });
}

}  // namespace

Tensor sum(const Tensor& x) {
    const auto xs = x.data();
    double s = 0.0;
    for (double v : xs) s += v;
    return make_result("sum", Shape{}, {s}, {x}, [](Node& node, std::span<const double> g) {
        if (auto* gx = node.input_grad(0))
            for (double& v : *gx) v += g[0];
    });
}

Tensor sum(const Tensor& x, std::size_t axis, bool keepdim) {
    return reduce_mean_or_sum("sum_axis", x, {axis}, keepdim, false);
}

Tensor mean(const Tensor& x) {
    const auto xs = x.data();
    if (xs.empty()) throw ReductionError("mean of an empty tensor");
    double s = 0.0;
    for (double v : xs) s += v;
    const double inv = 1.0 / static_cast<double>(xs.size());
    return make_result("mean", Shape{}, {s * inv}, {x}, [inv](Node& node, std::span<const double> g) {
        if (auto* gx = node.input_grad(0))
            for (double& v : *gx) v += g[0] * inv;
    });
}

Tensor mean(const Tensor& x, const std::vector<std::size_t>& axes, bool keepdim) {
    return reduce_mean_or_sum("mean_axes", x, axes, keepdim, true);
}

Tensor std(const Tensor& x, double eps) {
    const auto xs = x.data();
    const std::size_t n = xs.size();
    if (n == 0) throw ReductionError("std of an empty tensor");
    if (n == 1 && eps == 0.0) throw ReductionError("std of a single element is degenerate without an eps guard");
    double mu = 0.0;
    for (double v : xs) mu += v;
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (double v : xs) var += (v - mu) * (v - mu);
    var /= static_cast<double>(n);
    const double sd = std::sqrt(var + eps);
    return make_result("std", Shape{}, {sd}, {x}, [mu, sd, n](Node& node, std::span<const double> g) {
        auto* gx = node.input_grad(0);
        if (!gx || sd == 0.0) return;
        const auto& xv = node.inputs[0]->data;
        const double k = g[0] / (static_cast<double>(n) * sd);
        for (std::size_t i = 0; i < n; ++i) (*gx)[i] += k * (xv[i] - mu);
    });
}

Tensor max(const Tensor& x) {
    const auto xs = x.data();
    if (xs.empty()) throw ReductionError("max of an empty tensor");
    const std::size_t arg = static_cast<std::size_t>(std::max_element(xs.begin(), xs.end()) - xs.begin());
    return make_result("max", Shape{}, {xs[arg]}, {x}, [arg](Node& node, std::span<const double> g) {
        if (auto* gx = node.input_grad(0)) (*gx)[arg] += g[0];
    });
}

Tensor batch_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, BatchNormState& state, bool training) {
    const Shape& s = x.shape();
    if (s.size() < 2) throw DimensionError("batch_norm needs a channel axis, got " + shape_str(s));
    const std::size_t batch = s[0];
    const std::size_t channels = s[1];
    std::size_t inner = 1;
    for (std::size_t i = 2; i < s.size(); ++i) inner *= s[i];
    if (gamma.numel() != channels || beta.numel() != channels || state.running_mean.size() != channels ||
        state.running_var.size() != channels) {
        throw DimensionError("batch_norm parameters do not match " + std::to_string(channels) + " channels");
    }
    const std::size_t count = batch * inner;
    const auto xs = x.data();
    const auto gs = gamma.data();
    const auto bs = beta.data();

    auto mean_c = std::make_shared<std::vector<double>>(channels);
    auto inv_std = std::make_shared<std::vector<double>>(channels);
    for (std::size_t c = 0; c < channels; ++c) {
        double mu;
        double var;
        if (training) {
            mu = 0.0;
            for (std::size_t b = 0; b < batch; ++b) {
                const double* p = xs.data() + (b * channels + c) * inner;
                for (std::size_t i = 0; i < inner; ++i) mu += p[i];
            }
            mu /= static_cast<double>(count);
            var = 0.0;
            for (std::size_t b = 0; b < batch; ++b) {
                const double* p = xs.data() + (b * channels + c) * inner;
                for (std::size_t i = 0; i < inner; ++i) var += (p[i] - mu) * (p[i] - mu);
            }
            var /= static_cast<double>(count);
            const double unbiased = count > 1 ? var * static_cast<double>(count) / static_cast<double>(count - 1) : var;
            state.running_mean[c] = (1.0 - state.momentum) * state.running_mean[c] + state.momentum * mu;
            state.running_var[c] = (1.0 - state.momentum) * state.running_var[c] + state.momentum * unbiased;
        } else {
            mu = state.running_mean[c];
            var = state.running_var[c];
        }
        (*mean_c)[c] = mu;
        (*inv_std)[c] = 1.0 / std::sqrt(var + state.eps);
    }

    std::vector<double> out(xs.size());
    for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t c = 0; c < channels; ++c) {
            const std::size_t base = (b * channels + c) * inner;
            const double mu = (*mean_c)[c];
            const double is = (*inv_std)[c];
            for (std::size_t i = 0; i < inner; ++i) out[base + i] = gs[c] * (xs[base + i] - mu) * is + bs[c];
        }

    auto bw = [=](Node& node, std::span<const double> g) {
        const auto& xv = node.inputs[0]->data;
        const auto& gam = node.inputs[1]->data;
        auto* gx = node.input_grad(0);
        auto* gg = node.input_grad(1);
        auto* gb = node.input_grad(2);
        for (std::size_t c = 0; c < channels; ++c) {
            const double mu = (*mean_c)[c];
            const double is = (*inv_std)[c];
            double sum_g = 0.0;
            double sum_gx = 0.0;
            for (std::size_t b = 0; b < batch; ++b) {
                const std::size_t base = (b * channels + c) * inner;
                for (std::size_t i = 0; i < inner; ++i) {
                    sum_g += g[base + i];
                    sum_gx += g[base + i] * (xv[base + i] - mu) * is;
                }
            }
            if (gg) (*gg)[c] += sum_gx;
            if (gb) (*gb)[c] += sum_g;
            if (!gx) continue;
            const double scale_c = gam[c] * is;
            const double inv_n = 1.0 / static_cast<double>(count);
            for (std::size_t b = 0; b < batch; ++b) {
                const std::size_t base = (b * channels + c) * inner;
                for (std::size_t i = 0; i < inner; ++i) {
                    if (training) {
                        const double xhat = (xv[base + i] - mu) * is;
                        (*gx)[base + i] += scale_c * (g[base + i] - sum_g * inv_n - xhat * sum_gx * inv_n);
                    } else {
                        (*gx)[base + i] += scale_c * g[base + i];
                    }
                }
            }
        }
    };
    return make_result("batch_norm", s, std::move(out), {x, gamma, beta}, bw);
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
    const Shape& s = x.shape();
    if (s.empty()) throw DimensionError("layer_norm on a scalar");
    const std::size_t width = s.back();
    if (gamma.numel() != width || beta.numel() != width) {
        throw DimensionError("layer_norm affine extent does not match last axis of " + shape_str(s));
    }
    const std::size_t rows = x.numel() / width;
    const auto xs = x.data();
    const auto gs = gamma.data();
    const auto bs = beta.data();
    // cache normalized values for the reverse pass
    auto xhat = std::make_shared<std::vector<double>>(xs.size());
    auto inv_std = std::make_shared<std::vector<double>>(rows);
    std::vector<double> out(xs.size());
    for (std::size_t r = 0; r < rows; ++r) {
        const double* p = xs.data() + r * width;
        double mu = 0.0;
        for (std::size_t i = 0; i < width; ++i) mu += p[i];
        mu /= static_cast<double>(width);
        double var = 0.0;
        for (std::size_t i = 0; i < width; ++i) var += (p[i] - mu) * (p[i] - mu);
        var /= static_cast<double>(width);
        const double is = 1.0 / std::sqrt(var + eps);
        (*inv_std)[r] = is;
        for (std::size_t i = 0; i < width; ++i) {
            const double h = (p[i] - mu) * is;
            (*xhat)[r * width + i] = h;
            out[r * width + i] = gs[i] * h + bs[i];
        }
    }
    auto bw = [=](Node& node, std::span<const double> g) {
        const auto& gam = node.inputs[1]->data;
        auto* gx = node.input_grad(0);
        auto* gg = node.input_grad(1);
        auto* gb = node.input_grad(2);
        const double inv_w = 1.0 / static_cast<double>(width);
        for (std::size_t r = 0; r < rows; ++r) {
            const double* gr = g.data() + r * width;
            const double* hr = xhat->data() + r * width;
            double sum_d = 0.0;
            double sum_dh = 0.0;
            for (std::size_t i = 0; i < width; ++i) {
                const double d = gr[i] * gam[i];
                sum_d += d;
                sum_dh += d * hr[i];
                if (gg) (*gg)[i] += gr[i] * hr[i];
                if (gb) (*gb)[i] += gr[i];
            }
            if (!gx) continue;
            const double is = (*inv_std)[r];
            for (std::size_t i = 0; i < width; ++i) {
                const double d = gr[i] * gam[i];
                (*gx)[r * width + i] += is * (d - sum_d * inv_w - hr[i] * sum_dh * inv_w);
            }
        }
    };
    return make_result("layer_norm", s, std::move(out), {x, gamma, beta}, bw);
}

Tensor maxpool3d(const Tensor& x, Triple kernel, Triple stride) {
    const Shape& s = x.shape();
    if (s.size() != 5) throw DimensionError("maxpool3d expects (B,C,T,H,W), got " + shape_str(s));
    for (std::size_t i = 0; i < 3; ++i) {
        if (stride[i] == 0 || kernel[i] == 0) throw ArgumentError("maxpool3d kernel and stride must be positive");
        if (kernel[i] > s[2 + i]) throw DimensionError("maxpool3d kernel exceeds input " + shape_str(s));
    }
    const std::size_t planes = s[0] * s[1];
    const std::size_t T = s[2], H = s[3], W = s[4];
    const std::size_t To = conv_out_extent(T, kernel[0], stride[0], 0);
    const std::size_t Ho = conv_out_extent(H, kernel[1], stride[1], 0);
    const std::size_t Wo = conv_out_extent(W, kernel[2], stride[2], 0);
    const Shape out_shape{s[0], s[1], To, Ho, Wo};
    const auto xs = x.data();
    std::vector<double> out(shape_numel(out_shape));
    auto argmax = std::make_shared<std::vector<std::size_t>>(out.size());
    std::size_t o = 0;
    for (std::size_t p = 0; p < planes; ++p)
        for (std::size_t t = 0; t < To; ++t)
            for (std::size_t h = 0; h < Ho; ++h)
                for (std::size_t w = 0; w < Wo; ++w, ++o) {
                    std::size_t best = 0;
                    double best_v = 0.0;
                    bool first = true;
                    for (std::size_t kt = 0; kt < kernel[0]; ++kt)
                        for (std::size_t kh = 0; kh < kernel[1]; ++kh)
                            for (std::size_t kw = 0; kw < kernel[2]; ++kw) {
                                const std::size_t idx = ((p * T + t * stride[0] + kt) * H + h * stride[1] + kh) * W +
                                                        w * stride[2] + kw;
                                if (first || xs[idx] > best_v) {
                                    best_v = xs[idx];
                                    best = idx;
                                    first = false;
                                }
                            }
                    out[o] = best_v;
                    (*argmax)[o] = best;
                }
    return make_result("maxpool3d", out_shape, std::move(out), {x}, [argmax](Node& node, std::span<const double> g) {
        if (auto* gx = node.input_grad(0))
            for (std::size_t i = 0; i < g.size(); ++i) (*gx)[(*argmax)[i]] += g[i];
    });
}

Tensor avgpool_spatial(const Tensor& x) {
    const Shape& s = x.shape();
    if (s.size() != 5) throw DimensionError("avgpool_spatial expects (B,C,T,H,W), got " + shape_str(s));
    return reduce_mean_or_sum("avgpool_spatial", x, {3, 4}, false, true);
}

}  // namespace physmamba::ops
