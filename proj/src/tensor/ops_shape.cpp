// SPDX-License-Identifier: Apache-2.0
#include <numeric>

#include "physmamba/autograd.hpp"
#include "physmamba/errors.hpp"
#include "physmamba/ops.hpp"

namespace physmamba::ops {

using detail::make_result;
using detail::Node;

Tensor reshape(const Tensor& x, Shape shape) {
    if (shape_numel(shape) != x.numel()) {
        throw DimensionError("cannot reshape " + shape_str(x.shape()) + " to " + shape_str(shape));
    }
    const auto xs = x.data();
    return make_result("reshape", std::move(shape), std::vector<double>(xs.begin(), xs.end()), {x},
                       [](Node& node, std::span<const double> g) {
                           if (auto* gx = node.input_grad(0))
                               for (std::size_t i = 0; i < g.size(); ++i) (*gx)[i] += g[i];
                       });
}

Tensor permute(const Tensor& x, const std::vector<std::size_t>& order) {
    const Shape& s = x.shape();
    const std::size_t rank = s.size();
    if (order.size() != rank) throw DimensionError("permute order rank mismatch for " + shape_str(s));
    std::vector<bool> seen(rank, false);
    for (std::size_t a : order) {
        if (a >= rank || seen[a]) throw DimensionError("invalid permutation for " + shape_str(s));
        seen[a] = true;
    }
    Shape out_shape(rank);
    for (std::size_t i = 0; i < rank; ++i) out_shape[i] = s[order[i]];
    const auto in_strides = strides_of(s);
    // source offset for each output element, built once and shared with backward
    std::vector<std::size_t> src_stride(rank);
    for (std::size_t i = 0; i < rank; ++i) src_stride[i] = in_strides[order[i]];

    const std::size_t n = x.numel();
    auto index_map = std::make_shared<std::vector<std::size_t>>(n);
    std::vector<std::size_t> idx(rank, 0);
    std::size_t src = 0;
    for (std::size_t flat = 0; flat < n; ++flat) {
        (*index_map)[flat] = src;
        for (std::size_t a = rank; a-- > 0;) {
            ++idx[a];
            src += src_stride[a];
            if (idx[a] < out_shape[a]) break;
            src -= src_stride[a] * idx[a];
            idx[a] = 0;
        }
    }
    const auto xs = x.data();
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = xs[(*index_map)[i]];
    return make_result("permute", out_shape, std::move(out), {x}, [index_map](Node& node, std::span<const double> g) {
        if (auto* gx = node.input_grad(0))
            for (std::size_t i = 0; i < g.size(); ++i) (*gx)[(*index_map)[i]] += g[i];
    });
}

Tensor slice(const Tensor& x, std::size_t axis, std::size_t start, std::size_t length) {
    const Shape& s = x.shape();
    if (axis >= s.size() || start + length > s[axis]) {
        throw DimensionError("slice [" + std::to_string(start) + "," + std::to_string(start + length) +
                             ") out of range on axis " + std::to_string(axis) + " of " + shape_str(s));
    }
    std::size_t outer = 1;
    for (std::size_t i = 0; i < axis; ++i) outer *= s[i];
    std::size_t inner = 1;
    for (std::size_t i = axis + 1; i < s.size(); ++i) inner *= s[i];
    const std::size_t len = s[axis];
    Shape out_shape = s;
    out_shape[axis] = length;
    const auto xs = x.data();
    std::vector<double> out(outer * length * inner);
    for (std::size_t o = 0; o < outer; ++o) {
        const double* from = xs.data() + (o * len + start) * inner;
        std::copy(from, from + length * inner, out.data() + o * length * inner);
    }
    return make_result("slice", out_shape, std::move(out), {x},
                       [=](Node& node, std::span<const double> g) {
                           auto* gx = node.input_grad(0);
                           if (!gx) return;
                           for (std::size_t o = 0; o < outer; ++o) {
                               double* to = gx->data() + (o * len + start) * inner;
                               const double* from = g.data() + o * length * inner;
                               for (std::size_t i = 0; i < length * inner; ++i) to[i] += from[i];
                           }
                       });
}

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis) {
    if (parts.empty()) throw ArgumentError("concat of zero tensors");
    const Shape& first = parts.front().shape();
    if (axis >= first.size()) throw DimensionError("concat axis out of range for " + shape_str(first));
    Shape out_shape = first;
    out_shape[axis] = 0;
    std::vector<std::size_t> lengths;
    for (const Tensor& p : parts) {
        const Shape& s = p.shape();
        if (s.size() != first.size()) throw DimensionError("concat rank mismatch");
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (i != axis && s[i] != first[i]) {
                throw DimensionError("concat extent mismatch: " + shape_str(first) + " vs " + shape_str(s));
            }
        }
        lengths.push_back(s[axis]);
        out_shape[axis] += s[axis];
    }
    std::size_t outer = 1;
    for (std::size_t i = 0; i < axis; ++i) outer *= first[i];
    std::size_t inner = 1;
    for (std::size_t i = axis + 1; i < first.size(); ++i) inner *= first[i];
    const std::size_t total = out_shape[axis];

    std::vector<double> out(shape_numel(out_shape));
    std::size_t offset = 0;
    for (std::size_t p = 0; p < parts.size(); ++p) {
        const auto src = parts[p].data();
        const std::size_t chunk = lengths[p] * inner;
        for (std::size_t o = 0; o < outer; ++o) {
            std::copy(src.data() + o * chunk, src.data() + (o + 1) * chunk, out.data() + (o * total + offset) * inner);
        }
        offset += lengths[p];
    }
    return make_result("concat", out_shape, std::move(out), parts,
                       [=](Node& node, std::span<const double> g) {
                           std::size_t off = 0;
                           for (std::size_t p = 0; p < lengths.size(); ++p) {
                               const std::size_t chunk = lengths[p] * inner;
                               if (auto* gp = node.input_grad(p)) {
                                   for (std::size_t o = 0; o < outer; ++o) {
                                       const double* from = g.data() + (o * total + off) * inner;
                                       double* to = gp->data() + o * chunk;
                                       for (std::size_t i = 0; i < chunk; ++i) to[i] += from[i];
                                   }
                               }
                               off += lengths[p];
                           }
                       });
}

Tensor broadcast_to(const Tensor& x, const Shape& shape) {
    const Shape& s = x.shape();
    if (s.size() != shape.size()) {
        throw DimensionError("broadcast_to rank mismatch: " + shape_str(s) + " -> " + shape_str(shape));
    }
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] != shape[i] && s[i] != 1) {
            throw DimensionError("cannot broadcast " + shape_str(s) + " to " + shape_str(shape));
        }
    }
    const auto in_strides = strides_of(s);
    const std::size_t rank = s.size();
    const std::size_t n = shape_numel(shape);
    auto index_map = std::make_shared<std::vector<std::size_t>>(n);
    std::vector<std::size_t> idx(rank, 0);
    for (std::size_t flat = 0; flat < n; ++flat) {
        std::size_t src = 0;
        for (std::size_t a = 0; a < rank; ++a) src += (s[a] == 1 ? 0 : idx[a]) * in_strides[a];
        (*index_map)[flat] = src;
        for (std::size_t a = rank; a-- > 0;) {
            if (++idx[a] < shape[a]) break;
            idx[a] = 0;
        }
    }
    const auto xs = x.data();
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = xs[(*index_map)[i]];
    return make_result("broadcast_to", shape, std::move(out), {x}, [index_map](Node& node, std::span<const double> g) {
        if (auto* gx = node.input_grad(0))
            for (std::size_t i = 0; i < g.size(); ++i) (*gx)[(*index_map)[i]] += g[i];
    });
}

Tensor repeat_interleave(const Tensor& x, std::size_t axis, std::size_t factor) {
    const Shape& s = x.shape();
    if (axis >= s.size()) throw DimensionError("repeat axis out of range for " + shape_str(s));
    if (factor == 0) throw ArgumentError("repeat factor must be positive");
    std::size_t outer = 1;
    for (std::size_t i = 0; i < axis; ++i) outer *= s[i];
    std::size_t inner = 1;
    for (std::size_t i = axis + 1; i < s.size(); ++i) inner *= s[i];
    const std::size_t len = s[axis];
    Shape out_shape = s;
    out_shape[axis] = len * factor;
    const auto xs = x.data();
    std::vector<double> out(shape_numel(out_shape));
    for (std::size_t o = 0; o < outer; ++o)
        for (std::size_t k = 0; k < len * factor; ++k) {
            const double* from = xs.data() + (o * len + k / factor) * inner;
            std::copy(from, from + inner, out.data() + (o * len * factor + k) * inner);
        }
    return make_result("repeat_interleave", out_shape, std::move(out), {x},
                       [=](Node& node, std::span<const double> g) {
                           auto* gx = node.input_grad(0);
                           if (!gx) return;
                           for (std::size_t o = 0; o < outer; ++o)
                               for (std::size_t k = 0; k < len * factor; ++k) {
                                   const double* from = g.data() + (o * len * factor + k) * inner;
                                   double* to = gx->data() + (o * len + k / factor) * inner;
                                   for (std::size_t i = 0; i < inner; ++i) to[i] += from[i];
                               }
                       });
}

}  // namespace physmamba::ops
