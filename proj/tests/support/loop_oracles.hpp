// SPDX-License-Identifier: Apache-2.0
#pragma once

// Naive loop implementations used as oracles. Deliberately written as direct
// summations over the definitions, with no shared code from the library.

#include <cmath>
#include <cstddef>
#include <vector>

#include "physmamba/tensor.hpp"

namespace oracle {

using physmamba::Tensor;

inline Tensor conv3d(const Tensor& x, const Tensor& w, const Tensor* bias, std::size_t st, std::size_t sh,
                     std::size_t sw, std::size_t pt, std::size_t ph, std::size_t pw) {
    const auto& xs = x.shape();
    const auto& ws = w.shape();
    const std::size_t B = xs[0], Ci = xs[1], T = xs[2], H = xs[3], W = xs[4];
    const std::size_t Co = ws[0], KT = ws[2], KH = ws[3], KW = ws[4];
    const std::size_t To = (T + 2 * pt - KT) / st + 1;
    const std::size_t Ho = (H + 2 * ph - KH) / sh + 1;
    const std::size_t Wo = (W + 2 * pw - KW) / sw + 1;
    Tensor y({B, Co, To, Ho, Wo});
    auto yd = y.data_mut();
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t co = 0; co < Co; ++co)
            for (std::size_t t = 0; t < To; ++t)
                for (std::size_t h = 0; h < Ho; ++h)
                    for (std::size_t v = 0; v < Wo; ++v) {
                        double s = bias ? bias->data()[co] : 0.0;
                        for (std::size_t ci = 0; ci < Ci; ++ci)
                            for (std::size_t a = 0; a < KT; ++a)
                                for (std::size_t c = 0; c < KH; ++c)
                                    for (std::size_t d = 0; d < KW; ++d) {
                                        const long ti = long(t * st + a) - long(pt);
                                        const long hi = long(h * sh + c) - long(ph);
                                        const long wi = long(v * sw + d) - long(pw);
                                        if (ti < 0 || hi < 0 || wi < 0 || ti >= long(T) || hi >= long(H) ||
                                            wi >= long(W))
                                            continue;
                                        s += w.at({co, ci, a, c, d}) *
                                             x.at({b, ci, std::size_t(ti), std::size_t(hi), std::size_t(wi)});
                                    }
                        yd[(((b * Co + co) * To + t) * Ho + h) * Wo + v] = s;
                    }
    return y;
}

inline Tensor linear(const Tensor& x, const Tensor& w, const Tensor* bias) {
    const std::size_t din = x.shape().back();
    const std::size_t dout = w.shape()[0];
    const std::size_t rows = x.numel() / din;
    auto shape = x.shape();
    shape.back() = dout;
    Tensor y(shape);
    auto yd = y.data_mut();
    const auto xd = x.data();
    const auto wd = w.data();
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t o = 0; o < dout; ++o) {
            double s = bias ? bias->data()[o] : 0.0;
            for (std::size_t i = 0; i < din; ++i) s += wd[o * din + i] * xd[r * din + i];
            yd[r * dout + o] = s;
        }
    return y;
}

inline Tensor maxpool3d(const Tensor& x, std::size_t kt, std::size_t kh, std::size_t kw, std::size_t st,
                        std::size_t sh, std::size_t sw) {
    const auto& s = x.shape();
    const std::size_t To = (s[2] - kt) / st + 1, Ho = (s[3] - kh) / sh + 1, Wo = (s[4] - kw) / sw + 1;
    Tensor y({s[0], s[1], To, Ho, Wo});
    auto yd = y.data_mut();
    std::size_t o = 0;
    for (std::size_t b = 0; b < s[0]; ++b)
        for (std::size_t c = 0; c < s[1]; ++c)
            for (std::size_t t = 0; t < To; ++t)
                for (std::size_t h = 0; h < Ho; ++h)
                    for (std::size_t w = 0; w < Wo; ++w) {
                        double m = -INFINITY;
                        for (std::size_t a = 0; a < kt; ++a)
                            for (std::size_t e = 0; e < kh; ++e)
                                for (std::size_t f = 0; f < kw; ++f)
                                    m = std::max(m, x.at({b, c, t * st + a, h * sh + e, w * sw + f}));
                        yd[o++] = m;
                    }
    return y;
}

/// Gather form of the transposed convolution: y[o] = sum_k x[(o + p - k) / s] w[k] when divisible.
inline Tensor conv_transpose1d(const Tensor& x, const Tensor& w, const Tensor* bias, std::size_t stride,
                               std::size_t padding) {
    const std::size_t B = x.shape()[0], Ci = x.shape()[1], T = x.shape()[2];
    const std::size_t Co = w.shape()[1], K = w.shape()[2];
    const std::size_t To = (T - 1) * stride + K - 2 * padding;
    Tensor y({B, Co, To});
    auto yd = y.data_mut();
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t co = 0; co < Co; ++co)
            for (std::size_t o = 0; o < To; ++o) {
                double s = bias ? bias->data()[co] : 0.0;
                for (std::size_t ci = 0; ci < Ci; ++ci)
                    for (std::size_t k = 0; k < K; ++k) {
                        const long num = long(o + padding) - long(k);
                        if (num < 0 || num % long(stride) != 0) continue;
                        const std::size_t i = std::size_t(num) / stride;
                        if (i >= T) continue;
                        s += x.at({b, ci, i}) * w.at({ci, co, k});
                    }
                yd[(b * Co + co) * To + o] = s;
            }
    return y;
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.numel(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
    return m;
}

inline double rel_diff(const Tensor& a, const Tensor& b) {
    double scale = 1e-300;
    for (double v : b.data()) scale = std::max(scale, std::abs(v));
    return max_abs_diff(a, b) / scale;
}

}  // namespace oracle
