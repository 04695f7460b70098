// SPDX-License-Identifier: Apache-2.0
#include <Eigen/Core>

#include "physmamba/autograd.hpp"
#include "physmamba/errors.hpp"
#include "physmamba/ops.hpp"

namespace physmamba::ops {

using detail::make_result;
using detail::Node;

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapRow = Eigen::Map<RowMat>;
using CMapRow = Eigen::Map<const RowMat>;
using StridedMap = Eigen::Map<RowMat, 0, Eigen::OuterStride<>>;
using CStridedMap = Eigen::Map<const RowMat, 0, Eigen::OuterStride<>>;

struct Conv3dGeometry {
    std::size_t B, Cin, T, H, W;
    std::size_t Cout, kt, kh, kw;
    Triple stride, padding;
    std::size_t To, Ho, Wo;

    std::size_t patch() const { return Cin * kt * kh * kw; }
    std::size_t plane() const { return Ho * Wo; }
};

// Lowers the receptive fields of one output time plane into a (patch x Ho*Wo) matrix.
void im2col_plane(const Conv3dGeometry& g, const double* x, std::size_t b, std::size_t to, RowMat& cols) {
    cols.resize(static_cast<Eigen::Index>(g.patch()), static_cast<Eigen::Index>(g.plane()));
    std::size_t row = 0;
    for (std::size_t ci = 0; ci < g.Cin; ++ci)
        for (std::size_t a = 0; a < g.kt; ++a)
            for (std::size_t c = 0; c < g.kh; ++c)
                for (std::size_t d = 0; d < g.kw; ++d, ++row) {
                    double* dst = cols.data() + row * g.plane();
                    const long t_in = static_cast<long>(to * g.stride[0] + a) - static_cast<long>(g.padding[0]);
                    if (t_in < 0 || t_in >= static_cast<long>(g.T)) {
                        std::fill(dst, dst + g.plane(), 0.0);
                        continue;
                    }
                    const double* src = x + ((b * g.Cin + ci) * g.T + static_cast<std::size_t>(t_in)) * g.H * g.W;
                    for (std::size_t ho = 0; ho < g.Ho; ++ho) {
                        const long h_in = static_cast<long>(ho * g.stride[1] + c) - static_cast<long>(g.padding[1]);
                        double* drow = dst + ho * g.Wo;
                        if (h_in < 0 || h_in >= static_cast<long>(g.H)) {
                            std::fill(drow, drow + g.Wo, 0.0);
                            continue;
                        }
                        const double* srow = src + static_cast<std::size_t>(h_in) * g.W;
                        for (std::size_t wo = 0; wo < g.Wo; ++wo) {
                            const long w_in = static_cast<long>(wo * g.stride[2] + d) - static_cast<long>(g.padding[2]);
                            drow[wo] = (w_in < 0 || w_in >= static_cast<long>(g.W)) ? 0.0 : srow[w_in];
                        }
                    }
                }
}

void col2im_plane_add(const Conv3dGeometry& g, const RowMat& cols, std::size_t b, std::size_t to, double* gx) {
    std::size_t row = 0;
    for (std::size_t ci = 0; ci < g.Cin; ++ci)
        for (std::size_t a = 0; a < g.kt; ++a)
            for (std::size_t c = 0; c < g.kh; ++c)
                for (std::size_t d = 0; d < g.kw; ++d, ++row) {
                    const long t_in = static_cast<long>(to * g.stride[0] + a) - static_cast<long>(g.padding[0]);
                    if (t_in < 0 || t_in >= static_cast<long>(g.T)) continue;
                    const double* src = cols.data() + row * g.plane();
                    double* dst = gx + ((b * g.Cin + ci) * g.T + static_cast<std::size_t>(t_in)) * g.H * g.W;
                    for (std::size_t ho = 0; ho < g.Ho; ++ho) {
                        const long h_in = static_cast<long>(ho * g.stride[1] + c) - static_cast<long>(g.padding[1]);
                        if (h_in < 0 || h_in >= static_cast<long>(g.H)) continue;
                        double* drow = dst + static_cast<std::size_t>(h_in) * g.W;
                        for (std::size_t wo = 0; wo < g.Wo; ++wo) {
                            const long w_in = static_cast<long>(wo * g.stride[2] + d) - static_cast<long>(g.padding[2]);
                            if (w_in >= 0 && w_in < static_cast<long>(g.W)) drow[w_in] += src[ho * g.Wo + wo];
                        }
                    }
                }
}

}  // namespace

std::size_t conv_out_extent(std::size_t in, std::size_t kernel, std::size_t stride, std::size_t padding) {
    if (stride == 0) throw ArgumentError("stride must be at least 1");
    if (in + 2 * padding < kernel) {
        throw DimensionError("kernel " + std::to_string(kernel) + " does not fit padded extent " +
                             std::to_string(in + 2 * padding));
    }
    return (in + 2 * padding - kernel) / stride + 1;
}

Tensor conv3d(const Tensor& x, const Tensor& w, const std::optional<Tensor>& bias, Triple stride, Triple padding) {
    const Shape& xs = x.shape();
    const Shape& ws = w.shape();
    if (xs.size() != 5) throw DimensionError("conv3d input must be (B,Cin,T,H,W), got " + shape_str(xs));
    if (ws.size() != 5) throw DimensionError("conv3d weight must be (Cout,Cin,kt,kh,kw), got " + shape_str(ws));
    if (ws[1] != xs[1]) {
        throw DimensionError("conv3d channel mismatch: input " + shape_str(xs) + ", weight " + shape_str(ws));
    }
    if (bias && bias->numel() != ws[0]) throw DimensionError("conv3d bias extent mismatch");

    Conv3dGeometry g{xs[0], xs[1], xs[2], xs[3], xs[4], ws[0], ws[2], ws[3], ws[4], stride, padding, 0, 0, 0};
    g.To = conv_out_extent(g.T, g.kt, stride[0], padding[0]);
    g.Ho = conv_out_extent(g.H, g.kh, stride[1], padding[1]);
    g.Wo = conv_out_extent(g.W, g.kw, stride[2], padding[2]);
    const Shape out_shape{g.B, g.Cout, g.To, g.Ho, g.Wo};

    std::vector<double> out(shape_numel(out_shape));
    const auto xd = x.data();
    const auto wd = w.data();
    const CMapRow wmat(wd.data(), static_cast<Eigen::Index>(g.Cout), static_cast<Eigen::Index>(g.patch()));
    const Eigen::Index co_stride = static_cast<Eigen::Index>(g.To * g.plane());
    RowMat cols;
    for (std::size_t b = 0; b < g.B; ++b)
        for (std::size_t to = 0; to < g.To; ++to) {
            im2col_plane(g, xd.data(), b, to, cols);
            StridedMap dst(out.data() + (b * g.Cout * g.To + to) * g.plane(), static_cast<Eigen::Index>(g.Cout),
                           static_cast<Eigen::Index>(g.plane()), Eigen::OuterStride<>(co_stride));
            dst.noalias() = wmat * cols;
            if (bias) {
                const auto bd = bias->data();
                for (std::size_t co = 0; co < g.Cout; ++co) dst.row(static_cast<Eigen::Index>(co)).array() += bd[co];
            }
        }

    std::vector<Tensor> inputs{x, w};
    if (bias) inputs.push_back(*bias);
    const bool has_bias = bias.has_value();
    auto bw = [g, has_bias](Node& node, std::span<const double> grad) {
        auto* gx = node.input_grad(0);
        auto* gw = node.input_grad(1);
        auto* gb = has_bias ? node.input_grad(2) : nullptr;
        const auto& xv = node.inputs[0]->data;
        const auto& wv = node.inputs[1]->data;
        const CMapRow wmat(wv.data(), static_cast<Eigen::Index>(g.Cout), static_cast<Eigen::Index>(g.patch()));
        const Eigen::Index co_stride = static_cast<Eigen::Index>(g.To * g.plane());
        RowMat cols;
        RowMat dcols;
        RowMat dw = RowMat::Zero(static_cast<Eigen::Index>(g.Cout), static_cast<Eigen::Index>(g.patch()));
        for (std::size_t b = 0; b < g.B; ++b)
            for (std::size_t to = 0; to < g.To; ++to) {
                const CStridedMap gout(grad.data() + (b * g.Cout * g.To + to) * g.plane(),
                                       static_cast<Eigen::Index>(g.Cout), static_cast<Eigen::Index>(g.plane()),
                                       Eigen::OuterStride<>(co_stride));
                if (gb)
                    for (std::size_t co = 0; co < g.Cout; ++co) (*gb)[co] += gout.row(static_cast<Eigen::Index>(co)).sum();
                if (gw) {
                    im2col_plane(g, xv.data(), b, to, cols);
                    dw.noalias() += gout * cols.transpose();
                }
                if (gx) {
                    dcols.noalias() = wmat.transpose() * gout;
                    col2im_plane_add(g, dcols, b, to, gx->data());
                }
            }
        if (gw) {
            for (std::size_t i = 0; i < gw->size(); ++i) (*gw)[i] += dw.data()[i];
        }
    };
    return make_result("conv3d", out_shape, std::move(out), std::move(inputs), bw);
}

Tensor conv1d_depthwise_causal(const Tensor& x, const Tensor& w, const std::optional<Tensor>& bias) {
    const Shape& s = x.shape();
    if (s.size() != 3) throw DimensionError("conv1d_depthwise_causal expects (B,L,D), got " + shape_str(s));
    const std::size_t B = s[0], L = s[1], D = s[2];
    if (w.dim() != 2 || w.size(0) != D) {
        throw DimensionError("depthwise kernel must be (D,K) with D=" + std::to_string(D) + ", got " +
                             shape_str(w.shape()));
    }
    if (bias && bias->numel() != D) throw DimensionError("depthwise bias extent mismatch");
    const std::size_t K = w.size(1);
    const auto xd = x.data();
    const auto wd = w.data();
    std::vector<double> out(xd.size());
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t l = 0; l < L; ++l) {
            double* y = out.data() + (b * L + l) * D;
            if (bias) {
                const auto bd = bias->data();
                for (std::size_t d = 0; d < D; ++d) y[d] = bd[d];
            }
            for (std::size_t k = 0; k < K; ++k) {
                // tap k reads x[l - (K-1) + k]
                if (l + k < K - 1) continue;
                const double* xin = xd.data() + (b * L + l + k - (K - 1)) * D;
                for (std::size_t d = 0; d < D; ++d) y[d] += wd[d * K + k] * xin[d];
            }
        }
    std::vector<Tensor> inputs{x, w};
    if (bias) inputs.push_back(*bias);
    const bool has_bias = bias.has_value();
    auto bw = [=](Node& node, std::span<const double> g) {
        auto* gx = node.input_grad(0);
        auto* gw = node.input_grad(1);
        auto* gb = has_bias ? node.input_grad(2) : nullptr;
        const auto& xv = node.inputs[0]->data;
        const auto& wv = node.inputs[1]->data;
        for (std::size_t b = 0; b < B; ++b)
            for (std::size_t l = 0; l < L; ++l) {
                const double* gy = g.data() + (b * L + l) * D;
                if (gb)
                    for (std::size_t d = 0; d < D; ++d) (*gb)[d] += gy[d];
                for (std::size_t k = 0; k < K; ++k) {
                    if (l + k < K - 1) continue;
                    const std::size_t src = (b * L + l + k - (K - 1)) * D;
                    for (std::size_t d = 0; d < D; ++d) {
                        if (gw) (*gw)[d * K + k] += gy[d] * xv[src + d];
                        if (gx) (*gx)[src + d] += gy[d] * wv[d * K + k];
                    }
                }
            }
    };
    return make_result("conv1d_depthwise", s, std::move(out), std::move(inputs), bw);
}

Tensor conv_transpose1d(const Tensor& x, const Tensor& w, const std::optional<Tensor>& bias, std::size_t stride,
                        std::size_t padding) {
    const Shape& s = x.shape();
    if (s.size() != 3) throw DimensionError("conv_transpose1d expects (B,Cin,T), got " + shape_str(s));
    if (w.dim() != 3 || w.size(0) != s[1]) {
        throw DimensionError("conv_transpose1d weight must be (Cin,Cout,K), got " + shape_str(w.shape()));
    }
    if (stride == 0) throw ArgumentError("stride must be at least 1");
    const std::size_t B = s[0], Cin = s[1], T = s[2];
    const std::size_t Cout = w.size(1), K = w.size(2);
    if ((T - 1) * stride + K < 2 * padding + 1) throw DimensionError("conv_transpose1d output would be empty");
    const std::size_t To = (T - 1) * stride + K - 2 * padding;
    if (bias && bias->numel() != Cout) throw DimensionError("conv_transpose1d bias extent mismatch");
    const auto xd = x.data();
    const auto wd = w.data();
    std::vector<double> out(B * Cout * To, 0.0);
    for (std::size_t b = 0; b < B; ++b) {
        if (bias)
            for (std::size_t co = 0; co < Cout; ++co)
                std::fill_n(out.data() + (b * Cout + co) * To, To, bias->data()[co]);
        for (std::size_t ci = 0; ci < Cin; ++ci)
            for (std::size_t i = 0; i < T; ++i) {
                const double xv = xd[(b * Cin + ci) * T + i];
                for (std::size_t k = 0; k < K; ++k) {
                    const long o = static_cast<long>(i * stride + k) - static_cast<long>(padding);
                    if (o < 0 || o >= static_cast<long>(To)) continue;
                    for (std::size_t co = 0; co < Cout; ++co)
                        out[(b * Cout + co) * To + static_cast<std::size_t>(o)] += xv * wd[(ci * Cout + co) * K + k];
                }
            }
    }
    std::vector<Tensor> inputs{x, w};
    if (bias) inputs.push_back(*bias);
    const bool has_bias = bias.has_value();
    auto bw = [=](Node& node, std::span<const double> g) {
        auto* gx = node.input_grad(0);
        auto* gw = node.input_grad(1);
        auto* gb = has_bias ? node.input_grad(2) : nullptr;
        const auto& xv = node.inputs[0]->data;
        const auto& wv = node.inputs[1]->data;
        for (std::size_t b = 0; b < B; ++b) {
            if (gb)
                for (std::size_t co = 0; co < Cout; ++co)
                    for (std::size_t o = 0; o < To; ++o) (*gb)[co] += g[(b * Cout + co) * To + o];
            for (std::size_t ci = 0; ci < Cin; ++ci)
                for (std::size_t i = 0; i < T; ++i) {
                    const std::size_t xi = (b * Cin + ci) * T + i;
                    for (std::size_t k = 0; k < K; ++k) {
                        const long o = static_cast<long>(i * stride + k) - static_cast<long>(padding);
                        if (o < 0 || o >= static_cast<long>(To)) continue;
                        for (std::size_t co = 0; co < Cout; ++co) {
                            const double go = g[(b * Cout + co) * To + static_cast<std::size_t>(o)];
                            if (gx) (*gx)[xi] += go * wv[(ci * Cout + co) * K + k];
                            if (gw) (*gw)[(ci * Cout + co) * K + k] += go * xv[xi];
                        }
                    }
                }
        }
    };
    return make_result("conv_transpose1d", Shape{B, Cout, To}, std::move(out), std::move(inputs), bw);
}

Tensor linear(const Tensor& x, const Tensor& w, const std::optional<Tensor>& bias) {
    const Shape& s = x.shape();
    if (s.empty()) throw DimensionError("linear on a scalar");
    if (w.dim() != 2 || w.size(1) != s.back()) {
        throw DimensionError("linear weight " + shape_str(w.shape()) + " does not accept input " + shape_str(s));
    }
    const std::size_t din = s.back();
    const std::size_t dout = w.size(0);
    if (bias && bias->numel() != dout) throw DimensionError("linear bias extent mismatch");
    const std::size_t rows = x.numel() / din;
    Shape out_shape = s;
    out_shape.back() = dout;
    std::vector<double> out(rows * dout);
    const auto R = static_cast<Eigen::Index>(rows);
    const auto I = static_cast<Eigen::Index>(din);
    const auto O = static_cast<Eigen::Index>(dout);
    {
        const CMapRow xm(x.data().data(), R, I);
        const CMapRow wm(w.data().data(), O, I);
        MapRow ym(out.data(), R, O);
        ym.noalias() = xm * wm.transpose();
        if (bias) {
            const Eigen::Map<const Eigen::RowVectorXd> bv(bias->data().data(), O);
            ym.rowwise() += bv;
        }
    }
    std::vector<Tensor> inputs{x, w};
    if (bias) inputs.push_back(*bias);
    const bool has_bias = bias.has_value();
    auto bw = [R, I, O, has_bias](Node& node, std::span<const double> g) {
        auto* gx = node.input_grad(0);
        auto* gw = node.input_grad(1);
        auto* gb = has_bias ? node.input_grad(2) : nullptr;
        const CMapRow gm(g.data(), R, O);
        if (gx) {
            const CMapRow wm(node.inputs[1]->data.data(), O, I);
            MapRow(gx->data(), R, I).noalias() += gm * wm;
        }
        if (gw) {
            const CMapRow xm(node.inputs[0]->data.data(), R, I);
            MapRow(gw->data(), O, I).noalias() += gm.transpose() * xm;
        }
        if (gb) Eigen::Map<Eigen::RowVectorXd>(gb->data(), O) += gm.colwise().sum();
    };
    return make_result("linear", out_shape, std::move(out), std::move(inputs), bw);
}

}  // namespace physmamba::ops
