// SPDX-License-Identifier: Apache-2.0
#include <cmath>

#include "physmamba/autograd.hpp"
#include "physmamba/errors.hpp"
#include "physmamba/ops.hpp"
#include "physmamba/ssm.hpp"

namespace physmamba::ssm {

double zoh_transition(double delta, double a) { return std::exp(delta * a); }

double zoh_input(double delta, double a, double b) {
    const double x = delta * a;
    if (std::abs(x) < kZohSeriesThreshold) return delta * b * (1.0 + 0.5 * x);
    return std::expm1(x) / a * b;
}

namespace {

void require_positive(double delta) {
    if (!(delta > 0.0) || !std::isfinite(delta)) {
        throw ParameterizationError("step size delta must be positive and finite, got " + std::to_string(delta));
    }
}

// Sequential recurrence shared by the time-invariant and selective layouts; a
// zero time stride makes the parameters time-invariant.
struct ScanLayout {
    std::size_t L, D, N;
    std::size_t ab_t_stride;  // stride of a_bar/b_bar along t (0 or D*N)
    std::size_t c_t_stride;   // stride of C along t (0 or N)
    std::size_t c_d_stride;   // stride of C along d (0 or N)
};

std::vector<double> run_scan(const ScanLayout& s, const double* a_bar, const double* b_bar, const double* c,
                             const double* x) {
    std::vector<double> y(s.L * s.D, 0.0);
    std::vector<double> h(s.D * s.N, 0.0);
    for (std::size_t t = 0; t < s.L; ++t) {
        const double* at = a_bar + t * s.ab_t_stride;
        const double* bt = b_bar + t * s.ab_t_stride;
        const double* ct = c + t * s.c_t_stride;
        for (std::size_t d = 0; d < s.D; ++d) {
            const double xv = x[t * s.D + d];
            double* hd = h.data() + d * s.N;
            const double* cd = ct + d * s.c_d_stride;
            double acc = 0.0;
            for (std::size_t n = 0; n < s.N; ++n) {
                hd[n] = at[d * s.N + n] * hd[n] + bt[d * s.N + n] * xv;
                acc += cd[n] * hd[n];
            }
            if (!std::isfinite(acc)) {
                throw NumericError("non-finite scan state at step " + std::to_string(t) + ", channel " +
                                   std::to_string(d));
            }
            y[t * s.D + d] = acc;
        }
    }
    return y;
}

}  // namespace

Discretized discretize_zoh(const Tensor& A, const Tensor& B, const Tensor& delta) {
    if (A.dim() != 2) throw DimensionError("A must be (D,N), got " + shape_str(A.shape()));
    const std::size_t D = A.size(0);
    const std::size_t N = A.size(1);

    std::size_t L = 0;
    bool b_per_token = false;
    if (B.dim() == 2) {
        if (B.size(1) != N) throw DimensionError("B must be (L,N) with N=" + std::to_string(N));
        L = B.size(0);
        b_per_token = true;
    } else if (B.dim() != 1 || B.size(0) != N) {
        throw DimensionError("B must be (N) or (L,N), got " + shape_str(B.shape()));
    }

    enum class DeltaKind { scalar, channel, token };
    DeltaKind dk;
    if (delta.numel() == 1 && delta.dim() <= 1) {
        dk = DeltaKind::scalar;
    } else if (delta.dim() == 1 && delta.size(0) == D) {
        dk = DeltaKind::channel;
    } else if (delta.dim() == 2 && delta.size(1) == D) {
        dk = DeltaKind::token;
        if (b_per_token && delta.size(0) != L) throw DimensionError("delta and B disagree on sequence length");
        L = delta.size(0);
    } else {
        throw DimensionError("delta must be scalar, (D) or (L,D), got " + shape_str(delta.shape()));
    }
    for (double v : delta.data()) require_positive(v);

    const auto ad = A.data();
    const auto bd = B.data();
    const auto dd = delta.data();
    auto delta_at = [&](std::size_t t, std::size_t d) {
        switch (dk) {
            case DeltaKind::scalar: return dd[0];
            case DeltaKind::channel: return dd[d];
            case DeltaKind::token: return dd[t * D + d];
        }
        return dd[0];
    };

    const bool selective = b_per_token || dk == DeltaKind::token;
    const std::size_t steps = selective ? L : 1;
    Shape out_shape = selective ? Shape{L, D, N} : Shape{D, N};
    Tensor a_bar(out_shape);
    Tensor b_bar(out_shape);
    auto abar = a_bar.data_mut();
    auto bbar = b_bar.data_mut();
    for (std::size_t t = 0; t < steps; ++t)
        for (std::size_t d = 0; d < D; ++d) {
            const double dl = delta_at(t, d);
            for (std::size_t n = 0; n < N; ++n) {
                const double a = ad[d * N + n];
                const double b = b_per_token ? bd[t * N + n] : bd[n];
                const std::size_t i = (t * D + d) * N + n;
                abar[i] = zoh_transition(dl, a);
                bbar[i] = zoh_input(dl, a, b);
            }
        }
    return {a_bar, b_bar};
}

Tensor scan_recurrent(const Tensor& a_bar, const Tensor& b_bar, const Tensor& C, const Tensor& x) {
    if (x.dim() != 2) throw DimensionError("x must be (L,D), got " + shape_str(x.shape()));
    if (a_bar.shape() != b_bar.shape()) throw DimensionError("a_bar and b_bar shapes differ");
    const std::size_t L = x.size(0);
    const std::size_t D = x.size(1);
    ScanLayout s{L, D, 0, 0, 0, 0};
    if (a_bar.dim() == 2) {
        if (a_bar.size(0) != D) throw DimensionError("a_bar channel extent does not match x");
        s.N = a_bar.size(1);
        if (C.dim() == 1 && C.size(0) == s.N) {
            s.c_d_stride = 0;
        } else if (C.dim() == 2 && C.size(0) == D && C.size(1) == s.N) {
            s.c_d_stride = s.N;
        } else {
            throw DimensionError("time-invariant C must be (N) or (D,N), got " + shape_str(C.shape()));
        }
    } else if (a_bar.dim() == 3) {
        if (a_bar.size(0) != L || a_bar.size(1) != D) throw DimensionError("a_bar must be (L,D,N) matching x");
        s.N = a_bar.size(2);
        if (C.dim() != 2 || C.size(0) != L || C.size(1) != s.N) {
            throw DimensionError("selective C must be (L,N), got " + shape_str(C.shape()));
        }
        s.ab_t_stride = D * s.N;
        s.c_t_stride = s.N;
    } else {
        throw DimensionError("a_bar must be (D,N) or (L,D,N), got " + shape_str(a_bar.shape()));
    }
    auto y = run_scan(s, a_bar.data().data(), b_bar.data().data(), C.data().data(), x.data().data());
    return Tensor({L, D}, std::move(y));
}

Tensor lti_kernel(const Tensor& a_bar, const Tensor& b_bar, const Tensor& C, std::size_t length) {
    if (a_bar.dim() != 2) throw ModeError("convolutional mode needs time-invariant parameters; got " + shape_str(a_bar.shape()));
    if (a_bar.shape() != b_bar.shape()) throw DimensionError("a_bar and b_bar shapes differ");
    const std::size_t D = a_bar.size(0);
    const std::size_t N = a_bar.size(1);
    std::size_t c_d_stride;
    if (C.dim() == 1 && C.size(0) == N) {
        c_d_stride = 0;
    } else if (C.dim() == 2 && C.size(0) == D && C.size(1) == N) {
        c_d_stride = N;
    } else {
        throw DimensionError("time-invariant C must be (N) or (D,N), got " + shape_str(C.shape()));
    }
    const auto ad = a_bar.data();
    const auto bd = b_bar.data();
    const auto cd = C.data();
    Tensor K({length, D});
    auto kd = K.data_mut();
    std::vector<double> power(N);
    for (std::size_t d = 0; d < D; ++d) {
        // power[n] tracks a_bar^k * b_bar
        for (std::size_t n = 0; n < N; ++n) power[n] = bd[d * N + n];
        for (std::size_t k = 0; k < length; ++k) {
            double acc = 0.0;
            for (std::size_t n = 0; n < N; ++n) {
                acc += cd[d * c_d_stride + n] * power[n];
                power[n] *= ad[d * N + n];
            }
            kd[k * D + d] = acc;
        }
    }
    return K;
}

Tensor scan_convolutional(const Tensor& a_bar, const Tensor& b_bar, const Tensor& C, const Tensor& x) {
    if (a_bar.dim() != 2) {
        throw ModeError("convolutional scan is only valid for time-invariant parameters; got per-token " +
                        shape_str(a_bar.shape()));
    }
    if (x.dim() != 2 || x.size(1) != a_bar.size(0)) throw DimensionError("x must be (L,D) matching a_bar");
    const std::size_t L = x.size(0);
    const std::size_t D = x.size(1);
    const Tensor K = lti_kernel(a_bar, b_bar, C, L);
    const auto kd = K.data();
    const auto xd = x.data();
    Tensor y({L, D});
    auto yd = y.data_mut();
    for (std::size_t t = 0; t < L; ++t)
        for (std::size_t d = 0; d < D; ++d) {
            double acc = 0.0;
            for (std::size_t k = 0; k <= t; ++k) acc += kd[k * D + d] * xd[(t - k) * D + d];
            yd[t * D + d] = acc;
        }
    return y;
}

Tensor selective_scan(const SSMParams& params, const Tensor& x) {
    if (x.dim() != 2 || x.size(1) != params.channels()) {
        throw DimensionError("selective_scan input must be (L," + std::to_string(params.channels()) + "), got " +
                             shape_str(x.shape()));
    }
    NoGradGuard no_grad;
    const std::size_t R = params.dt_rank;
    const std::size_t N = params.state_dim;
    const Tensor proj = ops::linear(x, params.x_proj, params.x_proj_bias);
    const Tensor dt_low = ops::slice(proj, 1, 0, R);
    const Tensor B = ops::slice(proj, 1, R, N);
    const Tensor C = ops::slice(proj, 1, R + N, N);
    const Tensor delta = ops::softplus(ops::linear(dt_low, params.dt_proj, params.dt_bias));
    const Discretized disc = discretize_zoh(params.A(), B, delta);
    return scan_recurrent(disc.a_bar, disc.b_bar, C, x);
}

}  // namespace physmamba::ssm
