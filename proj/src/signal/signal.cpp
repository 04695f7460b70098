// SPDX-License-Identifier: Apache-2.0
#include "physmamba/signal.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <memory>
#include <numeric>

#include "physmamba/errors.hpp"
#include "physmamba/ops.hpp"

namespace physmamba::signal {

Tensor diff_normalize(const Tensor& frames) {
    if (frames.dim() != 4) throw DimensionError("diff_normalize expects (C,T,H,W), got " + shape_str(frames.shape()));
    const std::size_t C = frames.size(0), T = frames.size(1), HW = frames.size(2) * frames.size(3);
    if (T < 2) throw ArgumentError("diff_normalize needs at least 2 frames");
    const auto x = frames.data();
    std::vector<double> d(C * (T - 1) * HW);
    for (std::size_t c = 0; c < C; ++c)
        for (std::size_t t = 0; t + 1 < T; ++t) {
            const double* a = x.data() + (c * T + t) * HW;
            const double* b = a + HW;
            double* out = d.data() + (c * (T - 1) + t) * HW;
            for (std::size_t i = 0; i < HW; ++i) {
                const double v = (b[i] - a[i]) / (a[i] + b[i] + kDiffEps);
                out[i] = std::isfinite(v) ? v : 0.0;
            }
        }
    double mean = 0.0;
    for (double v : d) mean += v;
    mean /= static_cast<double>(d.size());
    double var = 0.0;
    for (double v : d) var += (v - mean) * (v - mean);
    const double sd = std::sqrt(var / static_cast<double>(d.size()));
    for (double& v : d) {
        v /= sd + kDiffEps;
        if (!std::isfinite(v)) v = 0.0;
    }
    return Tensor({C, T - 1, frames.size(2), frames.size(3)}, std::move(d));
}

std::vector<double> diff_normalize_label(std::span<const double> trace) {
    if (trace.size() < 2) throw ArgumentError("label needs at least 2 samples");
    std::vector<double> d(trace.size() - 1);
    for (std::size_t i = 0; i + 1 < trace.size(); ++i) d[i] = trace[i + 1] - trace[i];
    const double mean = std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(d.size());
    double var = 0.0;
    for (double v : d) var += (v - mean) * (v - mean);
    const double sd = std::sqrt(var / static_cast<double>(d.size()));
    for (double& v : d) v /= sd + kDiffEps;
    return d;
}

Tensor neg_pearson_loss(const Tensor& pred, const Tensor& target, PearsonStatus* status) {
    if (pred.shape() != target.shape()) {
        throw DimensionError("NegPearson needs equal shapes, got " + shape_str(pred.shape()) + " and " +
                             shape_str(target.shape()));
    }
    if (pred.dim() == 1) {
        return neg_pearson_loss(ops::reshape(pred, {1, pred.size(0)}), ops::reshape(target, {1, target.size(0)}), status);
    }
    if (pred.dim() != 2) throw DimensionError("NegPearson expects (T) or (B,T), got " + shape_str(pred.shape()));
    const std::size_t B = pred.size(0), T = pred.size(1);
    if (T < 2) throw ArgumentError("NegPearson needs at least 2 samples per trace");

    auto centered = [&](const Tensor& v) {
        return ops::sub(v, ops::broadcast_to(ops::mean(v, {1}, true), {B, T}));
    };
    const Tensor xc = centered(pred);
    const Tensor yc = centered(target);
    const Tensor cov = ops::sum(ops::mul(xc, yc), 1);
    const Tensor sx = ops::sqrt(ops::add_scalar(ops::sum(ops::square(xc), 1), kPearsonEps));
    const Tensor sy = ops::sqrt(ops::add_scalar(ops::sum(ops::square(yc), 1), kPearsonEps));
    const Tensor rho = ops::div(cov, ops::mul(sx, sy));

    if (status) {
        status->degenerate = false;
        const auto xs = xc.data();
        const auto ys = yc.data();
        for (std::size_t b = 0; b < B; ++b) {
            double vx = 0.0, vy = 0.0;
            for (std::size_t t = 0; t < T; ++t) {
                vx += xs[b * T + t] * xs[b * T + t];
                vy += ys[b * T + t] * ys[b * T + t];
            }
            if (vx == 0.0 || vy == 0.0) status->degenerate = true;
        }
    }
    return ops::add_scalar(ops::neg(ops::mean(rho)), 1.0);
}

double pearson(std::span<const double> x, std::span<const double> y, bool* degenerate) {
    if (x.size() != y.size() || x.empty()) throw ArgumentError("pearson needs equal non-empty sequences");
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    const bool flat = sxx == 0.0 || syy == 0.0;
    if (degenerate) *degenerate = flat;
    if (flat) return 0.0;
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

HrEstimate estimate_hr(std::span<const double> trace, double fs) {
    if (!(fs > 0.0)) throw ArgumentError("sampling rate must be positive");
    if (static_cast<double>(trace.size()) < 2.0 * fs) {
        throw InsufficientDataError("heart-rate estimation needs at least 2 s of signal; got " +
                                    std::to_string(trace.size()) + " samples at " + std::to_string(fs) + " Hz");
    }
    // transform length: a multiple of ceil(60 fs), so bins sit on a <= 1 bpm grid
    const std::size_t base = static_cast<std::size_t>(std::ceil(60.0 * fs));
    const std::size_t n = base * ((trace.size() + base - 1) / base);
    const double mean = std::accumulate(trace.begin(), trace.end(), 0.0) / static_cast<double>(trace.size());

    std::unique_ptr<double, decltype(&fftw_free)> in(fftw_alloc_real(n), &fftw_free);
    std::unique_ptr<fftw_complex, decltype(&fftw_free)> out(fftw_alloc_complex(n / 2 + 1), &fftw_free);
    std::fill(in.get(), in.get() + n, 0.0);
    // residues at rounding scale count as a flat trace
    const double tiny = 64.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(mean));
    bool flat = true;
    for (std::size_t i = 0; i < trace.size(); ++i) {
        in.get()[i] = trace[i] - mean;
        flat = flat && std::abs(in.get()[i]) <= tiny;
    }
    if (flat) std::fill(in.get(), in.get() + n, 0.0);
    fftw_plan plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in.get(), out.get(), FFTW_ESTIMATE);
    fftw_execute(plan);
    fftw_destroy_plan(plan);

    const double df = fs / static_cast<double>(n);
    std::size_t best = 0;
    double best_power = -1.0;
    double band_power = 0.0;
    std::size_t band_bins = 0;
    for (std::size_t k = 0; k <= n / 2; ++k) {
        const double f = static_cast<double>(k) * df;
        if (f < kBandLowHz - 1e-12 || f > kBandHighHz + 1e-12) continue;
        const double re = out.get()[k][0];
        const double im = out.get()[k][1];
        const double p = re * re + im * im;
        band_power += p;
        ++band_bins;
        if (p > best_power) {  // strict: ties keep the lower frequency
            best_power = p;
            best = k;
        }
    }
    if (band_bins == 0) throw InsufficientDataError("no spectral bins inside the heart-rate band");
    HrEstimate est;
    est.bpm = 60.0 * static_cast<double>(best) * df;
    est.low_snr = best_power <= 2.0 * band_power / static_cast<double>(band_bins);
    return est;
}

MetricsReport compute_metrics(std::span<const double> pred, std::span<const double> gt) {
    if (pred.empty() || gt.empty()) throw ArgumentError("metrics need non-empty prediction and ground-truth lists");
    if (pred.size() != gt.size()) throw ArgumentError("prediction and ground-truth lists differ in length");
    MetricsReport r;
    double abs_sum = 0.0, sq_sum = 0.0, pct_sum = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (!(gt[i] > 0.0)) throw ArgumentError("ground-truth heart rates must be positive");
        const double e = pred[i] - gt[i];
        abs_sum += std::abs(e);
        sq_sum += e * e;
        pct_sum += std::abs(e) / gt[i];
    }
    const double n = static_cast<double>(pred.size());
    r.mae_bpm = abs_sum / n;
    r.rmse_bpm = std::sqrt(sq_sum / n);
    r.mape_percent = 100.0 * pct_sum / n;
    r.pearson_rho = pearson(pred, gt, &r.rho_degenerate);
    return r;
}

namespace {

std::ofstream open_for_write(const std::filesystem::path& path) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot write " + path.string());
    f.precision(10);
    return f;
}

}  // namespace

void write_eval_csv(const std::filesystem::path& path, const std::vector<ClipResult>& rows) {
    auto f = open_for_write(path);
    f << "clip_id,pred_bpm,gt_bpm\n";
    double sp = 0.0, sg = 0.0;
    for (const auto& r : rows) {
        f << r.clip_id << ',' << r.pred_bpm << ',' << r.gt_bpm << '\n';
        sp += r.pred_bpm;
        sg += r.gt_bpm;
    }
    const double n = rows.empty() ? 1.0 : static_cast<double>(rows.size());
    f << "mean," << sp / n << ',' << sg / n << '\n';
    if (!f) throw IoError("failed writing " + path.string());
}

void write_metrics_csv(const std::filesystem::path& path, const MetricsReport& report) {
    auto f = open_for_write(path);
    f << "metric,value\n"
      << "mae_bpm," << report.mae_bpm << '\n'
      << "rmse_bpm," << report.rmse_bpm << '\n'
      << "mape_percent," << report.mape_percent << '\n'
      << "pearson_rho," << report.pearson_rho << '\n';
    if (!f) throw IoError("failed writing " + path.string());
}

}  // namespace physmamba::signal
