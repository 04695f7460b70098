// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "physmamba/tensor.hpp"

namespace physmamba::signal {

inline constexpr double kDiffEps = 1e-7;
inline constexpr double kPearsonEps = 1e-8;
inline constexpr double kBandLowHz = 0.75;
inline constexpr double kBandHighHz = 2.5;

/// Normalized frame differences (X[t+1] - X[t]) / (X[t] + X[t+1] + eps), divided
/// by the population standard deviation of the whole result (+eps). Non-finite
/// values become 0. frames (C,T,H,W) -> (C,T-1,H,W); T >= 2.
Tensor diff_normalize(const Tensor& frames);

/// Label counterpart: first differences divided by their population standard
/// deviation (+eps). Length n -> n-1.
std::vector<double> diff_normalize_label(std::span<const double> trace);

struct PearsonStatus {
    bool degenerate = false;  // some row had zero variance; its correlation was taken as 0
};

/// 1 - Pearson correlation, differentiable. pred/target are (T) or (B,T); batches
/// average the per-row loss. Each variance carries kPearsonEps under its square root.
Tensor neg_pearson_loss(const Tensor& pred, const Tensor& target, PearsonStatus* status = nullptr);

/// Sample Pearson correlation of plain sequences; 0 (and degenerate = true) if either is constant.
double pearson(std::span<const double> x, std::span<const double> y, bool* degenerate = nullptr);

struct HrEstimate {
    double bpm = 0.0;
    bool low_snr = false;  // peak power <= 2x the mean in-band power
};

/// Dominant frequency in [0.75, 2.5] Hz of the mean-removed trace, via an ideal FFT
/// mask on a zero-padded spectrum with a 1 bpm (or finer) grid. Ties go to the lower
/// frequency. Fewer than 2*fs samples raises InsufficientDataError.
HrEstimate estimate_hr(std::span<const double> trace, double fs);

struct MetricsReport {
    double mae_bpm = 0.0;
    double rmse_bpm = 0.0;
    double mape_percent = 0.0;
    double pearson_rho = 0.0;
    bool rho_degenerate = false;  // one list was constant; rho reported as 0
};

MetricsReport compute_metrics(std::span<const double> pred_bpm, std::span<const double> gt_bpm);

struct ClipResult {
    std::string clip_id;
    double pred_bpm = 0.0;
    double gt_bpm = 0.0;
};

/// `clip_id,pred_bpm,gt_bpm` rows, then a `mean` row with the column means.
void write_eval_csv(const std::filesystem::path& path, const std::vector<ClipResult>& rows);
/// `metric,value` rows for MAE, RMSE, MAPE and rho.
void write_metrics_csv(const std::filesystem::path& path, const MetricsReport& report);

}  // namespace physmamba::signal
