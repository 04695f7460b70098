// SPDX-License-Identifier: Apache-2.0
// One pass/fail line per acceptance criterion. Exit status is nonzero if any criterion fails.
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include <unistd.h>

#include "physmamba/autograd.hpp"
#include "physmamba/model.hpp"
#include "physmamba/ops.hpp"
#include "physmamba/signal.hpp"
#include "physmamba/synth.hpp"
#include "physmamba/training.hpp"
#include "physmamba/verify.hpp"

using namespace physmamba;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string sci(double v) {
    std::ostringstream os;
    os << std::scientific << std::setprecision(2) << v;
    return os.str();
}

std::string fix(double v, int d) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(d) << v;
    return os.str();
}

struct Outcome {
    bool passed = true;
    std::string detail;
};

int failures = 0;

void report(int id, const std::string& title, const std::function<Outcome()>& body) {
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.passed) ++failures;
    std::cout << "criterion " << id << " [" << (o.passed ? "PASS" : "FAIL") << "] " << title << ": " << o.detail
              << std::endl;
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("physmamba_accept_" + name + "_" + std::to_string(::getpid()));
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

std::vector<synth::ClipRecord> clean_clips(std::size_t n, std::uint64_t seed0, std::size_t hw, double seconds) {
    std::mt19937_64 rng(seed0);
    std::vector<synth::ClipRecord> out;
    for (std::size_t i = 0; i < n; ++i) {
        synth::SynthConfig c;
        c.seed = seed0 + i;
        c.height = hw;
        c.width = hw;
        c.duration_s = seconds;
        c.hr_bpm = {std::uniform_real_distribution<double>(55.0, 140.0)(rng)};
        out.push_back(synth::generate_clip(c, "clip_" + std::to_string(seed0 + i)));
    }
    return out;
}

model::ModelConfig toy_model() {
    model::ModelConfig m;
    m.channels = 32;
    m.blocks_per_stream = 2;
    m.seed = 1;
    return m;
}

training::TrainConfig toy_train(std::size_t epochs) {
    training::TrainConfig t;
    t.chunk_len = 32;
    t.height = 16;
    t.width = 16;
    t.epochs = epochs;
    t.seed = 2;
    return t;
}

}  // namespace

int main(int argc, char** argv) {
    const std::string cli_binary = argc > 1 ? argv[1] : "";
    const std::string cli_script = argc > 2 ? argv[2] : "";

    report(1, "scan equivalence, 100 random LTI systems", [] {
        const auto t0 = Clock::now();
        const auto r = verify::check_lti_equivalence(100, 101, 1e-8);
        const double s = seconds_since(t0);
        return Outcome{r.passed && r.cases == 100 && s < 10.0,
                       "max rel error " + sci(r.max_rel_error) + " (<= 1e-8), " + fix(s, 2) + " s (< 10 s)"};
    });

    report(2, "selective scan vs reference interpreter; constant-projection degeneration", [] {
        const auto ref = verify::check_selective_reference(20, 202, 1e-10);
        const auto deg = verify::check_selective_degeneration(10, 203);
        return Outcome{ref.passed && ref.cases == 20 && deg.passed && deg.bitwise,
                       "20 cases max rel error " + sci(ref.max_rel_error) + " (<= 1e-10); degeneration bitwise " +
                           (deg.passed ? "equal" : "DIFFERENT")};
    });

    report(3, "gradient suite over every op and a 2-block toy network", [] {
        const auto t0 = Clock::now();
        verify::GradientSuiteOptions opts;
        opts.network_samples = 150;
        const auto results = verify::run_gradient_suite(opts);
        const double s = seconds_since(t0);
        bool ok = true;
        double worst = 0.0;
        std::string worst_name, failed;
        std::size_t network_checked = 0;
        for (const auto& r : results) {
            ok = ok && r.passed;
            if (!r.passed) failed += " " + r.name;
            if (r.max_rel_error > worst) worst = r.max_rel_error, worst_name = r.name;
            if (r.name == "physmamba_2block") network_checked = r.checked;
        }
        ok = ok && network_checked >= 100 && s < 300.0;
        return Outcome{ok, std::to_string(results.size()) + " checks, network " + std::to_string(network_checked) +
                               " params sampled (>= 100), worst rel error " + sci(worst) + " in " + worst_name +
                               " (<= 1e-4), " + fix(s, 1) + " s (< 300 s)" + (failed.empty() ? "" : "; failed:" + failed)};
    });

    report(4, "shape contract: (1,3,128,128,128) -> 128 and toy shape algebra", [] {
        std::string detail;
        bool ok = true;
        std::mt19937_64 rng(404);
        NoGradGuard ng;
        {
            const auto t0 = Clock::now();
            model::PhysMamba net(model::ModelConfig{});
            const Tensor y = net.forward(Tensor::uniform({1, 3, 128, 128, 128}, 0.0, 1.0, rng), false);
            ok = ok && y.shape() == Shape{1, 128};
            detail += "full-size output " + shape_str(y.shape()) + " in " + fix(seconds_since(t0), 1) + " s";
        }
        auto pick = [&](std::size_t lo, std::size_t hi) { return std::uniform_int_distribution<std::size_t>(lo, hi)(rng); };
        std::size_t trials = 0;
        for (int trial = 0; trial < 20; ++trial) {
            model::ModelConfig cfg;
            cfg.channels = 8 * pick(1, 2);
            cfg.blocks_per_stream = pick(1, 3);
            cfg.ca_ratio = 4;
            cfg.state_dim = 4;
            cfg.seed = static_cast<std::uint64_t>(trial);
            model::PhysMamba net(cfg);
            const std::size_t B = pick(1, 2), T = 4 * pick(1, 4), H = 16 * pick(1, 2), W = 16 * pick(1, 2);
            const Tensor x = Tensor::uniform({B, 3, T, H, W}, -1.0, 1.0, rng);
            const auto streams = net.stem(x, false);
            const bool stem_ok = streams.slow.shape() == Shape{B, cfg.channels, T / 4, H / 4, W / 4} &&
                                 streams.fast.shape() == Shape{B, cfg.channels / 2, T / 2, H / 4, W / 4};
            const Tensor y = net.forward(x, trial % 2 == 0);
            ok = ok && stem_ok && y.shape() == Shape{B, T};
            ++trials;
        }
        detail += "; " + std::to_string(trials) + " random toy configs: stem (B,C,T/4,H/4,W/4)+(B,C/2,T/2,H/4,W/4), output (B,T)";
        return Outcome{ok, detail};
    });

    report(5, "profile of the default config at 128x128x128", [] {
        const auto p = model::profile_model(model::ModelConfig{}, 128, 128, 128);
        model::PhysMamba net(model::ModelConfig{});
        const double pm = static_cast<double>(p.params) / 1e6;
        const double mg = static_cast<double>(p.macs) / 1e9;
        const bool ok = pm >= 0.45 && pm <= 0.70 && mg >= 38.0 && mg <= 57.0 && p.params == net.registry().param_count();
        return Outcome{ok, "params " + std::to_string(p.params) + " (" + fix(pm, 3) + " M, band [0.45, 0.70], ref 0.56), MACs " +
                               std::to_string(p.macs) + " (" + fix(mg, 2) + " G, band [38, 57], ref 47.3)"};
    });

    report(6, "desk-scale end-to-end on clean synthetic clips", [] {
        const auto t0 = Clock::now();
        const auto train = clean_clips(30, 6000, 32, 10.0);
        const auto held_out = clean_clips(10, 7000, 32, 10.0);
        const auto dir = scratch("e2e");
        const auto tcfg = toy_train(10);
        const auto res = training::train_loop(toy_model(), train, tcfg, {dir, std::nullopt, 0, nullptr});
        const auto ev = training::evaluate_checkpoint(res.final_checkpoint, held_out, toy_model());
        model::PhysMamba untrained(toy_model());
        const auto base = training::evaluate(held_out, training::network_predictor(untrained), tcfg.chunk_len,
                                             tcfg.height, tcfg.width);
        const double s = seconds_since(t0);
        fs::remove_all(dir);
        const bool ok = ev.rows.size() == 10 && ev.metrics.mae_bpm < 3.0 && ev.metrics.pearson_rho > 0.9 && s < 1800.0;
        return Outcome{ok, "10 epochs, held-out MAE " + fix(ev.metrics.mae_bpm, 3) + " bpm (< 3), rho " +
                               fix(ev.metrics.pearson_rho, 4) + " (> 0.9), RMSE " + fix(ev.metrics.rmse_bpm, 3) +
                               ", untrained MAE " + fix(base.metrics.mae_bpm, 2) + ", " + fix(s, 1) + " s (< 1800 s)"};
    });

    report(7, "signal pipeline properties", [] {
        std::mt19937_64 rng(707);
        std::normal_distribution<double> nd;
        bool ok = true;
        double affine_dev = 0.0, lo = 2.0, hi = 0.0;
        auto loss_of = [](const std::vector<double>& p, const std::vector<double>& t) {
            return signal::neg_pearson_loss(Tensor({p.size()}, p), Tensor({t.size()}, t)).item();
        };
        // scales keep the variance guard's own contribution below the bound
        std::uniform_real_distribution<double> log_scale(0.0, std::log(100.0));
        for (int trial = 0; trial < 200; ++trial) {
            const std::size_t T = 16 + static_cast<std::size_t>(trial % 120);
            std::vector<double> x(T), y(T), xa(T), ya(T);
            for (std::size_t i = 0; i < T; ++i) x[i] = nd(rng), y[i] = nd(rng) + (trial % 3) * x[i];
            const double a = std::exp(log_scale(rng)), b = 10.0 * nd(rng);
            const double c = std::exp(log_scale(rng)), d = 10.0 * nd(rng);
            for (std::size_t i = 0; i < T; ++i) xa[i] = a * x[i] + b, ya[i] = c * y[i] + d;
            const double l = loss_of(x, y);
            std::vector<double> negated(T);
            for (std::size_t i = 0; i < T; ++i) negated[i] = -x[i];
            const double extremes[] = {l, loss_of(x, std::vector<double>(y.rbegin(), y.rend())), loss_of(x, x),
                                       loss_of(x, negated), loss_of(x, std::vector<double>(T))};
            for (double e : extremes) lo = std::min(lo, e), hi = std::max(hi, e);
            affine_dev = std::max({affine_dev, std::abs(l - loss_of(xa, y)), std::abs(l - loss_of(x, ya)),
                                   std::abs(l - loss_of(xa, ya))});
        }
        ok = ok && lo >= 0.0 && hi <= 2.0 && affine_dev <= 1e-9;

        // sinusoids in [0.8, 2.4] Hz, 10 s at 30 Hz; resolution is the bin spacing of the padded transform
        const double fs = 30.0;
        const std::size_t n = 300;
        const std::size_t base = static_cast<std::size_t>(std::ceil(60.0 * fs));
        const double resolution_bpm = 60.0 * fs / static_cast<double>(base * ((n + base - 1) / base));
        double worst_hr = 0.0;
        for (int k = 0; k < 50; ++k) {
            const double bpm = 60.0 * (0.8 + 1.6 * static_cast<double>(k) / 49.0);
            std::vector<double> s(n);
            for (std::size_t i = 0; i < n; ++i) s[i] = std::sin(2.0 * std::numbers::pi * bpm / 60.0 * i / fs + 0.3 * k);
            worst_hr = std::max(worst_hr, std::abs(signal::estimate_hr(s, fs).bpm - bpm));
        }
        ok = ok && worst_hr <= resolution_bpm;

        // diff_normalize: unit variance and invariance to a global intensity scale
        Tensor frames = Tensor::uniform({3, 20, 4, 4}, 0.2, 0.9, rng);
        Tensor scaled = frames.clone();
        for (double& v : scaled.data_mut()) v *= 3.7;
        const Tensor d1 = signal::diff_normalize(frames);
        const Tensor d2 = signal::diff_normalize(scaled);
        double mean = 0.0, var = 0.0, scale_dev = 0.0;
        for (double v : d1.data()) mean += v;
        mean /= static_cast<double>(d1.numel());
        for (double v : d1.data()) var += (v - mean) * (v - mean);
        var /= static_cast<double>(d1.numel());
        for (std::size_t i = 0; i < d1.numel(); ++i) scale_dev = std::max(scale_dev, std::abs(d1.data()[i] - d2.data()[i]));
        const double sd = std::sqrt(var);
        ok = ok && std::abs(sd - 1.0) <= 1e-6 && scale_dev <= 1e-6;
        return Outcome{ok, "NegPearson range [" + fix(lo, 3) + ", " + fix(hi, 3) + "] affine deviation " + sci(affine_dev) +
                               " (<= 1e-9); 50 sinusoids worst HR error " + fix(worst_hr, 3) + " bpm (<= " +
                               fix(resolution_bpm, 3) + "); diff_normalize std " + fix(sd, 9) +
                               ", scale deviation " + sci(scale_dev)};
    });

    report(8, "determinism, byte-exact round trips, CLI exit codes", [&] {
        bool ok = true;
        std::string detail;
        const auto clips = clean_clips(6, 8000, 16, 3.0);
        const auto a = scratch("det_a"), b = scratch("det_b");
        const auto tcfg = toy_train(2);
        training::train_loop(toy_model(), clips, tcfg, {a, std::nullopt, 0, nullptr});
        training::train_loop(toy_model(), clips, tcfg, {b, std::nullopt, 0, nullptr});
        const bool same_log = slurp(a / "loss.csv") == slurp(b / "loss.csv");
        const bool same_ckpt = slurp(a / "checkpoints/epoch_002/tensors.bin") == slurp(b / "checkpoints/epoch_002/tensors.bin");
        ok = ok && same_log && same_ckpt;
        detail += std::string("seeded runs ") + (same_log && same_ckpt ? "bit-identical" : "DIFFER");

        const auto ck = training::load_checkpoint(a / "checkpoints/epoch_002");
        training::save_checkpoint(a / "resaved", ck);
        const bool ck_exact = slurp(a / "resaved/tensors.bin") == slurp(a / "checkpoints/epoch_002/tensors.bin") &&
                              slurp(a / "resaved/meta.json") == slurp(a / "checkpoints/epoch_002/meta.json");
        ok = ok && ck_exact;
        detail += std::string("; checkpoint save-load-save ") + (ck_exact ? "byte-exact" : "DIFFERS");

        const auto ds1 = scratch("ds1"), ds2 = scratch("ds2");
        synth::write_dataset(ds1, clips);
        synth::write_dataset(ds2, synth::read_dataset(ds1));
        bool ds_exact = true;
        for (const auto& c : clips)
            for (const char* f : {"meta.json", "frames.f32", "label.f32"})
                ds_exact = ds_exact && slurp(ds1 / c.id / f) == slurp(ds2 / c.id / f);
        ok = ok && ds_exact;
        detail += std::string("; dataset write-read-write ") + (ds_exact ? "byte-exact" : "DIFFERS");
        for (const auto& p : {a, b, ds1, ds2}) fs::remove_all(p);

        if (cli_binary.empty() || cli_script.empty()) {
            ok = false;
            detail += "; CLI contract not run (binary or script path missing)";
        } else {
            const std::string cmd = "bash '" + cli_script + "' '" + cli_binary + "' > /dev/null 2>&1";
            const int rc = std::system(cmd.c_str());
            const bool cli_ok = rc == 0;
            ok = ok && cli_ok;
            detail += std::string("; CLI exit-code script ") + (cli_ok ? "passed" : "FAILED");
        }
        return Outcome{ok, detail};
    });

    std::cout << (failures == 0 ? "all acceptance criteria passed" : std::to_string(failures) + " criterion(s) failed")
              << std::endl;
    return failures == 0 ? 0 : 1;
}
