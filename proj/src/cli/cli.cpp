// SPDX-License-Identifier: Apache-2.0
#include "physmamba/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "physmamba/config.hpp"
#include "physmamba/errors.hpp"
#include "physmamba/model.hpp"
#include "physmamba/synth.hpp"
#include "physmamba/training.hpp"
#include "physmamba/verify.hpp"

namespace physmamba::cli {

namespace fs = std::filesystem;

namespace {

constexpr double kReferenceParamsM = 0.56;
constexpr double kReferenceMacsG = 47.3;

// Ordered key/value settings with defaults, filled from a config file and flag overrides.
class Settings {
public:
    void declare(const std::string& key, const std::string& value, const std::string& help = "") {
        order_.push_back(key);
        values_[key] = value;
        help_[key] = help;
    }
    void declare_prefixed(const std::string& prefix, const std::string& canonical) {
        for (const auto& e : config::parse(canonical)) declare(prefix + e.key, e.value);
    }
    void load_file(const fs::path& path) {
        if (!fs::exists(path)) throw IoError("config file not found: " + path.string());
        for (const auto& e : config::parse(config::read_text(path), path.string())) {
            if (e.key == "command") {
                if (e.value != command_) {
                    throw ConfigError(path.string() + ":" + std::to_string(e.line) + ": snapshot is for '" + e.value +
                                      "', not '" + command_ + "'");
                }
                continue;
            }
            set(e.key, e.value, path.string() + ":" + std::to_string(e.line));
        }
    }
    void set(const std::string& key, const std::string& value, const std::string& source) {
        if (!values_.count(key)) throw ConfigError(source + ": unknown key '" + key + "'");
        values_[key] = value;
        given_.insert(key);
    }
    void set_override(const std::string& assignment) {
        const auto eq = assignment.find('=');
        if (eq == std::string::npos) throw ConfigError("--set expects KEY=VALUE, got '" + assignment + "'");
        auto trim = [](std::string s) {
            s.erase(0, s.find_first_not_of(" \t"));
            s.erase(s.find_last_not_of(" \t") + 1);
            return s;
        };
        set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)), "--set");
    }
    const std::string& get(const std::string& key) const { return values_.at(key); }
    const std::string& require(const std::string& key) const {
        const auto& v = values_.at(key);
        if (v.empty()) throw ConfigError("missing required setting '" + key + "' (flag --" + key + " or config key)");
        return v;
    }
    bool given(const std::string& key) const { return given_.count(key) > 0; }
    std::string with_prefix(const std::string& prefix) const {
        std::ostringstream os;
        for (const auto& k : order_)
            if (k.rfind(prefix, 0) == 0) os << k.substr(prefix.size()) << '=' << values_.at(k) << '\n';
        return os.str();
    }
    std::string snapshot() const {
        std::ostringstream os;
        os << "# resolved configuration; rerun with: physmamba " << command_ << " --config <this file>\n";
        os << "command=" << command_ << '\n';
        for (const auto& k : order_) os << k << '=' << values_.at(k) << '\n';
        return os.str();
    }
    std::string describe() const {
        std::ostringstream os;
        os << "Config keys (key = default):\n";
        for (const auto& k : order_) {
            os << "  " << k << " = " << values_.at(k);
            if (!help_.at(k).empty()) os << "    # " << help_.at(k);
            os << '\n';
        }
        return os.str();
    }
    void set_command(std::string c) { command_ = std::move(c); }

private:
    std::string command_;
    std::vector<std::string> order_;
    std::map<std::string, std::string> values_;
    std::map<std::string, std::string> help_;
    std::set<std::string> given_;
};

struct Command {
    Settings settings;
    std::string config_path;
    std::vector<std::string> overrides;
    std::map<std::string, std::string> flags;  // flag values bound by CLI11
    CLI::App* app = nullptr;
};

void resolve(Command& cmd) {
    if (!cmd.config_path.empty()) cmd.settings.load_file(cmd.config_path);
    for (const auto& [key, value] : cmd.flags)
        if (!value.empty()) cmd.settings.set(key, value, "--" + key);
    for (const auto& o : cmd.overrides) cmd.settings.set_override(o);
}

void write_snapshot(const fs::path& dir, const Settings& s, const std::string& name = "resolved_config.txt") {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    write_text(dir / name, s.snapshot());
}

std::string fixed(double v, int digits) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(digits) << v;
    return os.str();
}

std::string signed_fixed(double v, int digits) { return (v >= 0 ? "+" : "") + fixed(v, digits); }

// ---------------------------------------------------------------------------

synth::SynthConfig synth_config_from(const Settings& s) {
    synth::SynthConfig c;
    c.seed = config::to_u64(s.get("seed"));
    c.fs = config::to_double(s.get("fs"));
    c.duration_s = config::to_double(s.get("duration_s"));
    c.height = config::to_size(s.get("height"));
    c.width = config::to_size(s.get("width"));
    const auto color = config::to_doubles(s.get("base_color"));
    if (color.size() != 3) throw ConfigError("base_color needs three values");
    std::copy(color.begin(), color.end(), c.base_color.begin());
    c.pulse_amplitude = config::to_double(s.get("pulse_amplitude"));
    c.hr_bpm = config::to_doubles(s.get("hr_bpm"));
    const auto& mode = s.get("hr_mode");
    if (mode == "piecewise") c.hr_mode = synth::HrMode::piecewise;
    else if (mode == "linear") c.hr_mode = synth::HrMode::linear;
    else throw ConfigError("hr_mode must be piecewise or linear, got '" + mode + "'");
    c.noise_sigma = config::to_double(s.get("noise_sigma"));
    c.motion_amplitude_px = config::to_double(s.get("motion_amplitude_px"));
    c.skin_fraction = config::to_double(s.get("skin_fraction"));
    return c;
}

int cmd_synth(Command& cmd, std::ostream& out) {
    resolve(cmd);
    const auto& s = cmd.settings;
    const fs::path dir = s.require("out");
    const std::size_t count = config::to_size(s.get("clips"));
    if (count == 0) throw ConfigError("clips must be at least 1");
    const auto base = synth_config_from(s);
    base.validate();
    std::vector<double> range;
    if (!s.get("hr_range").empty()) {
        range = config::to_doubles(s.get("hr_range"));
        if (range.size() != 2 || !(range[0] <= range[1])) throw ConfigError("hr_range needs two ascending values");
    }
    std::mt19937_64 hr_rng(base.seed);
    std::vector<synth::ClipRecord> records;
    for (std::size_t i = 0; i < count; ++i) {
        auto c = base;
        c.seed = base.seed + i;
        if (!range.empty()) c.hr_bpm = {std::uniform_real_distribution<double>(range[0], range[1])(hr_rng)};
        std::ostringstream id;
        id << s.get("id_prefix") << std::setw(4) << std::setfill('0') << i;
        records.push_back(synth::generate_clip(c, id.str()));
    }
    write_snapshot(dir, s);
    synth::write_dataset(dir, records);
    out << "wrote " << count << " clips (" << base.frame_count() << " frames, " << base.height << "x" << base.width
        << ") to " << dir.string() << '\n';
    return kSuccess;
}

int cmd_train(Command& cmd, std::ostream& out) {
    resolve(cmd);
    const auto& s = cmd.settings;
    const fs::path data = s.require("data");
    const fs::path dir = s.require("out");
    const auto mcfg = training::parse_model_config(s.with_prefix("model."));
    const auto tcfg = training::parse_train_config(s.with_prefix("train."));
    const auto clips = synth::read_dataset(data);
    write_snapshot(dir, s);
    training::TrainOptions opts;
    opts.out_dir = dir;
    if (!s.get("resume").empty()) opts.resume = fs::path(s.get("resume"));
    const auto t0 = std::chrono::steady_clock::now();
    opts.log = [&](const std::string& msg) {
        out << msg << " [" << fixed(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(), 1)
            << " s]" << std::endl;
    };
    const auto res = training::train_loop(mcfg, clips, tcfg, opts);
    training::save_checkpoint(dir / "final", res.final_checkpoint);

    Series mean_loss{"epoch mean loss", {}, {}};
    for (const auto& e : res.epochs) {
        mean_loss.x.push_back(static_cast<double>(e.epoch));
        mean_loss.y.push_back(e.mean_loss);
    }
    write_text(dir / "loss.svg", line_plot_svg("Training loss", "epoch", "NegPearson loss", {mean_loss}));
    out << "final checkpoint: " << (dir / "final").string() << '\n';
    return kSuccess;
}

int cmd_eval(Command& cmd, std::ostream& out) {
    resolve(cmd);
    const auto& s = cmd.settings;
    const fs::path ckpt_dir = s.require("ckpt");
    const fs::path data = s.require("data");
    const fs::path dir = s.require("out");
    const std::size_t max_plots = config::to_size(s.get("plots"));
    std::optional<model::ModelConfig> expected;
    if (!s.get("model_config").empty()) {
        expected = training::parse_model_config(config::read_text(s.get("model_config")));
    }
    const auto ckpt = training::load_checkpoint(ckpt_dir);
    const auto clips = synth::read_dataset(data);
    write_snapshot(dir, s);
    const auto res = training::evaluate_checkpoint(ckpt, clips, expected);
    for (const auto& id : res.skipped) out << "warning: skipped clip " << id << " (too short)\n";
    signal::write_eval_csv(dir / "eval.csv", res.rows);
    signal::write_metrics_csv(dir / "metrics.csv", res.metrics);

    const fs::path plots = dir / "plots";
    fs::create_directories(plots);
    for (std::size_t i = 0; i < std::min(max_plots, res.rows.size()); ++i) {
        const auto fs_hz = clips.front().fs;
        auto pred = res.predicted[i];
        auto gt = signal::diff_normalize_label(res.reference[i]);
        gt.push_back(0.0);
        auto standardize = [](std::vector<double>& v) {
            double m = 0.0, q = 0.0;
            for (double x : v) m += x;
            m /= static_cast<double>(v.size());
            for (double x : v) q += (x - m) * (x - m);
            const double sd = std::sqrt(q / static_cast<double>(v.size()));
            for (double& x : v) x = sd > 0 ? (x - m) / sd : 0.0;
        };
        standardize(pred);
        standardize(gt);
        Series p{"predicted (" + fixed(res.rows[i].pred_bpm, 1) + " bpm)", {}, pred};
        Series g{"ground truth (" + fixed(res.rows[i].gt_bpm, 1) + " bpm)", {}, gt};
        for (std::size_t k = 0; k < pred.size(); ++k) p.x.push_back(static_cast<double>(k) / fs_hz);
        g.x = p.x;
        write_text(plots / (res.rows[i].clip_id + ".svg"),
                   line_plot_svg("rPPG signal: " + res.rows[i].clip_id, "time (s)", "standardized amplitude", {g, p}));
    }
    out << "clips evaluated: " << res.rows.size() << "\n"
        << "MAE  " << fixed(res.metrics.mae_bpm, 4) << " bpm\n"
        << "RMSE " << fixed(res.metrics.rmse_bpm, 4) << " bpm\n"
        << "MAPE " << fixed(res.metrics.mape_percent, 4) << " %\n"
        << "rho  " << fixed(res.metrics.pearson_rho, 6) << (res.metrics.rho_degenerate ? " (degenerate)" : "") << '\n';
    return kSuccess;
}

int cmd_gradcheck(Command& cmd, std::ostream& out) {
    resolve(cmd);
    const auto& s = cmd.settings;
    write_snapshot(s.get("out"), s);
    verify::GradientSuiteOptions opts;
    opts.full = config::to_bool(s.get("full"));
    opts.seed = config::to_u64(s.get("seed"));
    opts.network_samples = config::to_size(s.get("network_samples"));
    bool ok = true;
    std::size_t total = 0;
    verify::run_gradient_suite(opts, [&](const verify::GradCheckResult& r) {
        ok = ok && r.passed;
        total += r.checked;
        out << (r.passed ? "PASS " : "FAIL ") << std::left << std::setw(26) << r.name << " checked " << std::setw(5)
            << r.checked << " max rel error " << std::scientific << std::setprecision(3) << r.max_rel_error
            << std::defaultfloat;
        if (!r.passed) out << "  worst " << r.worst;
        out << std::endl;
    });
    out << (ok ? "all gradient checks passed" : "gradient check FAILED") << " (" << total
        << " coordinates, tolerance 1e-4)\n";
    return ok ? kSuccess : kVerificationFailure;
}

int cmd_scancheck(Command& cmd, std::ostream& out) {
    resolve(cmd);
    const auto& s = cmd.settings;
    write_snapshot(s.get("out"), s);
    const auto seed = config::to_u64(s.get("seed"));
    const auto t0 = std::chrono::steady_clock::now();
    const std::vector<verify::ScanCheckReport> reports = {
        verify::check_lti_equivalence(config::to_size(s.get("lti_cases")), seed, config::to_double(s.get("tolerance"))),
        verify::check_selective_reference(config::to_size(s.get("selective_cases")), seed + 1),
        verify::check_selective_degeneration(config::to_size(s.get("degeneration_cases")), seed + 2),
    };
    bool ok = true;
    double worst = 0.0;
    for (const auto& r : reports) {
        ok = ok && r.passed;
        if (!r.bitwise) worst = std::max(worst, r.max_rel_error);
        out << (r.passed ? "PASS " : "FAIL ") << std::left << std::setw(24) << r.name << " cases " << std::setw(4)
            << r.cases;
        if (r.bitwise) out << " bitwise equal: " << (r.passed ? "yes" : "no");
        else out << " max relative error " << std::scientific << std::setprecision(3) << r.max_rel_error
                 << " (tolerance " << r.tolerance << ")" << std::defaultfloat;
        out << '\n';
    }
    out << (ok ? "max relative error ≤ " + s.get("tolerance") : std::string("scan equivalence FAILED")) << " (worst " << std::scientific
        << std::setprecision(3) << worst << std::defaultfloat << ", "
        << fixed(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(), 2) << " s)\n";
    return ok ? kSuccess : kVerificationFailure;
}

int cmd_profile(Command& cmd, std::ostream& out) {
    resolve(cmd);
    const auto& s = cmd.settings;
    const auto mcfg = training::parse_model_config(s.with_prefix("model."));
    std::size_t T = 0, H = 0, W = 0;
    {
        std::string in = s.get("input");
        std::replace(in.begin(), in.end(), 'x', ' ');
        std::istringstream is(in);
        if (!(is >> T >> H >> W) || !(is >> std::ws).eof()) {
            throw ConfigError("input must look like TxHxW, got '" + s.get("input") + "'");
        }
    }
    write_snapshot(s.get("out"), s);
    const auto p = model::profile_model(mcfg, T, H, W);
    if (config::to_bool(s.get("layers"))) {
        for (const auto& l : p.layers) {
            out << std::left << std::setw(40) << l.name << std::right << std::setw(10) << l.params << std::setw(16)
                << l.macs << '\n';
        }
    }
    const double pm = static_cast<double>(p.params) / 1e6;
    const double mg = static_cast<double>(p.macs) / 1e9;
    out << "input " << T << "x" << H << "x" << W << "\n"
        << "parameters " << p.params << " (" << fixed(pm, 3) << " M)  reference " << kReferenceParamsM
        << " M  delta " << signed_fixed(pm - kReferenceParamsM, 3) << " M ("
        << signed_fixed(100.0 * (pm - kReferenceParamsM) / kReferenceParamsM, 1) << "%)\n"
        << "MACs " << p.macs << " (" << fixed(mg, 2) << " G)  reference " << kReferenceMacsG << " G  delta "
        << signed_fixed(mg - kReferenceMacsG, 2) << " G (" << signed_fixed(100.0 * (mg - kReferenceMacsG) / kReferenceMacsG, 1)
        << "%)\n";
    return kSuccess;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, ',')) {
        if (!cell.empty() && cell.back() == '\r') cell.pop_back();
        cells.push_back(cell);
    }
    return cells;
}

std::size_t column_index(const std::string& spec, const std::vector<std::string>& header) {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == spec) return i;
    try {
        return config::to_size(spec);
    } catch (const ConfigError&) {
        throw ConfigError("unknown column '" + spec + "'");
    }
}

int cmd_plot(Command& cmd, std::ostream& out) {
    resolve(cmd);
    const auto& s = cmd.settings;
    const fs::path csv = s.require("csv");
    const fs::path svg = s.require("out");
    std::ifstream f(csv);
    if (!f) throw IoError("cannot read " + csv.string());
    std::string line;
    if (!std::getline(f, line)) throw FormatError(csv.string(), "empty CSV file");
    const auto header = split_csv_line(line);
    const std::size_t xi = column_index(s.get("x"), header);
    const std::size_t yi = column_index(s.get("y"), header);
    if (xi >= header.size() || yi >= header.size()) throw ConfigError("column index out of range");
    Series series{header[yi], {}, {}};
    while (std::getline(f, line)) {
        const auto cells = split_csv_line(line);
        if (cells.size() != header.size()) throw FormatError(csv.string(), "row with " + std::to_string(cells.size()) + " cells");
        try {
            std::size_t ux = 0, uy = 0;
            const double x = std::stod(cells[xi], &ux);
            const double y = std::stod(cells[yi], &uy);
            if (ux != cells[xi].size() || uy != cells[yi].size()) continue;
            series.x.push_back(x);
            series.y.push_back(y);
        } catch (const std::exception&) {
            continue;  // non-numeric rows such as summaries
        }
    }
    if (series.x.empty()) throw FormatError(csv.string(), "no numeric rows to plot");
    const std::string title = s.get("title").empty() ? csv.filename().string() : s.get("title");
    const fs::path parent = svg.has_parent_path() ? svg.parent_path() : fs::path(".");
    write_snapshot(parent, s, svg.filename().string() + ".resolved_config.txt");
    write_text(svg, line_plot_svg(title, header[xi], header[yi], {series}));
    out << "plotted " << series.x.size() << " points to " << svg.string() << '\n';
    return kSuccess;
}

void declare_synth(Settings& s) {
    synth::SynthConfig d;
    s.declare("out", "", "dataset directory to write");
    s.declare("clips", "1", "number of clips; clip i uses seed + i");
    s.declare_prefixed("", d.canonical());
    s.declare("hr_range", "", "lo,hi: draw a constant HR per clip instead of hr_bpm");
    s.declare("id_prefix", "clip_");
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"PhysMamba: synthetic rPPG data, training, evaluation, and verification"};
    app.require_subcommand(1);
    app.footer("Exit codes: 0 success, 1 verification failure, 2 usage/config error, 3 I/O or format error.");

    std::map<std::string, Command> cmds;
    auto add = [&](const std::string& name, const std::string& desc) -> Command& {
        Command& c = cmds[name];
        c.settings.set_command(name);
        c.app = app.add_subcommand(name, desc);
        c.app->add_option("--config", c.config_path, "key = value config file");
        c.app->add_option("--set", c.overrides, "override one config key (KEY=VALUE), repeatable");
        return c;
    };
    auto flag = [](Command& c, const std::string& key, const std::string& desc) {
        c.app->add_option("--" + key, c.flags[key], desc);
    };

    auto& synth_cmd = add("synth", "generate a synthetic dataset");
    declare_synth(synth_cmd.settings);
    flag(synth_cmd, "out", "output dataset directory");

    auto& train_cmd = add("train", "train a model on a dataset");
    train_cmd.settings.declare("data", "", "dataset directory");
    train_cmd.settings.declare("out", "", "run directory (loss.csv, checkpoints/, final/)");
    train_cmd.settings.declare("resume", "", "checkpoint directory to continue from");
    train_cmd.settings.declare_prefixed("model.", model::ModelConfig{}.canonical());
    train_cmd.settings.declare_prefixed("train.", training::TrainConfig{}.canonical());
    flag(train_cmd, "data", "dataset directory");
    flag(train_cmd, "out", "run directory");
    flag(train_cmd, "resume", "checkpoint directory to continue from");

    auto& eval_cmd = add("eval", "evaluate a checkpoint on a dataset");
    eval_cmd.settings.declare("ckpt", "", "checkpoint directory");
    eval_cmd.settings.declare("data", "", "dataset directory");
    eval_cmd.settings.declare("out", "", "output directory (eval.csv, metrics.csv, plots/)");
    eval_cmd.settings.declare("plots", "8", "number of overlay plots to write");
    eval_cmd.settings.declare("model_config", "", "optional model config file that the checkpoint must match");
    flag(eval_cmd, "ckpt", "checkpoint directory");
    flag(eval_cmd, "data", "dataset directory");
    flag(eval_cmd, "out", "output directory");

    auto& grad_cmd = add("gradcheck", "finite-difference gradient suites");
    grad_cmd.settings.declare("out", ".", "directory for resolved_config.txt");
    grad_cmd.settings.declare("full", "false", "larger network and more samples");
    grad_cmd.settings.declare("seed", "2024");
    grad_cmd.settings.declare("network_samples", "150", "coordinates sampled in the network check");
    bool full_flag = false;
    grad_cmd.app->add_flag("--full", full_flag, "run the extended suite");
    flag(grad_cmd, "out", "directory for resolved_config.txt");

    auto& scan_cmd = add("scancheck", "scan equivalence suites");
    scan_cmd.settings.declare("out", ".", "directory for resolved_config.txt");
    scan_cmd.settings.declare("seed", "7");
    scan_cmd.settings.declare("lti_cases", "100");
    scan_cmd.settings.declare("selective_cases", "20");
    scan_cmd.settings.declare("degeneration_cases", "10");
    scan_cmd.settings.declare("tolerance", "1e-8", "recurrent vs convolutional tolerance");
    flag(scan_cmd, "out", "directory for resolved_config.txt");

    auto& prof_cmd = add("profile", "parameter and MAC count");
    prof_cmd.settings.declare("out", ".", "directory for resolved_config.txt");
    prof_cmd.settings.declare("input", "128x128x128", "TxHxW");
    prof_cmd.settings.declare("layers", "false", "print the per-layer table");
    prof_cmd.settings.declare_prefixed("model.", model::ModelConfig{}.canonical());
    flag(prof_cmd, "input", "clip size TxHxW");
    flag(prof_cmd, "out", "directory for resolved_config.txt");

    auto& plot_cmd = add("plot", "line plot of a CSV file as SVG");
    plot_cmd.settings.declare("csv", "", "input CSV with a header row");
    plot_cmd.settings.declare("out", "", "output SVG file");
    plot_cmd.settings.declare("x", "0", "x column (name or index)");
    plot_cmd.settings.declare("y", "1", "y column (name or index)");
    plot_cmd.settings.declare("title", "");
    flag(plot_cmd, "csv", "input CSV");
    flag(plot_cmd, "out", "output SVG file");
    flag(plot_cmd, "x", "x column (name or index)");
    flag(plot_cmd, "y", "y column (name or index)");
    flag(plot_cmd, "title", "plot title");

    for (auto& [name, c] : cmds) c.app->footer(c.settings.describe());

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kUsageError;
    }

    try {
        if (synth_cmd.app->parsed()) return cmd_synth(synth_cmd, out);
        if (train_cmd.app->parsed()) return cmd_train(train_cmd, out);
        if (eval_cmd.app->parsed()) return cmd_eval(eval_cmd, out);
        if (grad_cmd.app->parsed()) {
            if (full_flag) grad_cmd.flags["full"] = "true";
            return cmd_gradcheck(grad_cmd, out);
        }
        if (scan_cmd.app->parsed()) return cmd_scancheck(scan_cmd, out);
        if (prof_cmd.app->parsed()) return cmd_profile(prof_cmd, out);
        if (plot_cmd.app->parsed()) return cmd_plot(plot_cmd, out);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kUsageError;
    } catch (const ArgumentError& e) {
        err << "argument error: " << e.what() << '\n';
        return kUsageError;
    } catch (const FormatError& e) {
        err << "format error: " << e.what() << '\n';
        return kIoError;
    } catch (const IoError& e) {
        err << "I/O error: " << e.what() << '\n';
        return kIoError;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "I/O error: " << e.what() << '\n';
        return kIoError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kVerificationFailure;
    }
    err << "no subcommand given\n";
    return kUsageError;
}

}  // namespace physmamba::cli
