// SPDX-License-Identifier: Apache-2.0
#include "physmamba/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "physmamba/autograd.hpp"
#include "physmamba/config.hpp"
#include "physmamba/errors.hpp"
#include "physmamba/format.hpp"
#include "physmamba/io.hpp"

namespace physmamba::training {

namespace fs = std::filesystem;

namespace {

std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

std::uint64_t mix(std::initializer_list<std::uint64_t> parts) {
    std::uint64_t h = 0x243f6a8885a308d3ull;
    for (auto p : parts) h = splitmix(h ^ p);
    return h;
}

std::uint64_t model_hash(const model::ModelConfig& cfg) { return synth::fnv1a(cfg.canonical()); }

void standardize(std::vector<double>& v) {
    const double n = static_cast<double>(v.size());
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    const double sd = std::sqrt(var / n);
    for (double& x : v) x = sd > 0.0 ? (x - mean) / sd : 0.0;
}

}  // namespace

void TrainConfig::validate() const {
    if (!(lr >= 0.0) || !std::isfinite(lr)) throw ConfigError("lr must be finite and non-negative");
    if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay must be non-negative");
    if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
    if (chunk_len < 2) throw ConfigError("chunk_len must be at least 2");
    if (windows_per_clip < 1) throw ConfigError("windows_per_clip must be at least 1");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("Adam betas must lie in [0,1)");
    if (!(eps > 0.0)) throw ConfigError("Adam eps must be positive");
}

std::string TrainConfig::canonical() const {
    std::ostringstream os;
    os << "lr=" << format_double(lr) << "\nweight_decay=" << format_double(weight_decay) << "\nepochs=" << epochs << "\nbatch_size=" << batch_size
       << "\nseed=" << seed << "\nchunk_len=" << chunk_len << "\nheight=" << height << "\nwidth=" << width
       << "\nwindows_per_clip=" << windows_per_clip << "\nresample_windows=" << (resample_windows ? "true" : "false")
       << "\nbeta1=" << format_double(beta1) << "\nbeta2=" << format_double(beta2) << "\neps=" << format_double(eps) << "\n";
    return os.str();
}

model::ModelConfig parse_model_config(const std::string& text) {
    model::ModelConfig c;
    using namespace config;
    apply(parse(text, "model config"),
          {{"in_channels", [&](const std::string& v) { c.in_channels = to_size(v); }},
           {"channels", [&](const std::string& v) { c.channels = to_size(v); }},
           {"blocks_per_stream", [&](const std::string& v) { c.blocks_per_stream = to_size(v); }},
           {"theta", [&](const std::string& v) { c.theta = to_double(v); }},
           {"state_dim", [&](const std::string& v) { c.state_dim = to_size(v); }},
           {"expand", [&](const std::string& v) { c.expand = to_size(v); }},
           {"ca_ratio", [&](const std::string& v) { c.ca_ratio = to_size(v); }},
           {"max_sequence_elements", [&](const std::string& v) { c.max_sequence_elements = to_size(v); }},
           {"seed", [&](const std::string& v) { c.seed = to_u64(v); }}},
          "model config");
    c.validate();
    return c;
}

TrainConfig parse_train_config(const std::string& text) {
    TrainConfig c;
    using namespace config;
    apply(parse(text, "train config"),
          {{"lr", [&](const std::string& v) { c.lr = to_double(v); }},
           {"weight_decay", [&](const std::string& v) { c.weight_decay = to_double(v); }},
           {"epochs", [&](const std::string& v) { c.epochs = to_size(v); }},
           {"batch_size", [&](const std::string& v) { c.batch_size = to_size(v); }},
           {"seed", [&](const std::string& v) { c.seed = to_u64(v); }},
           {"chunk_len", [&](const std::string& v) { c.chunk_len = to_size(v); }},
           {"height", [&](const std::string& v) { c.height = to_size(v); }},
           {"width", [&](const std::string& v) { c.width = to_size(v); }},
           {"windows_per_clip", [&](const std::string& v) { c.windows_per_clip = to_size(v); }},
           {"resample_windows", [&](const std::string& v) { c.resample_windows = to_bool(v); }},
           {"beta1", [&](const std::string& v) { c.beta1 = to_double(v); }},
           {"beta2", [&](const std::string& v) { c.beta2 = to_double(v); }},
           {"eps", [&](const std::string& v) { c.eps = to_double(v); }}},
          "train config");
    c.validate();
    return c;
}

void adam_step(const std::vector<nn::NamedParam>& params, AdamState& state, const AdamOptions& opts) {
    if (state.m.empty()) {
        state.m.resize(params.size());
        state.v.resize(params.size());
    }
    if (state.m.size() != params.size() || state.v.size() != params.size()) {
        throw DimensionError("optimizer state does not match the parameter list");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        const auto& p = params[i].tensor;
        if (state.m[i].empty()) state.m[i].assign(p.numel(), 0.0);
        if (state.v[i].empty()) state.v[i].assign(p.numel(), 0.0);
        if (state.m[i].size() != p.numel() || state.v[i].size() != p.numel()) {
            throw DimensionError("optimizer state of " + params[i].name + " has the wrong size");
        }
        if (p.has_grad()) {
            const auto g = p.grad();
            if (g.size() != p.numel()) throw DimensionError("gradient of " + params[i].name + " has the wrong size");
            for (std::size_t k = 0; k < g.size(); ++k) {
                if (!std::isfinite(g[k])) {
                    throw NumericError("non-finite gradient in parameter " + params[i].name + " at element " +
                                       std::to_string(k));
                }
            }
        }
    }
    ++state.step;
    const double t = static_cast<double>(state.step);
    const double c1 = 1.0 - std::pow(opts.beta1, t);
    const double c2 = 1.0 - std::pow(opts.beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        Tensor p = params[i].tensor;
        auto w = p.data_mut();
        const bool has = p.has_grad();
        const auto g = has ? p.grad() : std::span<const double>{};
        auto& m = state.m[i];
        auto& v = state.v[i];
        for (std::size_t k = 0; k < w.size(); ++k) {
            const double gk = (has ? g[k] : 0.0) + opts.weight_decay * w[k];
            m[k] = opts.beta1 * m[k] + (1.0 - opts.beta1) * gk;
            v[k] = opts.beta2 * v[k] + (1.0 - opts.beta2) * gk * gk;
            w[k] -= opts.lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + opts.eps);
        }
    }
}

// ---------------------------------------------------------------------------
// checkpoints

namespace {

constexpr char kMagic[4] = {'P', 'M', 'C', 'K'};

template <typename T>
T meta_field(const nlohmann::ordered_json& j, const char* key, const fs::path& file) {
    if (!j.contains(key)) throw FormatError(file.string(), std::string("missing field '") + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw FormatError(file.string(), std::string("field '") + key + "' has the wrong type");
    }
}

}  // namespace

void save_checkpoint(const fs::path& dir, const Checkpoint& ckpt) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    std::vector<std::uint8_t> blob(kMagic, kMagic + 4);
    blob.push_back(ckpt.version);
    nlohmann::ordered_json entries = nlohmann::ordered_json::array();
    for (const auto& t : ckpt.tensors) {
        if (shape_numel(t.shape) != t.values.size()) throw DimensionError("checkpoint tensor " + t.name + " has inconsistent shape");
        const std::size_t offset = blob.size();
        std::vector<std::uint8_t> bytes;
        io::append_f32_le(bytes, t.values);
        blob.insert(blob.end(), bytes.begin(), bytes.end());
        nlohmann::ordered_json e;
        e["name"] = t.name;
        e["shape"] = t.shape;
        e["dtype"] = "float32-le";
        e["offset"] = offset;
        e["crc32"] = io::crc32(bytes);
        entries.push_back(std::move(e));
    }
    nlohmann::ordered_json meta;
    meta["format"] = "physmamba-checkpoint";
    meta["version"] = ckpt.version;
    meta["config_hash"] = ckpt.config_hash;
    meta["model_config"] = ckpt.model_config;
    meta["train_config"] = ckpt.train_config;
    meta["epoch"] = ckpt.epoch;
    meta["step"] = ckpt.step;
    meta["blob"] = "tensors.bin";
    meta["blob_bytes"] = blob.size();
    meta["blob_crc32"] = io::crc32(blob);
    meta["tensors"] = std::move(entries);
    io::write_bytes(dir / "tensors.bin", blob);
    io::write_json(dir / "meta.json", meta);
}

Checkpoint load_checkpoint(const fs::path& dir) {
    const fs::path meta_path = dir / "meta.json";
    const fs::path blob_path = dir / "tensors.bin";
    if (!fs::exists(meta_path)) throw IoError("checkpoint not found: " + meta_path.string());
    const auto meta = io::read_json(meta_path);
    if (meta_field<std::string>(meta, "format", meta_path) != "physmamba-checkpoint") {
        throw FormatError(meta_path.string(), "not a checkpoint header");
    }
    Checkpoint ck;
    const auto version = meta_field<unsigned>(meta, "version", meta_path);
    if (version != Checkpoint::kFormatVersion) {
        throw FormatError(meta_path.string(), "unsupported checkpoint version " + std::to_string(version));
    }
    if (!fs::exists(blob_path)) throw FormatError(blob_path.string(), "missing tensor blob");
    const auto blob = io::read_bytes(blob_path);
    if (blob.size() < 5 || !std::equal(kMagic, kMagic + 4, blob.begin())) {
        throw FormatError(blob_path.string(), "bad magic");
    }
    if (blob[4] != Checkpoint::kFormatVersion) {
        throw FormatError(blob_path.string(), "unsupported checkpoint version byte " + std::to_string(blob[4]));
    }
    if (blob.size() != meta_field<std::size_t>(meta, "blob_bytes", meta_path)) {
        throw FormatError(blob_path.string(), "length mismatch");
    }
    if (io::crc32(blob) != meta_field<std::uint32_t>(meta, "blob_crc32", meta_path)) {
        throw FormatError(blob_path.string(), "checksum mismatch");
    }
    ck.version = static_cast<std::uint8_t>(version);
    ck.config_hash = meta_field<std::uint64_t>(meta, "config_hash", meta_path);
    ck.model_config = meta_field<std::string>(meta, "model_config", meta_path);
    ck.train_config = meta_field<std::string>(meta, "train_config", meta_path);
    ck.epoch = meta_field<std::size_t>(meta, "epoch", meta_path);
    ck.step = meta_field<std::uint64_t>(meta, "step", meta_path);
    if (synth::fnv1a(ck.model_config) != ck.config_hash) {
        throw FormatError(meta_path.string(), "config hash does not match the stored model config");
    }
    if (!meta.contains("tensors") || !meta.at("tensors").is_array()) {
        throw FormatError(meta_path.string(), "missing tensor table");
    }
    for (const auto& e : meta.at("tensors")) {
        CheckpointTensor t;
        t.name = meta_field<std::string>(e, "name", meta_path);
        t.shape = meta_field<Shape>(e, "shape", meta_path);
        if (meta_field<std::string>(e, "dtype", meta_path) != "float32-le") {
            throw FormatError(meta_path.string(), "unsupported dtype for " + t.name);
        }
        const auto offset = meta_field<std::size_t>(e, "offset", meta_path);
        const std::size_t n = shape_numel(t.shape);
        t.values = io::decode_f32_le(blob, offset, n, blob_path.string());
        const std::span<const std::uint8_t> bytes(blob.data() + offset, 4 * n);
        if (io::crc32(bytes) != meta_field<std::uint32_t>(e, "crc32", meta_path)) {
            throw FormatError(blob_path.string(), "checksum mismatch in tensor " + t.name);
        }
        ck.tensors.push_back(std::move(t));
    }
    return ck;
}

Checkpoint capture(const model::PhysMamba& net, const AdamState& adam, const TrainConfig& tcfg, std::size_t epoch) {
    Checkpoint ck;
    ck.model_config = net.config().canonical();
    ck.config_hash = synth::fnv1a(ck.model_config);
    ck.train_config = tcfg.canonical();
    ck.epoch = epoch;
    ck.step = adam.step;
    const auto& params = net.registry().params();
    for (const auto& p : params) {
        const auto d = p.tensor.data();
        ck.tensors.push_back({"param/" + p.name, p.tensor.shape(), {d.begin(), d.end()}});
    }
    for (const auto& b : net.registry().buffers()) {
        ck.tensors.push_back({"buffer/" + b.name, {b.values->size()}, *b.values});
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        const std::size_t n = params[i].tensor.numel();
        const bool has = i < adam.m.size() && !adam.m[i].empty();
        ck.tensors.push_back({"adam_m/" + params[i].name, params[i].tensor.shape(),
                              has ? adam.m[i] : std::vector<double>(n, 0.0)});
        ck.tensors.push_back({"adam_v/" + params[i].name, params[i].tensor.shape(),
                              has ? adam.v[i] : std::vector<double>(n, 0.0)});
    }
    return ck;
}

void restore(const Checkpoint& ckpt, model::PhysMamba& net, AdamState* adam) {
    if (ckpt.config_hash != model_hash(net.config())) {
        throw ConfigError("checkpoint config hash does not match the model config");
    }
    std::map<std::string, const CheckpointTensor*> by_name;
    for (const auto& t : ckpt.tensors) by_name[t.name] = &t;
    auto find = [&](const std::string& name, std::size_t numel) -> const CheckpointTensor& {
        const auto it = by_name.find(name);
        if (it == by_name.end()) throw ConfigError("checkpoint lacks tensor " + name);
        if (it->second->values.size() != numel) throw ConfigError("checkpoint tensor " + name + " has the wrong size");
        return *it->second;
    };
    const auto& params = net.registry().params();
    for (const auto& p : params) {
        const auto& t = find("param/" + p.name, p.tensor.numel());
        Tensor handle = p.tensor;
        std::copy(t.values.begin(), t.values.end(), handle.data_mut().begin());
    }
    for (const auto& b : net.registry().buffers()) *b.values = find("buffer/" + b.name, b.values->size()).values;
    if (adam) {
        adam->step = ckpt.step;
        adam->m.assign(params.size(), {});
        adam->v.assign(params.size(), {});
        for (std::size_t i = 0; i < params.size(); ++i) {
            adam->m[i] = find("adam_m/" + params[i].name, params[i].tensor.numel()).values;
            adam->v[i] = find("adam_v/" + params[i].name, params[i].tensor.numel()).values;
        }
    }
}

void quantize_state(model::PhysMamba& net, AdamState& adam) {
    for (const auto& p : net.registry().params()) {
        Tensor handle = p.tensor;
        io::quantize_f32(handle.data_mut());
    }
    for (const auto& b : net.registry().buffers()) io::quantize_f32(*b.values);
    for (auto& m : adam.m) io::quantize_f32(m);
    for (auto& v : adam.v) io::quantize_f32(v);
}

// ---------------------------------------------------------------------------
// data

Tensor prepare_input(const synth::ClipRecord& chunk) {
    const Tensor d = signal::diff_normalize(chunk.frames);
    const std::size_t C = d.size(0), T1 = d.size(1), HW = d.size(2) * d.size(3);
    std::vector<double> out(C * (T1 + 1) * HW, 0.0);
    const auto src = d.data();
    for (std::size_t c = 0; c < C; ++c) {
        std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(c * T1 * HW), T1 * HW,
                    out.begin() + static_cast<std::ptrdiff_t>(c * (T1 + 1) * HW));
    }
    return Tensor({C, T1 + 1, d.size(2), d.size(3)}, std::move(out));
}

std::vector<double> prepare_target(const synth::ClipRecord& chunk) {
    auto d = signal::diff_normalize_label(chunk.label);
    d.push_back(0.0);
    return d;
}

namespace {

Tensor stack_inputs(const std::vector<Tensor>& xs) {
    const Shape& s = xs.front().shape();
    std::vector<double> out;
    out.reserve(xs.size() * xs.front().numel());
    for (const auto& x : xs) {
        const auto d = x.data();
        out.insert(out.end(), d.begin(), d.end());
    }
    return Tensor({xs.size(), s[0], s[1], s[2], s[3]}, std::move(out));
}

void emit(const TrainOptions& opts, const std::string& msg) {
    if (opts.log) opts.log(msg);
}

}  // namespace

void write_loss_csv_header(const fs::path& path) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot write " + path.string());
    f << "epoch,step,loss\n";
}

TrainResult train_loop(const model::ModelConfig& mcfg, const std::vector<synth::ClipRecord>& clips,
                       const TrainConfig& tcfg, const TrainOptions& opts) {
    tcfg.validate();
    mcfg.validate();
    mcfg.validate_input(tcfg.chunk_len, tcfg.height, tcfg.width);
    if (clips.empty()) throw ArgumentError("training dataset is empty");

    model::PhysMamba net(mcfg);
    AdamState adam;
    std::size_t start_epoch = 0;
    if (opts.resume) {
        const Checkpoint ck = load_checkpoint(*opts.resume);
        restore(ck, net, &adam);
        start_epoch = ck.epoch;
        emit(opts, "resuming after epoch " + std::to_string(start_epoch));
    } else {
        quantize_state(net, adam);
    }

    std::error_code ec;
    fs::create_directories(opts.out_dir, ec);
    if (ec) throw IoError("cannot create " + opts.out_dir.string() + ": " + ec.message());
    const fs::path loss_path = opts.out_dir / "loss.csv";
    if (!opts.resume || !fs::exists(loss_path)) write_loss_csv_header(loss_path);
    std::ofstream loss_csv(loss_path, std::ios::app);
    if (!loss_csv) throw IoError("cannot write " + loss_path.string());
    loss_csv.precision(17);

    std::vector<bool> warned(clips.size(), false);
    const AdamOptions aopts{tcfg.lr, tcfg.beta1, tcfg.beta2, tcfg.eps, tcfg.weight_decay};
    TrainResult result;
    const std::size_t last_epoch = opts.stop_after_epoch ? std::min(opts.stop_after_epoch, tcfg.epochs) : tcfg.epochs;

    for (std::size_t epoch = start_epoch; epoch < last_epoch; ++epoch) {
        std::vector<std::pair<std::size_t, std::size_t>> order;
        for (std::size_t c = 0; c < clips.size(); ++c)
            for (std::size_t w = 0; w < tcfg.windows_per_clip; ++w) order.emplace_back(c, w);
        std::mt19937_64 shuffle_rng(mix({tcfg.seed, 0x5348u, epoch}));
        std::shuffle(order.begin(), order.end(), shuffle_rng);

        EpochStats stats;
        stats.epoch = epoch + 1;
        double loss_sum = 0.0;
        for (std::size_t begin = 0, batch = 0; begin < order.size(); begin += tcfg.batch_size, ++batch) {
            std::vector<Tensor> inputs;
            std::vector<double> targets;
            std::string ids;
            for (std::size_t k = begin; k < std::min(order.size(), begin + tcfg.batch_size); ++k) {
                const auto [c, w] = order[k];
                const std::uint64_t wseed =
                    mix({tcfg.seed, 0x5749u, tcfg.resample_windows ? epoch : 0, c, w});
                auto res = synth::chunk_and_resize(clips[c], tcfg.chunk_len, tcfg.height, tcfg.width,
                                                   synth::ChunkMode::train, wseed);
                if (res.skipped) {
                    if (!warned[c]) emit(opts, "warning: skipping clip " + clips[c].id + " shorter than chunk_len");
                    warned[c] = true;
                    continue;
                }
                inputs.push_back(prepare_input(res.chunks.front()));
                const auto t = prepare_target(res.chunks.front());
                targets.insert(targets.end(), t.begin(), t.end());
                ids += (ids.empty() ? "" : " ") + res.chunks.front().id;
            }
            if (inputs.empty()) continue;
            const std::string batch_id = "epoch " + std::to_string(epoch + 1) + " batch " + std::to_string(batch) + " [" + ids + "]";

            Tape::current().clear();
            double loss_value = 0.0;
            try {
                const Tensor x = stack_inputs(inputs);
                const Tensor y({inputs.size(), tcfg.chunk_len}, std::move(targets));
                const Tensor loss = signal::neg_pearson_loss(net.forward(x, true), y);
                loss_value = loss.item();
                if (!std::isfinite(loss_value)) throw NumericError("loss is not finite");
                backward(loss);
            } catch (const NumericError& e) {
                Tape::current().clear();
                throw NumericError("non-finite value in " + batch_id + ": " + e.what());
            }
            adam_step(net.registry().params(), adam, aopts);
            for (const auto& p : net.registry().params()) {
                Tensor handle = p.tensor;
                handle.zero_grad();
            }
            loss_sum += loss_value;
            ++stats.steps;
            loss_csv << epoch + 1 << ',' << adam.step << ',' << loss_value << '\n';
        }
        loss_csv.flush();
        stats.mean_loss = stats.steps ? loss_sum / static_cast<double>(stats.steps) : 0.0;
        if (stats.steps == 0) throw ArgumentError("no clip is long enough for chunk_len " + std::to_string(tcfg.chunk_len));

        quantize_state(net, adam);
        result.final_checkpoint = capture(net, adam, tcfg, epoch + 1);
        char name[32];
        std::snprintf(name, sizeof name, "epoch_%03zu", epoch + 1);
        save_checkpoint(opts.out_dir / "checkpoints" / name, result.final_checkpoint);
        result.epochs.push_back(stats);
        std::ostringstream msg;
        msg << "epoch " << epoch + 1 << "/" << tcfg.epochs << " mean loss " << stats.mean_loss << " (" << stats.steps
            << " steps)";
        emit(opts, msg.str());
    }
    if (result.epochs.empty()) result.final_checkpoint = capture(net, adam, tcfg, start_epoch);
    return result;
}

TrainResult train_loop(const model::ModelConfig& mcfg, const fs::path& dataset, const TrainConfig& tcfg,
                       const TrainOptions& opts) {
    return train_loop(mcfg, synth::read_dataset(dataset), tcfg, opts);
}

// ---------------------------------------------------------------------------
// evaluation

EvalResult evaluate(const std::vector<synth::ClipRecord>& clips, const Predictor& predict, std::size_t chunk_len,
                    std::size_t height, std::size_t width) {
    EvalResult out;
    std::vector<double> preds, gts;
    for (const auto& clip : clips) {
        const auto res = synth::chunk_and_resize(clip, chunk_len, height, width, synth::ChunkMode::eval);
        if (res.skipped) {
            out.skipped.push_back(clip.id);
            continue;
        }
        std::vector<double> pred, ref;
        for (const auto& chunk : res.chunks) {
            const auto p = predict(chunk);
            if (p.size() != chunk_len) throw DimensionError("predictor returned a trace of the wrong length");
            pred.insert(pred.end(), p.begin(), p.end());
            ref.insert(ref.end(), chunk.label.begin(), chunk.label.end());
        }
        try {
            const double pred_bpm = signal::estimate_hr(pred, clip.fs).bpm;
            const double gt_bpm = signal::estimate_hr(ref, clip.fs).bpm;
            out.rows.push_back({clip.id, pred_bpm, gt_bpm});
        } catch (const InsufficientDataError&) {
            out.skipped.push_back(clip.id);
            continue;
        }
        preds.push_back(out.rows.back().pred_bpm);
        gts.push_back(out.rows.back().gt_bpm);
        out.predicted.push_back(std::move(pred));
        out.reference.push_back(std::move(ref));
    }
    out.metrics = signal::compute_metrics(preds, gts);
    return out;
}

Predictor network_predictor(model::PhysMamba& net) {
    return [&net](const synth::ClipRecord& chunk) {
        NoGradGuard guard;
        const Tensor x = prepare_input(chunk);
        const Tensor y = net.forward(ops::reshape(x, {1, x.size(0), x.size(1), x.size(2), x.size(3)}), false);
        const auto d = y.data();
        std::vector<double> p(d.begin(), d.end());
        standardize(p);
        return p;
    };
}

EvalResult evaluate_checkpoint(const Checkpoint& ckpt, const std::vector<synth::ClipRecord>& clips,
                               const std::optional<model::ModelConfig>& expected) {
    if (expected && model_hash(*expected) != ckpt.config_hash) {
        throw ConfigError("checkpoint config hash does not match the requested model config");
    }
    const model::ModelConfig mcfg = parse_model_config(ckpt.model_config);
    const TrainConfig tcfg = parse_train_config(ckpt.train_config);
    model::PhysMamba net(mcfg);
    restore(ckpt, net, nullptr);
    return evaluate(clips, network_predictor(net), tcfg.chunk_len, tcfg.height, tcfg.width);
}

}  // namespace physmamba::training
