// SPDX-License-Identifier: Apache-2.0
#include "physmamba/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "physmamba/errors.hpp"
#include "physmamba/format.hpp"
#include "physmamba/io.hpp"
#include "physmamba/ops.hpp"

namespace physmamba::synth {

namespace fs = std::filesystem;

std::uint64_t fnv1a(const std::string& text) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

void SynthConfig::validate() const {
    if (height < 16 || width < 16) throw ConfigError("synthetic resolution must be at least 16x16");
    if (!(fs > 0.0)) throw ConfigError("fs must be positive");
    if (!(duration_s > 0.0) || frame_count() < 2) throw ConfigError("duration must cover at least 2 frames");
    if (hr_bpm.empty()) throw ConfigError("hr profile needs at least one value");
    for (double v : hr_bpm) {
        if (!(v >= 48.0 && v <= 144.0)) throw ConfigError("heart rate " + std::to_string(v) + " outside [48, 144] bpm");
    }
    for (double c : base_color) {
        if (!(c >= 0.0 && c <= 1.0)) throw ConfigError("base colors must lie in [0,1]");
    }
    if (!(pulse_amplitude >= 0.0) || !(noise_sigma >= 0.0) || !(motion_amplitude_px >= 0.0)) {
        throw ConfigError("amplitudes and noise must be non-negative");
    }
    if (!(skin_fraction > 0.0 && skin_fraction <= 1.0)) throw ConfigError("skin_fraction must lie in (0,1]");
}

std::size_t SynthConfig::frame_count() const { return static_cast<std::size_t>(std::lround(fs * duration_s)); }

double SynthConfig::hr_at(double t) const {
    const std::size_t k = hr_bpm.size();
    if (k == 1) return hr_bpm[0];
    const double u = std::clamp(t / duration_s, 0.0, 1.0);
    if (hr_mode == HrMode::piecewise) {
        return hr_bpm[std::min(k - 1, static_cast<std::size_t>(u * static_cast<double>(k)))];
    }
    const double pos = u * static_cast<double>(k - 1);
    const std::size_t i = std::min(k - 2, static_cast<std::size_t>(pos));
    return hr_bpm[i] + (pos - static_cast<double>(i)) * (hr_bpm[i + 1] - hr_bpm[i]);
}

std::string SynthConfig::canonical() const {
    std::ostringstream os;
    os << "seed=" << seed << "\nfs=" << format_double(fs) << "\nduration_s=" << format_double(duration_s) << "\nheight=" << height
       << "\nwidth=" << width << "\nbase_color=" << format_double(base_color[0]) << ',' << format_double(base_color[1]) << ',' << format_double(base_color[2])
       << "\npulse_amplitude=" << format_double(pulse_amplitude) << "\nhr_bpm=";
    for (std::size_t i = 0; i < hr_bpm.size(); ++i) os << (i ? "," : "") << format_double(hr_bpm[i]);
    os << "\nhr_mode=" << (hr_mode == HrMode::piecewise ? "piecewise" : "linear") << "\nnoise_sigma=" << format_double(noise_sigma)
       << "\nmotion_amplitude_px=" << format_double(motion_amplitude_px) << "\nskin_fraction=" << format_double(skin_fraction) << "\n";
    return os.str();
}

ClipRecord generate_clip(const SynthConfig& cfg, const std::string& id) {
    cfg.validate();
    const std::size_t T = cfg.frame_count(), H = cfg.height, W = cfg.width;
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    constexpr double two_pi = 2.0 * std::numbers::pi;

    // pulse: p = sin(phi) + 0.3 sin(2 phi), phi integrated from the HR profile
    ClipRecord rec;
    rec.id = id;
    rec.fs = cfg.fs;
    rec.seed = cfg.seed;
    rec.config_hash = fnv1a(cfg.canonical());
    rec.label.resize(T);
    double phi = two_pi * unit(rng);
    double hr_sum = 0.0;
    const double dt = 1.0 / cfg.fs;
    for (std::size_t i = 0; i < T; ++i) {
        const double t = static_cast<double>(i) * dt;
        if (i > 0) phi += two_pi * dt * 0.5 * (cfg.hr_at(t - dt) + cfg.hr_at(t)) / 60.0;
        rec.label[i] = std::sin(phi) + 0.3 * std::sin(2.0 * phi);
        hr_sum += cfg.hr_at(t);
    }
    rec.gt_mean_bpm = hr_sum / static_cast<double>(T);

    // fixed skin/background shading
    std::vector<double> shade(H * W);
    for (double& s : shade) s = 0.9 + 0.2 * unit(rng);
    constexpr std::array<double, 3> background{0.25, 0.25, 0.3};

    rec.frames = Tensor({3, T, H, W});
    auto px = rec.frames.data_mut();
    const double cy = 0.5 * static_cast<double>(H);
    const double ry = cfg.skin_fraction * 0.5 * static_cast<double>(H);
    const double rx = cfg.skin_fraction * 0.5 * static_cast<double>(W);
    std::normal_distribution<double> noise(0.0, 1.0);
    for (std::size_t t = 0; t < T; ++t) {
        const double time = static_cast<double>(t) * dt;
        const double cx = 0.5 * static_cast<double>(W) + cfg.motion_amplitude_px * std::sin(two_pi * 0.2 * time);
        for (std::size_t y = 0; y < H; ++y)
            for (std::size_t x = 0; x < W; ++x) {
                const double ex = (static_cast<double>(x) + 0.5 - cx) / rx;
                const double ey = (static_cast<double>(y) + 0.5 - cy) / ry;
                const bool skin = ex * ex + ey * ey <= 1.0;
                for (std::size_t c = 0; c < 3; ++c) {
                    double v = skin ? cfg.base_color[c] * shade[y * W + x] *
                                          (1.0 + cfg.pulse_amplitude * kPulseChannelWeights[c] * rec.label[t])
                                    : background[c] * shade[y * W + x];
                    if (cfg.noise_sigma > 0.0) v += cfg.noise_sigma * noise(rng);
                    px[((c * T + t) * H + y) * W + x] = std::clamp(v, 0.0, 1.0);
                }
            }
    }
    return rec;
}

namespace {

constexpr int kClipFormatVersion = 1;

std::vector<std::uint8_t> encode(std::span<const double> values) {
    std::vector<std::uint8_t> bytes;
    io::append_f32_le(bytes, values);
    return bytes;
}

template <typename T>
T field(const nlohmann::ordered_json& j, const char* key, const fs::path& file) {
    if (!j.contains(key)) throw FormatError(file.string(), std::string("missing field '") + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw FormatError(file.string(), std::string("field '") + key + "' has the wrong type");
    }
}

std::vector<double> read_blob(const fs::path& path, std::size_t count, std::uint32_t crc) {
    if (!fs::exists(path)) throw FormatError(path.string(), "missing data file");
    const auto bytes = io::read_bytes(path);
    if (bytes.size() != 4 * count) {
        throw FormatError(path.string(), "length mismatch: expected " + std::to_string(4 * count) + " bytes, found " +
                                             std::to_string(bytes.size()));
    }
    if (io::crc32(bytes) != crc) throw FormatError(path.string(), "checksum mismatch");
    return io::decode_f32_le(bytes, 0, count, path.string());
}

}  // namespace

void write_clip(const fs::path& dir, const ClipRecord& rec) {
    if (rec.frames.dim() != 4 || rec.frames.size(0) != 3) {
        throw DimensionError("clip frames must be (3,T,H,W), got " + shape_str(rec.frames.shape()));
    }
    if (rec.label.size() != rec.frames.size(1)) throw DimensionError("label length must equal the frame count");
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    const auto frames = encode(rec.frames.data());
    const auto label = encode(rec.label);
    io::write_bytes(dir / "frames.f32", frames);
    io::write_bytes(dir / "label.f32", label);
    nlohmann::ordered_json meta;
    meta["format"] = "physmamba-clip";
    meta["version"] = kClipFormatVersion;
    meta["id"] = rec.id;
    meta["shape"] = rec.frames.shape();
    meta["dtype"] = "float32-le";
    meta["fs"] = rec.fs;
    meta["seed"] = rec.seed;
    meta["config_hash"] = rec.config_hash;
    meta["gt_mean_bpm"] = rec.gt_mean_bpm;
    meta["frames_crc32"] = io::crc32(frames);
    meta["label_length"] = rec.label.size();
    meta["label_crc32"] = io::crc32(label);
    io::write_json(dir / "meta.json", meta);
}

ClipRecord read_clip(const fs::path& dir) {
    const fs::path meta_path = dir / "meta.json";
    const auto meta = io::read_json(meta_path);
    if (field<std::string>(meta, "format", meta_path) != "physmamba-clip") {
        throw FormatError(meta_path.string(), "not a clip header");
    }
    if (field<int>(meta, "version", meta_path) != kClipFormatVersion) {
        throw FormatError(meta_path.string(), "unsupported clip format version");
    }
    if (field<std::string>(meta, "dtype", meta_path) != "float32-le") throw FormatError(meta_path.string(), "unsupported dtype");
    const auto shape = field<Shape>(meta, "shape", meta_path);
    if (shape.size() != 4 || shape[0] != 3) throw FormatError(meta_path.string(), "shape must be [3,T,H,W]");
    const auto label_len = field<std::size_t>(meta, "label_length", meta_path);
    if (label_len != shape[1]) throw FormatError(meta_path.string(), "label length differs from the frame count");

    ClipRecord rec;
    rec.id = field<std::string>(meta, "id", meta_path);
    rec.fs = field<double>(meta, "fs", meta_path);
    rec.seed = field<std::uint64_t>(meta, "seed", meta_path);
    rec.config_hash = field<std::uint64_t>(meta, "config_hash", meta_path);
    rec.gt_mean_bpm = field<double>(meta, "gt_mean_bpm", meta_path);
    rec.frames = Tensor(shape, read_blob(dir / "frames.f32", shape_numel(shape),
                                         field<std::uint32_t>(meta, "frames_crc32", meta_path)));
    rec.label = read_blob(dir / "label.f32", label_len, field<std::uint32_t>(meta, "label_crc32", meta_path));
    return rec;
}

void write_dataset(const fs::path& dir, const std::vector<ClipRecord>& records) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    for (const auto& r : records) write_clip(dir / r.id, r);
}

std::vector<ClipRecord> read_dataset(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw IoError("dataset directory not found: " + dir.string());
    std::vector<fs::path> clips;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_directory() && fs::exists(entry.path() / "meta.json")) clips.push_back(entry.path());
    }
    std::sort(clips.begin(), clips.end());
    std::vector<ClipRecord> out;
    out.reserve(clips.size());
    for (const auto& c : clips) out.push_back(read_clip(c));
    return out;
}

Tensor resize_bilinear(const Tensor& frames, std::size_t out_h, std::size_t out_w) {
    if (frames.dim() != 4) throw DimensionError("resize expects (C,T,H,W), got " + shape_str(frames.shape()));
    if (out_h == 0 || out_w == 0) throw ArgumentError("resize target must be non-empty");
    const std::size_t C = frames.size(0), T = frames.size(1), H = frames.size(2), W = frames.size(3);
    if (H == out_h && W == out_w) return frames.clone();

    struct Tap {
        std::size_t i0, i1;
        double w;
    };
    auto taps = [](std::size_t in, std::size_t out) {
        std::vector<Tap> v(out);
        const double scale = static_cast<double>(in) / static_cast<double>(out);
        for (std::size_t o = 0; o < out; ++o) {
            const double src = std::clamp((static_cast<double>(o) + 0.5) * scale - 0.5, 0.0, static_cast<double>(in - 1));
            const auto i0 = static_cast<std::size_t>(src);
            v[o] = {i0, std::min(i0 + 1, in - 1), src - static_cast<double>(i0)};
        }
        return v;
    };
    const auto ty = taps(H, out_h);
    const auto tx = taps(W, out_w);
    Tensor out({C, T, out_h, out_w});
    const auto src = frames.data();
    auto dst = out.data_mut();
    for (std::size_t p = 0; p < C * T; ++p) {
        const double* in = src.data() + p * H * W;
        double* o = dst.data() + p * out_h * out_w;
        for (std::size_t y = 0; y < out_h; ++y) {
            const double* r0 = in + ty[y].i0 * W;
            const double* r1 = in + ty[y].i1 * W;
            for (std::size_t x = 0; x < out_w; ++x) {
                const auto& t = tx[x];
                const double top = r0[t.i0] + t.w * (r0[t.i1] - r0[t.i0]);
                const double bot = r1[t.i0] + t.w * (r1[t.i1] - r1[t.i0]);
                o[y * out_w + x] = top + ty[y].w * (bot - top);
            }
        }
    }
    return out;
}

ChunkResult chunk_and_resize(const ClipRecord& rec, std::size_t chunk_len, std::size_t out_h, std::size_t out_w,
                             ChunkMode mode, std::uint64_t seed) {
    if (chunk_len == 0) throw ArgumentError("chunk length must be positive");
    ChunkResult res;
    const std::size_t T = rec.frames.size(1);
    if (T < chunk_len) {
        res.skipped = true;
        return res;
    }
    if (mode == ChunkMode::train) {
        std::mt19937_64 rng(seed);
        res.offsets.push_back(std::uniform_int_distribution<std::size_t>(0, T - chunk_len)(rng));
    } else {
        for (std::size_t o = 0; o + chunk_len <= T; o += chunk_len) res.offsets.push_back(o);
    }
    for (std::size_t off : res.offsets) {
        ClipRecord c;
        c.id = rec.id + "@" + std::to_string(off);
        c.fs = rec.fs;
        c.seed = rec.seed;
        c.config_hash = rec.config_hash;
        c.gt_mean_bpm = rec.gt_mean_bpm;
        c.label.assign(rec.label.begin() + static_cast<std::ptrdiff_t>(off),
                       rec.label.begin() + static_cast<std::ptrdiff_t>(off + chunk_len));
        c.frames = resize_bilinear(ops::slice(rec.frames, 1, off, chunk_len), out_h, out_w);
        res.chunks.push_back(std::move(c));
    }
    return res;
}

}  // namespace physmamba::synth
