// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "physmamba/tensor.hpp"

namespace physmamba::synth {

enum class HrMode { piecewise, linear };

struct SynthConfig {
    std::uint64_t seed = 0;
    double fs = 30.0;
    double duration_s = 10.0;
    std::size_t height = 64;
    std::size_t width = 64;
    std::array<double, 3> base_color{0.75, 0.55, 0.45};  // R, G, B inside the skin mask
    double pulse_amplitude = 0.02;                          // fraction of the base color
    std::vector<double> hr_bpm{75.0};                       // knots of the heart-rate profile
    HrMode hr_mode = HrMode::piecewise;
    double noise_sigma = 0.0;
    double motion_amplitude_px = 0.0;                       // horizontal sway at 0.2 Hz
    double skin_fraction = 0.7;                             // ellipse semi-axes relative to half the frame

    /// Raises ConfigError on invalid values.
    void validate() const;
    std::size_t frame_count() const;
    /// Heart rate in bpm at time t.
    double hr_at(double t) const;
    std::string canonical() const;
};

/// Channel weights of the pulse in the skin mask (R, G, B).
inline constexpr std::array<double, 3> kPulseChannelWeights{0.5, 1.0, 0.3};

struct ClipRecord {
    std::string id;
    Tensor frames;              // (3,T,H,W), values in [0,1]
    std::vector<double> label;  // pulse waveform, length T
    double fs = 30.0;
    std::uint64_t seed = 0;
    std::uint64_t config_hash = 0;
    double gt_mean_bpm = 0.0;
};

/// Deterministic in config.seed.
ClipRecord generate_clip(const SynthConfig& config, const std::string& id = "clip");

/// Writes one directory per clip (meta.json, frames.f32, label.f32). Values are stored as float32.
void write_dataset(const std::filesystem::path& dir, const std::vector<ClipRecord>& records);
/// Reads every clip directory under dir in name order. Corrupt data raises FormatError naming the file.
std::vector<ClipRecord> read_dataset(const std::filesystem::path& dir);
void write_clip(const std::filesystem::path& clip_dir, const ClipRecord& record);
ClipRecord read_clip(const std::filesystem::path& clip_dir);

enum class ChunkMode { train, eval };

struct ChunkResult {
    std::vector<ClipRecord> chunks;
    std::vector<std::size_t> offsets;  // first frame of each chunk
    bool skipped = false;              // clip shorter than chunk_len
};

/// Train mode: one window at a seeded random offset. Eval mode: non-overlapping
/// windows from frame 0, tail dropped. Frames are resized bilinearly to out_h x out_w.
ChunkResult chunk_and_resize(const ClipRecord& record, std::size_t chunk_len, std::size_t out_h, std::size_t out_w,
                             ChunkMode mode, std::uint64_t seed = 0);

/// Bilinear resize with half-pixel centers of (C,T,H,W) frames.
Tensor resize_bilinear(const Tensor& frames, std::size_t out_h, std::size_t out_w);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(const std::string& text);

}  // namespace physmamba::synth
