// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "physmamba/model.hpp"
#include "physmamba/nn.hpp"
#include "physmamba/signal.hpp"
#include "physmamba/synth.hpp"

namespace physmamba::training {

struct TrainConfig {
    double lr = 3e-3;
    double weight_decay = 5e-4;
    std::size_t epochs = 20;
    std::size_t batch_size = 4;
    std::uint64_t seed = 0;      // shuffling and window sampling
    std::size_t chunk_len = 128;
    std::size_t height = 128;
    std::size_t width = 128;
    std::size_t windows_per_clip = 1;  // random windows drawn per clip
    bool resample_windows = true;      // false: the same windows every epoch
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    /// Raises ConfigError on invalid values.
    void validate() const;
    std::string canonical() const;
};

struct AdamState {
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;
    std::uint64_t step = 0;
};

struct AdamOptions {
    double lr = 3e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0;
};

/// One bias-corrected Adam update with L2 weight decay added to the gradient.
/// Parameters without a gradient are treated as having a zero gradient.
/// Raises NumericError naming the parameter on a non-finite gradient; nothing is updated then.
void adam_step(const std::vector<nn::NamedParam>& params, AdamState& state, const AdamOptions& opts);

struct CheckpointTensor {
    std::string name;
    Shape shape;
    std::vector<double> values;
};

struct Checkpoint {
    static constexpr std::uint8_t kFormatVersion = 1;

    std::uint8_t version = kFormatVersion;
    std::uint64_t config_hash = 0;
    std::string model_config;  // ModelConfig::canonical()
    std::string train_config;  // TrainConfig::canonical()
    std::size_t epoch = 0;     // completed epochs
    std::uint64_t step = 0;    // optimizer steps
    std::vector<CheckpointTensor> tensors;  // param/*, buffer/*, adam_m/*, adam_v/*
};

/// Writes dir/meta.json and dir/tensors.bin (magic "PMCK", version byte, float32 little-endian arrays).
void save_checkpoint(const std::filesystem::path& dir, const Checkpoint& ckpt);
/// Raises FormatError on version, checksum, or layout mismatch.
Checkpoint load_checkpoint(const std::filesystem::path& dir);

/// Snapshot of model parameters, buffers, and optimizer state.
Checkpoint capture(const model::PhysMamba& net, const AdamState& adam, const TrainConfig& tcfg, std::size_t epoch);
/// Restores a snapshot into a model built from the same config. Raises ConfigError on hash mismatch.
void restore(const Checkpoint& ckpt, model::PhysMamba& net, AdamState* adam);

/// Rounds parameters, buffers, and optimizer moments to float32.
void quantize_state(model::PhysMamba& net, AdamState& adam);

/// Network input and target from a raw chunk: diff-normalized frames and label,
/// each padded with a trailing zero frame to keep the chunk length.
Tensor prepare_input(const synth::ClipRecord& chunk);
std::vector<double> prepare_target(const synth::ClipRecord& chunk);

struct EpochStats {
    std::size_t epoch = 0;
    double mean_loss = 0.0;
    std::size_t steps = 0;
};

struct TrainOptions {
    std::filesystem::path out_dir;                 // loss.csv and checkpoints/epoch_NNN
    std::optional<std::filesystem::path> resume;   // checkpoint directory to continue from
    std::size_t stop_after_epoch = 0;              // nonzero: stop once this many epochs are complete
    std::function<void(const std::string&)> log;   // progress and warnings
};

struct TrainResult {
    std::vector<EpochStats> epochs;
    Checkpoint final_checkpoint;
};

/// Seeded training on the clips in memory. Raises NumericError naming the batch on a non-finite loss.
TrainResult train_loop(const model::ModelConfig& mcfg, const std::vector<synth::ClipRecord>& clips,
                       const TrainConfig& tcfg, const TrainOptions& opts);
TrainResult train_loop(const model::ModelConfig& mcfg, const std::filesystem::path& dataset, const TrainConfig& tcfg,
                       const TrainOptions& opts);

/// Maps one prepared chunk to a predicted trace of the chunk's length.
using Predictor = std::function<std::vector<double>(const synth::ClipRecord& chunk)>;

struct EvalResult {
    std::vector<signal::ClipResult> rows;
    signal::MetricsReport metrics;
    std::vector<std::vector<double>> predicted;  // concatenated prediction per evaluated clip
    std::vector<std::vector<double>> reference;  // ground-truth label over the same frames
    std::vector<std::string> skipped;
};

/// Tiles each clip into chunks, concatenates the chunk predictions, and compares
/// the HR of the prediction with the HR of the label over the tiled frames.
/// Clips too short for one chunk or for HR estimation are listed in skipped.
EvalResult evaluate(const std::vector<synth::ClipRecord>& clips, const Predictor& predict, std::size_t chunk_len,
                    std::size_t height, std::size_t width);

/// Eval-mode network predictor; each chunk output is standardized.
Predictor network_predictor(model::PhysMamba& net);

/// Evaluates a checkpoint. When expected is given its hash must match the checkpoint.
EvalResult evaluate_checkpoint(const Checkpoint& ckpt, const std::vector<synth::ClipRecord>& clips,
                               const std::optional<model::ModelConfig>& expected = std::nullopt);

/// Parses "key=value" lines (# comments) into a ModelConfig / TrainConfig; unknown keys raise ConfigError.
model::ModelConfig parse_model_config(const std::string& text);
TrainConfig parse_train_config(const std::string& text);

void write_loss_csv_header(const std::filesystem::path& path);

}  // namespace physmamba::training
