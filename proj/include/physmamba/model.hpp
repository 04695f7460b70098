// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "physmamba/nn.hpp"
#include "physmamba/ssm.hpp"
#include "physmamba/tensor.hpp"

namespace physmamba::model {

struct ModelConfig {
    std::size_t in_channels = 3;
    std::size_t channels = 64;          // slow stream; the fast stream uses channels / 2
    std::size_t blocks_per_stream = 3;
    double theta = 0.5;                 // TDC difference weight
    std::size_t state_dim = 16;
    std::size_t expand = 2;
    std::size_t ca_ratio = 8;
    /// Upper bound on L*C for the flattened sequence inside a TD-Mamba block.
    std::size_t max_sequence_elements = std::size_t{1} << 24;
    std::uint64_t seed = 0;             // parameter initialization

    /// Raises ConfigError on invalid values.
    void validate() const;
    /// Raises ConfigError unless T % 4 == 0 and H, W are multiples of 16.
    void validate_input(std::size_t frames, std::size_t height, std::size_t width) const;
    /// Stable text form, one key=value per line; hashed into checkpoints.
    std::string canonical() const;
};

/// Temporal difference convolution: conv3d(x, w) - theta * x(p0) * sum_{t+-1 planes} w.
/// Zero padding of k/2 on every axis, stride 1. theta == 0 is exactly conv3d.
Tensor tdc_forward(const Tensor& x, const Tensor& w, double theta);

struct ChannelAttention {
    nn::Linear fc1;  // C -> C / ratio
    nn::Linear fc2;  // C / ratio -> C

    ChannelAttention() = default;
    ChannelAttention(std::size_t channels, std::size_t ratio, std::mt19937_64& rng);
    /// Per-channel gates in (0,1), shape (B,C).
    Tensor gates(const Tensor& x) const;
    Tensor operator()(const Tensor& x) const;
    void collect(const std::string& prefix, nn::Registry& reg);
};

struct TDMambaBlock {
    std::size_t channels = 0;
    double theta = 0.5;
    std::size_t max_sequence_elements = 0;
    Tensor tdc_weight;  // (C,C,3,3,3), no bias
    nn::BatchNorm bn;
    ssm::BiMamba mamba;
    nn::LayerNorm norm_out;
    ChannelAttention ca;

    TDMambaBlock() = default;
    TDMambaBlock(std::size_t channels, const ModelConfig& cfg, std::mt19937_64& rng);
    /// (B,C,T,H,W) -> same shape.
    Tensor operator()(const Tensor& f, bool training);
    void collect(const std::string& prefix, nn::Registry& reg);
};

/// conv -> BN -> ReLU.
struct ConvBnRelu {
    nn::Conv3d conv;
    nn::BatchNorm bn;

    ConvBnRelu() = default;
    ConvBnRelu(std::size_t cin, std::size_t cout, ops::Triple kernel, ops::Triple stride, ops::Triple padding,
               std::mt19937_64& rng);
    Tensor operator()(const Tensor& x, bool training);
    void collect(const std::string& prefix, nn::Registry& reg);
};

struct StreamPair {
    Tensor slow;
    Tensor fast;
};

struct Stem {
    ConvBnRelu conv1;      // 1x5x5, in -> C/4, then 1x2x2 maxpool
    ConvBnRelu conv2;      // 3x3x3, C/4 -> C/2
    ConvBnRelu conv3;      // 3x3x3, C/2 -> C, then 1x2x2 maxpool
    ConvBnRelu slow_conv;  // 3x1x1 stride 4 in time, C -> C
    ConvBnRelu fast_conv;  // 3x1x1 stride 2 in time, C -> C/2

    Stem() = default;
    Stem(const ModelConfig& cfg, std::mt19937_64& rng);
    /// (B,3,T,H,W) -> slow (B,C,T/4,H/4,W/4), fast (B,C/2,T/2,H/4,W/4).
    StreamPair operator()(const Tensor& x, bool training);
    void collect(const std::string& prefix, nn::Registry& reg);
};

/// 3x1x1 temporal conv, stride 2, padding 1, no bias: fast (B,C/2,2t,h,w) -> (B,C,t,h,w).
struct Lateral {
    nn::Conv3d conv;

    Lateral() = default;
    Lateral(std::size_t fast_channels, std::size_t slow_channels, std::mt19937_64& rng);
    Tensor operator()(const Tensor& fast) const;
    /// slow + lateral(fast), with a dimension check on the fused shapes.
    Tensor fuse(const Tensor& slow, const Tensor& fast) const;
    void collect(const std::string& prefix, nn::Registry& reg);
};

struct Head {
    Tensor up_weight;  // (1.5C, C/2, 4) transposed conv
    Tensor up_bias;    // (C/2)
    nn::BatchNorm bn;
    nn::Linear proj;   // C/2 -> 1

    Head() = default;
    Head(std::size_t slow_channels, std::size_t fast_channels, std::mt19937_64& rng);
    /// slow (B,C,t,h,w), fast (B,C/2,2t,h,w) -> (B,4t).
    Tensor operator()(const Tensor& slow, const Tensor& fast, bool training);
    void collect(const std::string& prefix, nn::Registry& reg);
};

class PhysMamba {
public:
    explicit PhysMamba(ModelConfig cfg);
    PhysMamba(const PhysMamba&) = delete;
    PhysMamba& operator=(const PhysMamba&) = delete;

    /// (B,3,T,H,W) -> (B,T).
    Tensor forward(const Tensor& x, bool training);

    const ModelConfig& config() const { return cfg_; }
    /// Parameters and BN buffers in a fixed order.
    const nn::Registry& registry() const { return registry_; }

    Stem stem;
    std::vector<TDMambaBlock> slow_blocks;
    std::vector<TDMambaBlock> fast_blocks;
    std::vector<Lateral> laterals;
    Head head;

private:
    ModelConfig cfg_;
    nn::Registry registry_;
};

/// Number of blocks followed by a 1x2x2 maxpool and a lateral connection.
std::size_t pooled_blocks(const ModelConfig& cfg);

struct LayerCost {
    std::string name;
    std::uint64_t params = 0;
    std::uint64_t macs = 0;
};

struct Profile {
    std::uint64_t params = 0;
    std::uint64_t macs = 0;
    std::vector<LayerCost> layers;
};

/// Analytic parameter and multiply-accumulate count for one clip of T x H x W frames.
///
/// MACs cover convolutions, the TDC difference term, linear layers, the
/// depthwise conv and the selective scan (three products per state per token
/// and direction). Normalization, activations, pooling and elementwise gating
/// are not counted.
Profile profile_model(const ModelConfig& cfg, std::size_t frames, std::size_t height, std::size_t width);

}  // namespace physmamba::model
