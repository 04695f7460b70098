// SPDX-License-Identifier: Apache-2.0
#include <sstream>

#include "physmamba/errors.hpp"
#include "physmamba/format.hpp"
#include "physmamba/model.hpp"
#include "physmamba/ops.hpp"

namespace physmamba::model {

void ModelConfig::validate() const {
    if (in_channels == 0) throw ConfigError("in_channels must be positive");
    if (channels < 4 || channels % 4 != 0) throw ConfigError("channels must be a positive multiple of 4");
    if (blocks_per_stream == 0) throw ConfigError("blocks_per_stream must be at least 1");
    if (!(theta >= 0.0 && theta <= 1.0)) throw ConfigError("theta must lie in [0,1]");
    if (state_dim == 0 || expand == 0) throw ConfigError("state_dim and expand must be positive");
    if (ca_ratio == 0 || (channels / 2) % ca_ratio != 0) {
        throw ConfigError("ca_ratio must divide both stream widths (" + std::to_string(channels) + ", " +
                          std::to_string(channels / 2) + ")");
    }
}

void ModelConfig::validate_input(std::size_t frames, std::size_t height, std::size_t width) const {
    if (frames == 0 || frames % 4 != 0) throw ConfigError("frame count must be a positive multiple of 4");
    if (height == 0 || height % 16 != 0 || width == 0 || width % 16 != 0) {
        throw ConfigError("height and width must be positive multiples of 16");
    }
}

std::string ModelConfig::canonical() const {
    std::ostringstream os;
    os << "in_channels=" << in_channels << "\nchannels=" << channels << "\nblocks_per_stream=" << blocks_per_stream
       << "\ntheta=" << format_double(theta) << "\nstate_dim=" << state_dim << "\nexpand=" << expand << "\nca_ratio=" << ca_ratio
       << "\nseed=" << seed << "\n";
    return os.str();
}

Tensor tdc_forward(const Tensor& x, const Tensor& w, double theta) {
    if (!(theta >= 0.0 && theta <= 1.0)) throw ConfigError("TDC theta must lie in [0,1]");
    if (w.dim() != 5 || w.size(2) != 3) throw DimensionError("TDC kernel must be (Cout,Cin,3,kh,kw), got " + shape_str(w.shape()));
    const ops::Triple pad{w.size(2) / 2, w.size(3) / 2, w.size(4) / 2};
    const Tensor vanilla = ops::conv3d(x, w, std::nullopt, {1, 1, 1}, pad);
    if (theta == 0.0) return vanilla;
    // kernel mass of the adjacent time planes, as a 1x1x1 kernel
    const Tensor planes = ops::add(ops::slice(w, 2, 0, 1), ops::slice(w, 2, 2, 1));
    const Tensor mass = ops::sum(ops::sum(planes, 4, true), 3, true);
    const Tensor diff = ops::conv3d(x, mass, std::nullopt, {1, 1, 1}, {0, 0, 0});
    return ops::sub(vanilla, ops::scale(diff, theta));
}

ChannelAttention::ChannelAttention(std::size_t channels, std::size_t ratio, std::mt19937_64& rng)
    : fc1(channels, channels / ratio, true, rng), fc2(channels / ratio, channels, true, rng) {
    if (ratio == 0 || channels % ratio != 0) throw ConfigError("channel attention ratio must divide the channel count");
}

Tensor ChannelAttention::gates(const Tensor& x) const {
    if (x.dim() != 5) throw DimensionError("channel attention expects (B,C,T,H,W), got " + shape_str(x.shape()));
    const Tensor squeezed = ops::mean(x, {2, 3, 4});
    return ops::sigmoid(fc2(ops::relu(fc1(squeezed))));
}

Tensor ChannelAttention::operator()(const Tensor& x) const {
    const Tensor g = ops::reshape(gates(x), {x.size(0), x.size(1), 1, 1, 1});
    return ops::mul(x, ops::broadcast_to(g, x.shape()));
}

void ChannelAttention::collect(const std::string& prefix, nn::Registry& reg) {
    fc1.collect(prefix + ".fc1", reg);
    fc2.collect(prefix + ".fc2", reg);
}

TDMambaBlock::TDMambaBlock(std::size_t channels_, const ModelConfig& cfg, std::mt19937_64& rng)
    : channels(channels_),
      theta(cfg.theta),
      max_sequence_elements(cfg.max_sequence_elements),
      tdc_weight(nn::init_fan_in({channels_, channels_, 3, 3, 3}, channels_ * 27, rng)),
      bn(channels_),
      mamba(channels_, cfg.expand, cfg.state_dim, rng),
      norm_out(channels_),
      ca(channels_, cfg.ca_ratio, rng) {}

Tensor TDMambaBlock::operator()(const Tensor& f, bool training) {
    if (f.dim() != 5 || f.size(1) != channels) {
        throw DimensionError("TD-Mamba block expects (B," + std::to_string(channels) + ",T,H,W), got " +
                             shape_str(f.shape()));
    }
    const std::size_t B = f.size(0), T = f.size(2), H = f.size(3), W = f.size(4);
    const std::size_t L = T * H * W;
    if (L * channels > max_sequence_elements) {
        throw CapacityError("flattened sequence of " + std::to_string(L) + " tokens x " + std::to_string(channels) +
                            " channels exceeds the budget of " + std::to_string(max_sequence_elements));
    }
    const Tensor h = ops::relu(bn(tdc_forward(f, tdc_weight, theta), training));
    const Tensor seq = ops::reshape(ops::permute(h, {0, 2, 3, 4, 1}), {B, L, channels});
    const Tensor mixed = norm_out(ops::add(mamba(seq), seq));
    const Tensor back = ops::permute(ops::reshape(mixed, {B, T, H, W, channels}), {0, 4, 1, 2, 3});
    return ca(back);
}

void TDMambaBlock::collect(const std::string& prefix, nn::Registry& reg) {
    reg.add_param(prefix + ".tdc.weight", tdc_weight);
    bn.collect(prefix + ".bn", reg);
    mamba.collect(prefix + ".mamba", reg);
    norm_out.collect(prefix + ".norm_out", reg);
    ca.collect(prefix + ".ca", reg);
}

ConvBnRelu::ConvBnRelu(std::size_t cin, std::size_t cout, ops::Triple kernel, ops::Triple stride,
                       ops::Triple padding, std::mt19937_64& rng)
    : conv(cin, cout, kernel, stride, padding, false, rng), bn(cout) {}

Tensor ConvBnRelu::operator()(const Tensor& x, bool training) { return ops::relu(bn(conv(x), training)); }

void ConvBnRelu::collect(const std::string& prefix, nn::Registry& reg) {
    conv.collect(prefix + ".conv", reg);
    bn.collect(prefix + ".bn", reg);
}

Stem::Stem(const ModelConfig& cfg, std::mt19937_64& rng) {
    const std::size_t C = cfg.channels;
    conv1 = ConvBnRelu(cfg.in_channels, C / 4, {1, 5, 5}, {1, 1, 1}, {0, 2, 2}, rng);
    conv2 = ConvBnRelu(C / 4, C / 2, {3, 3, 3}, {1, 1, 1}, {1, 1, 1}, rng);
    conv3 = ConvBnRelu(C / 2, C, {3, 3, 3}, {1, 1, 1}, {1, 1, 1}, rng);
    slow_conv = ConvBnRelu(C, C, {3, 1, 1}, {4, 1, 1}, {1, 0, 0}, rng);
    fast_conv = ConvBnRelu(C, C / 2, {3, 1, 1}, {2, 1, 1}, {1, 0, 0}, rng);
}

StreamPair Stem::operator()(const Tensor& x, bool training) {
    if (x.dim() != 5) throw DimensionError("stem expects (B,C,T,H,W), got " + shape_str(x.shape()));
    if (x.size(2) % 4 != 0 || x.size(3) % 4 != 0 || x.size(4) % 4 != 0) {
        throw ConfigError("stem needs T, H and W divisible by 4, got " + shape_str(x.shape()));
    }
    Tensor h = ops::maxpool3d(conv1(x, training), {1, 2, 2}, {1, 2, 2});
    h = conv2(h, training);
    h = ops::maxpool3d(conv3(h, training), {1, 2, 2}, {1, 2, 2});
    return {slow_conv(h, training), fast_conv(h, training)};
}

void Stem::collect(const std::string& prefix, nn::Registry& reg) {
    conv1.collect(prefix + ".conv1", reg);
    conv2.collect(prefix + ".conv2", reg);
    conv3.collect(prefix + ".conv3", reg);
    slow_conv.collect(prefix + ".slow", reg);
    fast_conv.collect(prefix + ".fast", reg);
}

Lateral::Lateral(std::size_t fast_channels, std::size_t slow_channels, std::mt19937_64& rng)
    : conv(fast_channels, slow_channels, {3, 1, 1}, {2, 1, 1}, {1, 0, 0}, false, rng) {}

Tensor Lateral::operator()(const Tensor& fast) const {
    if (fast.dim() != 5 || fast.size(2) % 2 != 0) {
        throw DimensionError("lateral input needs an even temporal length, got " + shape_str(fast.shape()));
    }
    return conv(fast);
}

Tensor Lateral::fuse(const Tensor& slow, const Tensor& fast) const {
    const Tensor lat = (*this)(fast);
    if (lat.shape() != slow.shape()) {
        throw DimensionError("lateral output " + shape_str(lat.shape()) + " does not match slow stream " +
                             shape_str(slow.shape()));
    }
    return ops::add(slow, lat);
}

void Lateral::collect(const std::string& prefix, nn::Registry& reg) { conv.collect(prefix + ".conv", reg); }

Head::Head(std::size_t slow_channels, std::size_t fast_channels, std::mt19937_64& rng)
    : bn(fast_channels), proj(fast_channels, 1, true, rng) {
    const std::size_t cin = slow_channels + fast_channels;
    up_weight = nn::init_fan_in({cin, fast_channels, 4}, cin * 4, rng);
    up_bias = nn::init_fan_in({fast_channels}, cin * 4, rng);
}

Tensor Head::operator()(const Tensor& slow, const Tensor& fast, bool training) {
    const Tensor up = ops::repeat_interleave(slow, 2, 2);
    if (up.dim() != 5 || fast.dim() != 5 || up.size(2) != fast.size(2) || up.size(3) != fast.size(3) ||
        up.size(4) != fast.size(4) || up.size(0) != fast.size(0)) {
        throw DimensionError("head cannot concatenate upsampled slow " + shape_str(up.shape()) + " with fast " +
                             shape_str(fast.shape()));
    }
    const Tensor pooled = ops::avgpool_spatial(ops::concat({up, fast}, 1));  // (B,1.5C,T/2)
    const Tensor signal = ops::relu(bn(ops::conv_transpose1d(pooled, up_weight, up_bias, 2, 1), training));
    const std::size_t B = signal.size(0), T = signal.size(2);
    return ops::reshape(proj(ops::permute(signal, {0, 2, 1})), {B, T});
}

void Head::collect(const std::string& prefix, nn::Registry& reg) {
    reg.add_param(prefix + ".up.weight", up_weight);
    reg.add_param(prefix + ".up.bias", up_bias);
    bn.collect(prefix + ".bn", reg);
    proj.collect(prefix + ".proj", reg);
}

}  // namespace physmamba::model
