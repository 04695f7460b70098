// SPDX-License-Identifier: Apache-2.0
#include "physmamba/model.hpp"
#include "physmamba/ops.hpp"

namespace physmamba::model {

namespace {

using u64 = std::uint64_t;

struct Extent {
    u64 t, h, w;
    u64 volume() const { return t * h * w; }
};

class Accumulator {
public:
    explicit Accumulator(Profile& p) : p_(p) {}

    void add(std::string name, u64 params, u64 macs) {
        p_.params += params;
        p_.macs += macs;
        p_.layers.push_back({std::move(name), params, macs});
    }

    // bias-free conv followed by BN (2 affine parameters per channel)
    Extent conv_bn(const std::string& name, u64 cin, u64 cout, ops::Triple k, ops::Triple s, ops::Triple pad,
                   Extent in) {
        const Extent out{ops::conv_out_extent(in.t, k[0], s[0], pad[0]), ops::conv_out_extent(in.h, k[1], s[1], pad[1]),
                         ops::conv_out_extent(in.w, k[2], s[2], pad[2])};
        const u64 kvol = u64{k[0]} * k[1] * k[2];
        add(name + ".conv", cout * cin * kvol, cout * cin * kvol * out.volume());
        add(name + ".bn", 2 * cout, 0);
        return out;
    }

    void block(const std::string& name, const ModelConfig& cfg, u64 C, Extent e) {
        const u64 L = e.volume();
        add(name + ".tdc", C * C * 27, C * C * 27 * L + (cfg.theta != 0.0 ? C * C * L : 0));
        add(name + ".bn", 2 * C, 0);
        const u64 Di = cfg.expand * C;
        const u64 N = cfg.state_dim;
        const u64 R = ssm::BiMamba::dt_rank_for(C);
        add(name + ".mamba.norm", 2 * C, 0);
        add(name + ".mamba.in_proj", C * 2 * Di, L * C * 2 * Di);
        // the depthwise conv is shared but runs once per direction
        add(name + ".mamba.conv1d", Di * 4 + Di, 2 * L * Di * 4);
        for (const char* dir : {"fwd", "bwd"}) {
            const std::string p = name + ".mamba.ssm_" + dir;
            add(p + ".a_log", Di * N, 0);
            add(p + ".x_proj", (R + 2 * N) * Di, L * Di * (R + 2 * N));
            add(p + ".dt_proj", Di * R + Di, L * R * Di);
            add(p + ".scan", 0, 3 * L * Di * N);
        }
        add(name + ".mamba.out_proj", Di * C, L * Di * C);
        add(name + ".norm_out", 2 * C, 0);
        const u64 Cr = C / cfg.ca_ratio;
        add(name + ".ca", C * Cr + Cr + Cr * C + C, 2 * C * Cr);
    }

private:
    Profile& p_;
};

}  // namespace

Profile profile_model(const ModelConfig& cfg, std::size_t frames, std::size_t height, std::size_t width) {
    cfg.validate();
    cfg.validate_input(frames, height, width);
    Profile prof;
    Accumulator acc(prof);
    const u64 C = cfg.channels;
    Extent e{frames, height, width};
    e = acc.conv_bn("stem.conv1", cfg.in_channels, C / 4, {1, 5, 5}, {1, 1, 1}, {0, 2, 2}, e);
    e = {e.t, e.h / 2, e.w / 2};
    e = acc.conv_bn("stem.conv2", C / 4, C / 2, {3, 3, 3}, {1, 1, 1}, {1, 1, 1}, e);
    e = acc.conv_bn("stem.conv3", C / 2, C, {3, 3, 3}, {1, 1, 1}, {1, 1, 1}, e);
    e = {e.t, e.h / 2, e.w / 2};
    Extent slow = acc.conv_bn("stem.slow", C, C, {3, 1, 1}, {4, 1, 1}, {1, 0, 0}, e);
    Extent fast = acc.conv_bn("stem.fast", C, C / 2, {3, 1, 1}, {2, 1, 1}, {1, 0, 0}, e);

    for (std::size_t i = 0; i < cfg.blocks_per_stream; ++i) {
        acc.block("slow." + std::to_string(i), cfg, C, slow);
        acc.block("fast." + std::to_string(i), cfg, C / 2, fast);
        if (i < pooled_blocks(cfg)) {
            slow = {slow.t, slow.h / 2, slow.w / 2};
            fast = {fast.t, fast.h / 2, fast.w / 2};
            const u64 out_t = ops::conv_out_extent(fast.t, 3, 2, 1);
            acc.add("lateral." + std::to_string(i), (C / 2) * C * 3, (C / 2) * C * 3 * out_t * fast.h * fast.w);
        }
    }

    const u64 cin = C + C / 2;
    const u64 cout = C / 2;
    const u64 t_half = fast.t;
    acc.add("head.up", cin * cout * 4 + cout, cin * cout * 4 * t_half);
    acc.add("head.bn", 2 * cout, 0);
    acc.add("head.proj", cout + 1, cout * frames);
    return prof;
}

}  // namespace physmamba::model
