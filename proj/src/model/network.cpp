// SPDX-License-Identifier: Apache-2.0
#include <algorithm>

#include "physmamba/errors.hpp"
#include "physmamba/model.hpp"
#include "physmamba/ops.hpp"

namespace physmamba::model {

std::size_t pooled_blocks(const ModelConfig& cfg) { return std::min<std::size_t>(2, cfg.blocks_per_stream); }

PhysMamba::PhysMamba(ModelConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    std::mt19937_64 rng(cfg_.seed);
    const std::size_t C = cfg_.channels;
    stem = Stem(cfg_, rng);
    for (std::size_t i = 0; i < cfg_.blocks_per_stream; ++i) {
        slow_blocks.emplace_back(C, cfg_, rng);
        fast_blocks.emplace_back(C / 2, cfg_, rng);
    }
    for (std::size_t i = 0; i < pooled_blocks(cfg_); ++i) laterals.emplace_back(C / 2, C, rng);
    head = Head(C, C / 2, rng);

    // members are final from here on; the registry holds pointers into them
    stem.collect("stem", registry_);
    for (std::size_t i = 0; i < slow_blocks.size(); ++i) {
        slow_blocks[i].collect("slow." + std::to_string(i), registry_);
        fast_blocks[i].collect("fast." + std::to_string(i), registry_);
    }
    for (std::size_t i = 0; i < laterals.size(); ++i) laterals[i].collect("lateral." + std::to_string(i), registry_);
    head.collect("head", registry_);
}

Tensor PhysMamba::forward(const Tensor& x, bool training) {
    if (x.dim() != 5 || x.size(1) != cfg_.in_channels) {
        throw DimensionError("PhysMamba expects (B," + std::to_string(cfg_.in_channels) + ",T,H,W), got " +
                             shape_str(x.shape()));
    }
    cfg_.validate_input(x.size(2), x.size(3), x.size(4));
    auto [slow, fast] = stem(x, training);
    for (std::size_t i = 0; i < cfg_.blocks_per_stream; ++i) {
        slow = slow_blocks[i](slow, training);
        fast = fast_blocks[i](fast, training);
        if (i < laterals.size()) {
            slow = ops::maxpool3d(slow, {1, 2, 2}, {1, 2, 2});
            fast = ops::maxpool3d(fast, {1, 2, 2}, {1, 2, 2});
            slow = laterals[i].fuse(slow, fast);
        }
    }
    return head(slow, fast, training);
}

}  // namespace physmamba::model
