// Distributed under the Apache License, Version 2.0.
// See the accompanying LICENSE file or http://www.apache.org/licenses/LICENSE-2.0

#include "mst/discriminator.hpp"

namespace mst {

Discriminator::Discriminator(const PartGrouping& grouping, const HyperParams& hp, Rng& rng,
                             ParamList& reg)
    : tokens_(grouping.parts() + 1),
      d_(hp.embed_dim),
      embed_(grouping, hp, "disc.embed", rng, reg) {
    const std::size_t w = tokens_ * d_;
    pos_ = register_param(reg, "disc.pos", init_normal(rng, {hp.t_max, w}));
    block_.emplace_back(tokens_, hp, "disc.block0", rng, reg);
    readout_w_ = register_param(reg, "disc.readout.w", init_normal(rng, {w, 1}));
    readout_b_ = register_param(reg, "disc.readout.b", init_normal(rng, {1}));
}

Tensor Discriminator::discriminate(const MotionTensors& mt) const {
    const Tensor x = embed_.embed(mt);
    const Tensor z = block_[0].apply(x, pos_, mt.frame_valid);
    const Tensor pooled = mean_rows_masked(z, mt.frame_valid);
    return reshape(sigmoid(linear(pooled, readout_w_, readout_b_)), {1});
}

}  // namespace mst
