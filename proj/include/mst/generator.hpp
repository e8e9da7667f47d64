// Distributed under the Apache License, Version 2.0.
// See the accompanying LICENSE file or http://www.apache.org/licenses/LICENSE-2.0
#pragma once

#include "mst/psm.hpp"

namespace mst {

/// Channel-wise renormalization of u to statistics produced from the
/// modulated style feature: gamma * (u - mu)/sigma + beta, with mu/sigma
/// taken over valid positions and gamma/beta each an FC of the flattened
/// style matrix.
Tensor adain(const Tensor& u_frame_rows, std::size_t token_dim, const Tensor& style_flat,
             const Tensor& w_gamma, const Tensor& b_gamma, const Tensor& w_beta,
             const Tensor& b_beta, const std::vector<std::uint8_t>& frame_valid);

/// Motion generator: N blocks of AdaIN -> part attention -> temporal
/// attention over the content dynamics, then per-part joint heads plus root
/// and velocity heads on the global token.
class Generator {
public:
    Generator(const PartGrouping& grouping, const HyperParams& hp, Rng& rng, ParamList& reg);

    /// dynamics: [t_max x (P+1)d] from the encoder; style: [(P+1) x d].
    /// maps, when given, collects per-block part and temporal attention maps.
    MotionTensors generate(const Tensor& dynamics, const Tensor& style,
                           const std::vector<std::uint8_t>& frame_valid, std::size_t t_actual,
                           std::vector<AttentionResult>* maps = nullptr) const;

    const std::vector<AttentionBlock>& blocks() const { return blocks_; }

    struct StyleProjection {
        Tensor w_gamma, b_gamma, w_beta, b_beta;
    };
    const std::vector<StyleProjection>& style_projections() const { return style_proj_; }

private:
    std::size_t tokens_, d_;
    std::vector<std::size_t> part_widths_;  // 7 * N_i per part
    Tensor pos_;                            // [t_max x (P+1)d]
    std::vector<AttentionBlock> blocks_;
    std::vector<StyleProjection> style_proj_;  // one gamma/beta pair per block
    std::vector<Tensor> head_w_, head_b_;      // per part
    Tensor root_w_, root_b_, vel_w_, vel_b_;
};

}  // namespace mst
