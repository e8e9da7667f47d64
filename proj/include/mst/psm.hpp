// Distributed under the Apache License, Version 2.0.
// See the accompanying LICENSE file or http://www.apache.org/licenses/LICENSE-2.0
#pragma once

#include "mst/encoder.hpp"

namespace mst {

/// Part-attentive style modulator. Queries come from the content code of the
/// content motion, keys from the content code of the style motion, values
/// from the raw style feature; a part positional embedding is added to all
/// three so parts stay distinguishable. The (P+1)x(P+1) attention maps used
/// in the forward pass are kept for export.
class Psm {
public:
    Psm(std::size_t tokens, const HyperParams& hp, Rng& rng, ParamList& reg);

    struct Result {
        Tensor modulated;      // [(P+1) x d]
        AttentionResult attn;  // cross-attention maps, [1][heads][P+1][P+1]
    };

    Result modulate(const Tensor& style_s, const Tensor& content_c, const Tensor& content_s) const;

    /// Heads concatenated and projected; no residual here (the FC residual
    /// is added by modulate).
    Tensor cross_attention(const Tensor& content_c, const Tensor& content_s, const Tensor& style_s,
                           AttentionResult* maps = nullptr) const;

    Tensor part_pos() const { return part_pos_; }

private:
    std::size_t tokens_, d_, heads_;
    Tensor part_pos_;  // E_p, [(P+1) x d]
    Tensor ln_q_g, ln_q_b, ln_k_g, ln_k_b, ln_v_g, ln_v_b;
    Tensor wq_, wk_, wv_, wh_;
    Tensor fc_w_, fc_b_;
    Tensor ln_m_g, ln_m_b;
    Tensor mlp_w1_, mlp_b1_, mlp_w2_, mlp_b2_;
};

/// Mean of the dynamics feature over valid frames -> [(P+1) x d].
Tensor temporal_pool(const EncodeOut& enc, std::size_t tokens, std::size_t d);

}  // namespace mst
