// Distributed under the Apache License, Version 2.0.
// See the accompanying LICENSE file or http://www.apache.org/licenses/LICENSE-2.0
#pragma once

#include "mst/embedding.hpp"

namespace mst {

/// One transformer block: body-part attention within each frame row, then
/// temporal attention across frame rows on the vectorized (P+1)*d tokens.
/// The positional embedding is added before both stages and rides the
/// residuals. Attention scores are scaled by the inverse square root of the
/// pre-projection token width.
class AttentionBlock {
public:
    AttentionBlock(std::size_t tokens_per_frame, const HyperParams& hp, const std::string& prefix,
                   Rng& rng, ParamList& reg);

    /// Eq-for-eq application: temporal(part(x)). key_valid masks frame rows
    /// for the temporal stage.
    Tensor apply(const Tensor& x, const Tensor& e, const std::vector<std::uint8_t>& key_valid,
                 AttentionResult* part_maps = nullptr, AttentionResult* temporal_maps = nullptr) const;

    /// MHA(LN(x+e)) + (x+e) over the P+1 tokens of every frame row.
    Tensor part_attention(const Tensor& x, const Tensor& e,
                          AttentionResult* maps = nullptr) const;

    /// MHA(LN(x+e)) + (x+e) across frame rows; masked rows get zero weight.
    Tensor temporal_attention(const Tensor& x, const Tensor& e,
                              const std::vector<std::uint8_t>& key_valid,
                              AttentionResult* maps = nullptr) const;

    std::size_t tokens_per_frame() const { return tokens_; }

    // part-stage value projection; exposed so tests can zero it
    Tensor p_wv, p_wo, t_wv, t_wo;

private:
    std::size_t tokens_, d_, heads_;
    Tensor p_ln_g, p_ln_b, p_wq, p_wk;
    Tensor t_ln_g, t_ln_b, t_wq, t_wk;
};

struct EncodeOut {
    Tensor style;     // [(P+1) x d], read from the style-token slot
    Tensor dynamics;  // [t_max x (P+1)*d], instance-normalized lineage
    std::vector<std::uint8_t> frame_valid;
    std::size_t t_actual = 0;
};

/// Siamese motion encoder: one parameter set encodes both inputs. Blocks
/// 1..N-1 run over [style token; frames]; the style feature is the token's
/// output, the remaining rows are instance-normalized over valid positions
/// and passed through block N to give the content dynamics.
class Encoder {
public:
    Encoder(const PartGrouping& grouping, const HyperParams& hp, Rng& rng, ParamList& reg);

    /// maps, when given, collects the part and temporal attention maps of
    /// every block in application order.
    EncodeOut encode(const MotionTensors& mt, std::vector<AttentionResult>* maps = nullptr) const;

    const PartEmbedding& embedding() const { return embed_; }
    const std::vector<AttentionBlock>& blocks() const { return blocks_; }
    Tensor style_token() const { return style_token_; }
    Tensor pos_embedding() const { return pos_; }

    /// The Eq.-8 stage on frame rows: x normalized channel-wise over valid
    /// positions. Exposed for the normalization invariants.
    Tensor instance_norm(const Tensor& frame_rows, const std::vector<std::uint8_t>& frame_valid) const;

    std::size_t tokens_per_frame() const { return tokens_; }
    std::size_t token_dim() const { return d_; }

private:
    std::size_t tokens_, d_;
    PartEmbedding embed_;
    Tensor style_token_;  // [1 x (P+1)*d]
    Tensor pos_;          // [(t_max+1) x (P+1)*d]
    std::vector<AttentionBlock> blocks_;
};

}  // namespace mst
