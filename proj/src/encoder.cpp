// Distributed under the Apache License, Version 2.0.
// See the accompanying LICENSE file or http://www.apache.org/licenses/LICENSE-2.0

#include "mst/encoder.hpp"

#include <cmath>

namespace mst {

AttentionBlock::AttentionBlock(std::size_t tokens_per_frame, const HyperParams& hp,
                               const std::string& prefix, Rng& rng, ParamList& reg)
    : tokens_(tokens_per_frame), d_(hp.embed_dim), heads_(hp.heads) {
    const std::size_t hd = hp.heads * hp.proj_dim;
    const std::size_t w = tokens_ * d_;
    const std::size_t thd = hp.heads * tokens_ * hp.proj_dim;

    p_ln_g = register_param(reg, prefix + ".part.ln.g", Tensor::full({d_}, 1.0, true));
    p_ln_b = register_param(reg, prefix + ".part.ln.b", Tensor::zeros({d_}, true));
    p_wq = register_param(reg, prefix + ".part.wq", init_normal(rng, {d_, hd}));
    p_wk = register_param(reg, prefix + ".part.wk", init_normal(rng, {d_, hd}));
    p_wv = register_param(reg, prefix + ".part.wv", init_normal(rng, {d_, hd}));
    p_wo = register_param(reg, prefix + ".part.wo", init_normal(rng, {hd, d_}));

    t_ln_g = register_param(reg, prefix + ".temporal.ln.g", Tensor::full({w}, 1.0, true));
    t_ln_b = register_param(reg, prefix + ".temporal.ln.b", Tensor::zeros({w}, true));
    t_wq = register_param(reg, prefix + ".temporal.wq", init_normal(rng, {w, thd}));
    t_wk = register_param(reg, prefix + ".temporal.wk", init_normal(rng, {w, thd}));
    t_wv = register_param(reg, prefix + ".temporal.wv", init_normal(rng, {w, thd}));
    t_wo = register_param(reg, prefix + ".temporal.wo", init_normal(rng, {thd, w}));
}

Tensor AttentionBlock::part_attention(const Tensor& x, const Tensor& e,
                                      AttentionResult* maps) const {
    const Tensor base = add(x, e);
    const std::size_t rows = base.rows();
    const Tensor flat = reshape(base, {rows * tokens_, d_});
    const Tensor ln = layer_norm(flat, p_ln_g, p_ln_b);
    const double sc = 1.0 / std::sqrt(static_cast<double>(d_));
    AttentionResult att = attention_groups(matmul(ln, p_wq), matmul(ln, p_wk), matmul(ln, p_wv),
                                           heads_, sc, tokens_);
    if (maps) *maps = att;
    const Tensor proj = reshape(matmul(att.out, p_wo), {rows, tokens_ * d_});
    return add(proj, base);
}

Tensor AttentionBlock::temporal_attention(const Tensor& x, const Tensor& e,
                                          const std::vector<std::uint8_t>& key_valid,
                                          AttentionResult* maps) const {
    const Tensor base = add(x, e);
    const std::size_t w = tokens_ * d_;
    const Tensor ln = layer_norm(base, t_ln_g, t_ln_b);
    const double sc = 1.0 / std::sqrt(static_cast<double>(w));
    AttentionResult att = attention_masked(matmul(ln, t_wq), matmul(ln, t_wk), matmul(ln, t_wv),
                                           heads_, sc, key_valid);
    if (maps) *maps = att;
    return add(matmul(att.out, t_wo), base);
}

Tensor AttentionBlock::apply(const Tensor& x, const Tensor& e,
                             const std::vector<std::uint8_t>& key_valid,
                             AttentionResult* part_maps, AttentionResult* temporal_maps) const {
    return temporal_attention(part_attention(x, e, part_maps), e, key_valid, temporal_maps);
}

Encoder::Encoder(const PartGrouping& grouping, const HyperParams& hp, Rng& rng, ParamList& reg)
    : tokens_(grouping.parts() + 1),
      d_(hp.embed_dim),
      embed_(grouping, hp, "encoder.embed", rng, reg) {
    const std::size_t w = tokens_ * d_;
    style_token_ = register_param(reg, "encoder.style_token", init_normal(rng, {1, w}));
    pos_ = register_param(reg, "encoder.pos", init_normal(rng, {hp.t_max + 1, w}));
    for (std::size_t b = 0; b < hp.blocks; ++b)
        blocks_.emplace_back(tokens_, hp, "encoder.block" + std::to_string(b), rng, reg);
}

Tensor Encoder::instance_norm(const Tensor& frame_rows,
                              const std::vector<std::uint8_t>& frame_valid) const {
    const std::size_t t = frame_rows.rows();
    const Tensor flat = reshape(frame_rows, {t * tokens_, d_});
    std::vector<std::uint8_t> pos_valid(t * tokens_, 0);
    for (std::size_t f = 0; f < t; ++f)
        if (frame_valid[f])
            std::fill_n(pos_valid.begin() + static_cast<std::ptrdiff_t>(f * tokens_), tokens_, 1);
    auto [mu, sigma] = channel_stats(flat, pos_valid);
    const Tensor normed = div_lastdim(sub_lastdim(flat, mu), sigma);
    return reshape(normed, {t, tokens_ * d_});
}

EncodeOut Encoder::encode(const MotionTensors& mt, std::vector<AttentionResult>* maps) const {
    const std::size_t t = mt.frame_valid.size();
    const Tensor x = embed_.embed(mt);
    Tensor z = concat_rows({style_token_, x});  // [(t+1) x (P+1)d]

    std::vector<std::uint8_t> z_valid(t + 1, 0);
    z_valid[0] = 1;  // the style token row is always attendable
    std::copy(mt.frame_valid.begin(), mt.frame_valid.end(), z_valid.begin() + 1);

    auto run_block = [&maps](const AttentionBlock& block, const Tensor& in, const Tensor& e,
                             const std::vector<std::uint8_t>& valid) {
        if (!maps) return block.apply(in, e, valid);
        AttentionResult part, temporal;
        const Tensor out = block.apply(in, e, valid, &part, &temporal);
        maps->push_back(part);
        maps->push_back(temporal);
        return out;
    };

    for (std::size_t b = 0; b + 1 < blocks_.size(); ++b) z = run_block(blocks_[b], z, pos_, z_valid);

    EncodeOut out;
    out.frame_valid = mt.frame_valid;
    out.t_actual = mt.t_actual;
    out.style = reshape(slice_rows(z, 0, 1), {tokens_, d_});

    const Tensor frames = slice_rows(z, 1, t + 1);
    const Tensor normed = instance_norm(frames, mt.frame_valid);
    const Tensor pos_frames = slice_rows(pos_, 1, t + 1);
    out.dynamics = run_block(blocks_.back(), normed, pos_frames, mt.frame_valid);
    return out;
}

}  // namespace mst
