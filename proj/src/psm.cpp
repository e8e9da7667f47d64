// Distributed under the Apache License, Version 2.0.
// See the accompanying LICENSE file or http://www.apache.org/licenses/LICENSE-2.0

#include "mst/psm.hpp"

#include <cmath>

namespace mst {

Psm::Psm(std::size_t tokens, const HyperParams& hp, Rng& rng, ParamList& reg)
    : tokens_(tokens), d_(hp.embed_dim), heads_(hp.heads) {
    const std::size_t hd = hp.heads * hp.proj_dim;
    part_pos_ = register_param(reg, "psm.part_pos", init_normal(rng, {tokens_, d_}));
    ln_q_g = register_param(reg, "psm.ln_q.g", Tensor::full({d_}, 1.0, true));
    ln_q_b = register_param(reg, "psm.ln_q.b", Tensor::zeros({d_}, true));
    ln_k_g = register_param(reg, "psm.ln_k.g", Tensor::full({d_}, 1.0, true));
    ln_k_b = register_param(reg, "psm.ln_k.b", Tensor::zeros({d_}, true));
    ln_v_g = register_param(reg, "psm.ln_v.g", Tensor::full({d_}, 1.0, true));
    ln_v_b = register_param(reg, "psm.ln_v.b", Tensor::zeros({d_}, true));
    wq_ = register_param(reg, "psm.wq", init_normal(rng, {d_, hd}));
    wk_ = register_param(reg, "psm.wk", init_normal(rng, {d_, hd}));
    wv_ = register_param(reg, "psm.wv", init_normal(rng, {d_, hd}));
    wh_ = register_param(reg, "psm.wh", init_normal(rng, {hd, d_}));
    fc_w_ = register_param(reg, "psm.fc.w", init_normal(rng, {d_, d_}));
    fc_b_ = register_param(reg, "psm.fc.b", init_normal(rng, {d_}));
    ln_m_g = register_param(reg, "psm.ln_mlp.g", Tensor::full({d_}, 1.0, true));
    ln_m_b = register_param(reg, "psm.ln_mlp.b", Tensor::zeros({d_}, true));
    mlp_w1_ = register_param(reg, "psm.mlp.w1", init_normal(rng, {d_, hp.mlp_hidden}));
    mlp_b1_ = register_param(reg, "psm.mlp.b1", init_normal(rng, {hp.mlp_hidden}));
    mlp_w2_ = register_param(reg, "psm.mlp.w2", init_normal(rng, {hp.mlp_hidden, d_}));
    mlp_b2_ = register_param(reg, "psm.mlp.b2", init_normal(rng, {d_}));
}

Tensor Psm::cross_attention(const Tensor& content_c, const Tensor& content_s, const Tensor& style_s,
                            AttentionResult* maps) const {
    if (content_c.shape() != std::vector<std::size_t>{tokens_, d_} ||
        content_s.shape() != content_c.shape() || style_s.shape() != content_c.shape())
        throw error("psm: operands must be " + shape_str({tokens_, d_}) + ", got " +
                    shape_str(content_c.shape()) + " / " + shape_str(content_s.shape()) + " / " +
                    shape_str(style_s.shape()));
    const Tensor q_in = layer_norm(add(content_c, part_pos_), ln_q_g, ln_q_b);
    const Tensor k_in = layer_norm(add(content_s, part_pos_), ln_k_g, ln_k_b);
    const Tensor v_in = layer_norm(add(style_s, part_pos_), ln_v_g, ln_v_b);
    const double sc = 1.0 / std::sqrt(static_cast<double>(d_));
    AttentionResult att = attention_groups(matmul(q_in, wq_), matmul(k_in, wk_),
                                           matmul(v_in, wv_), heads_, sc, tokens_);
    if (maps) *maps = att;
    return matmul(att.out, wh_);
}

Psm::Result Psm::modulate(const Tensor& style_s, const Tensor& content_c,
                          const Tensor& content_s) const {
    Result res;
    const Tensor cross = cross_attention(content_c, content_s, style_s, &res.attn);
    const Tensor checked = add(linear(style_s, fc_w_, fc_b_), cross);
    const Tensor mlp_in = layer_norm(checked, ln_m_g, ln_m_b);
    const Tensor hidden = gelu(linear(mlp_in, mlp_w1_, mlp_b1_));
    res.modulated = add(checked, linear(hidden, mlp_w2_, mlp_b2_));
    return res;
}

Tensor temporal_pool(const EncodeOut& enc, std::size_t tokens, std::size_t d) {
    return reshape(mean_rows_masked(enc.dynamics, enc.frame_valid), {tokens, d});
}

}  // namespace mst
