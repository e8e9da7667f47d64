// Distributed under the Apache License, Version 2.0.
// See the accompanying LICENSE file or http://www.apache.org/licenses/LICENSE-2.0

#include "mst/generator.hpp"

namespace mst {

Tensor adain(const Tensor& u_frame_rows, std::size_t token_dim, const Tensor& style_flat,
             const Tensor& w_gamma, const Tensor& b_gamma, const Tensor& w_beta,
             const Tensor& b_beta, const std::vector<std::uint8_t>& frame_valid) {
    const std::size_t t = u_frame_rows.rows();
    const std::size_t w = u_frame_rows.cols();
    if (w % token_dim != 0)
        throw error("adain: row width " + std::to_string(w) + " not a multiple of token dim " +
                    std::to_string(token_dim));
    const std::size_t tokens = w / token_dim;
    const Tensor flat = reshape(u_frame_rows, {t * tokens, token_dim});
    std::vector<std::uint8_t> pos_valid(t * tokens, 0);
    for (std::size_t f = 0; f < t; ++f)
        if (frame_valid[f])
            std::fill_n(pos_valid.begin() + static_cast<std::ptrdiff_t>(f * tokens), tokens, 1);
    auto [mu, sigma] = channel_stats(flat, pos_valid);
    const Tensor normed = div_lastdim(sub_lastdim(flat, mu), sigma);
    const Tensor gamma = reshape(linear(style_flat, w_gamma, b_gamma), {token_dim});
    const Tensor beta = reshape(linear(style_flat, w_beta, b_beta), {token_dim});
    const Tensor out = add_lastdim(mul_lastdim(normed, gamma), beta);
    return reshape(out, {t, w});
}

Generator::Generator(const PartGrouping& grouping, const HyperParams& hp, Rng& rng, ParamList& reg)
    : tokens_(grouping.parts() + 1), d_(hp.embed_dim) {
    const std::size_t w = tokens_ * d_;
    for (std::size_t p = 0; p < grouping.parts(); ++p)
        part_widths_.push_back(grouping.part_size(p) * 7);

    pos_ = register_param(reg, "generator.pos", init_normal(rng, {hp.t_max, w}));
    for (std::size_t b = 0; b < hp.blocks; ++b) {
        blocks_.emplace_back(tokens_, hp, "generator.block" + std::to_string(b), rng, reg);
        StyleProjection sp;
        sp.w_gamma = register_param(reg, "generator.block" + std::to_string(b) + ".gamma.w",
                                    init_normal(rng, {w, d_}));
        sp.b_gamma = register_param(reg, "generator.block" + std::to_string(b) + ".gamma.b",
                                    init_normal(rng, {d_}));
        sp.w_beta = register_param(reg, "generator.block" + std::to_string(b) + ".beta.w",
                                   init_normal(rng, {w, d_}));
        sp.b_beta = register_param(reg, "generator.block" + std::to_string(b) + ".beta.b",
                                   init_normal(rng, {d_}));
        style_proj_.push_back(std::move(sp));
    }
    for (std::size_t p = 0; p < grouping.parts(); ++p) {
        head_w_.push_back(register_param(reg, "generator.head" + std::to_string(p) + ".w",
                                         init_normal(rng, {d_, part_widths_[p]})));
        head_b_.push_back(register_param(reg, "generator.head" + std::to_string(p) + ".b",
                                         init_normal(rng, {part_widths_[p]})));
    }
    root_w_ = register_param(reg, "generator.root.w", init_normal(rng, {d_, 7}));
    root_b_ = register_param(reg, "generator.root.b", init_normal(rng, {7}));
    vel_w_ = register_param(reg, "generator.vel.w", init_normal(rng, {d_, 4}));
    vel_b_ = register_param(reg, "generator.vel.b", init_normal(rng, {4}));
}

MotionTensors Generator::generate(const Tensor& dynamics, const Tensor& style,
                                  const std::vector<std::uint8_t>& frame_valid,
                                  std::size_t t_actual,
                                  std::vector<AttentionResult>* maps) const {
    if (dynamics.cols() != tokens_ * d_)
        throw error("generator: dynamics width " + shape_str(dynamics.shape()) +
                    " does not match " + std::to_string(tokens_ * d_));
    const Tensor style_flat = reshape(style, {1, tokens_ * d_});

    Tensor u = dynamics;
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
        const auto& sp = style_proj_[b];
        const Tensor conditioned =
            adain(u, d_, style_flat, sp.w_gamma, sp.b_gamma, sp.w_beta, sp.b_beta, frame_valid);
        if (maps) {
            AttentionResult part, temporal;
            u = blocks_[b].apply(conditioned, pos_, frame_valid, &part, &temporal);
            maps->push_back(part);
            maps->push_back(temporal);
        } else {
            u = blocks_[b].apply(conditioned, pos_, frame_valid);
        }
    }

    MotionTensors out;
    out.frame_valid = frame_valid;
    out.t_actual = t_actual;
    for (std::size_t p = 0; p < part_widths_.size(); ++p) {
        const Tensor tok = slice_cols(u, p * d_, (p + 1) * d_);
        out.parts.push_back(linear(tok, head_w_[p], head_b_[p]));
    }
    const Tensor global_tok = slice_cols(u, part_widths_.size() * d_, tokens_ * d_);
    out.root = linear(global_tok, root_w_, root_b_);
    out.vel = linear(global_tok, vel_w_, vel_b_);
    return out;
}

}  // namespace mst
