// Distributed under the Apache License, Version 2.0.
// See the accompanying LICENSE file or http://www.apache.org/licenses/LICENSE-2.0

#include "mst/embedding.hpp"

#include <algorithm>

namespace mst {

void HyperParams::validate() const {
    if (embed_dim < 2 || embed_dim % 2 != 0)
        throw error("hyperparams: embed_dim must be even and >= 2, got " +
                    std::to_string(embed_dim));
    if (proj_dim == 0 || heads == 0) throw error("hyperparams: proj_dim and heads must be positive");
    if (blocks < 2) throw error("hyperparams: need at least 2 transformer blocks");
    if (t_max < 2) throw error("hyperparams: t_max must be >= 2");
    if (mlp_hidden == 0) throw error("hyperparams: mlp_hidden must be positive");
    if (batch == 0) throw error("hyperparams: batch must be positive");
    if (lr_encgen <= 0 || lr_disc <= 0) throw error("hyperparams: learning rates must be positive");
}

std::size_t PartGrouping::total_joints() const {
    std::size_t n = 0;
    for (const auto& p : joints) n += p.size();
    return n;
}

PartGrouping PartGrouping::resolve(const std::vector<std::string>& part_names,
                                   const std::vector<std::vector<std::string>>& joint_names,
                                   const Skeleton& skel) {
    if (part_names.size() != joint_names.size())
        throw error("part grouping: part name count does not match joint list count");
    if (part_names.empty()) throw error("part grouping: at least one part is required");
    PartGrouping g;
    g.part_names = part_names;
    std::vector<int> used(skel.size(), 0);
    for (const auto& list : joint_names) {
        if (list.empty()) throw error("part grouping: empty part");
        std::vector<int> idx;
        for (const auto& name : list) {
            const int j = skel.find(name);
            if (j < 0) throw error("part grouping: joint '" + name + "' not found in skeleton");
            if (used[static_cast<std::size_t>(j)]++)
                throw error("part grouping: joint '" + name + "' assigned to two parts");
            idx.push_back(j);
        }
        g.joints.push_back(std::move(idx));
    }
    for (std::size_t j = 0; j < skel.size(); ++j)
        if (!used[j])
            throw error("part grouping: joint '" + skel.joints[j].name + "' is not in any part");
    return g;
}

MotionTensors motion_to_tensors(const MotionSequence& ms, const PartGrouping& grouping,
                                std::size_t t_max) {
    if (grouping.total_joints() != ms.joint_count)
        throw error("motion_to_tensors: grouping covers " + std::to_string(grouping.total_joints()) +
                    " joints, sequence has " + std::to_string(ms.joint_count));
    const std::size_t t_act = std::min(ms.frame_count, t_max);
    MotionTensors mt;
    mt.t_actual = t_act;
    mt.frame_valid.assign(t_max, 0);
    std::fill_n(mt.frame_valid.begin(), t_act, 1);

    for (std::size_t p = 0; p < grouping.parts(); ++p) {
        const auto& idx = grouping.joints[p];
        Tensor t = Tensor::zeros({t_max, idx.size() * 7});
        for (std::size_t f = 0; f < t_act; ++f)
            for (std::size_t k = 0; k < idx.size(); ++k)
                std::copy_n(ms.joint_at(f, static_cast<std::size_t>(idx[k])), 7,
                            t.n->value.begin() +
                                static_cast<std::ptrdiff_t>(f * idx.size() * 7 + k * 7));
        mt.parts.push_back(std::move(t));
    }
    mt.root = Tensor::zeros({t_max, 7});
    mt.vel = Tensor::zeros({t_max, 4});
    for (std::size_t f = 0; f < t_act; ++f) {
        std::copy_n(ms.root_at(f), 7, mt.root.n->value.begin() + static_cast<std::ptrdiff_t>(f * 7));
        std::copy_n(ms.vel_at(f), 4, mt.vel.n->value.begin() + static_cast<std::ptrdiff_t>(f * 4));
    }
    return mt;
}

MotionSequence tensors_to_motion(const MotionTensors& mt, const PartGrouping& grouping,
                                 double fps) {
    MotionSequence ms;
    ms.resize(mt.t_actual, grouping.total_joints());
    ms.fps = fps;
    for (std::size_t p = 0; p < grouping.parts(); ++p) {
        const auto& idx = grouping.joints[p];
        const auto v = mt.parts[p].value();
        const std::size_t w = idx.size() * 7;
        for (std::size_t f = 0; f < mt.t_actual; ++f)
            for (std::size_t k = 0; k < idx.size(); ++k)
                std::copy_n(v.begin() + static_cast<std::ptrdiff_t>(f * w + k * 7), 7,
                            ms.joint_at(f, static_cast<std::size_t>(idx[k])));
    }
    for (std::size_t f = 0; f < mt.t_actual; ++f) {
        std::copy_n(mt.root.value().begin() + static_cast<std::ptrdiff_t>(f * 7), 7, ms.root_at(f));
        std::copy_n(mt.vel.value().begin() + static_cast<std::ptrdiff_t>(f * 4), 4, ms.vel_at(f));
    }
    return ms;
}

Tensor init_normal(Rng& rng, std::vector<std::size_t> shape, double stddev) {
    Tensor t = Tensor::zeros(std::move(shape), true);
    for (auto& v : t.n->value) v = rng.normal(0.0, stddev);
    return t;
}

Tensor register_param(ParamList& reg, const std::string& name, Tensor t) {
    for (const auto& p : reg)
        if (p.name == name) throw error("duplicate parameter name '" + name + "'");
    reg.push_back({name, t});
    return t;
}

PartEmbedding::PartEmbedding(const PartGrouping& grouping, const HyperParams& hp,
                             const std::string& prefix, Rng& rng, ParamList& reg)
    : d_(hp.embed_dim) {
    for (std::size_t p = 0; p < grouping.parts(); ++p) {
        const std::size_t in = grouping.part_size(p) * 7;
        w_part_.push_back(register_param(reg, prefix + ".part" + std::to_string(p) + ".w",
                                         init_normal(rng, {in, d_})));
        b_part_.push_back(register_param(reg, prefix + ".part" + std::to_string(p) + ".b",
                                         init_normal(rng, {d_})));
    }
    const std::size_t half = d_ / 2;
    w_root_ = register_param(reg, prefix + ".root.w", init_normal(rng, {7, half}));
    b_root_ = register_param(reg, prefix + ".root.b", init_normal(rng, {half}));
    w_vel_ = register_param(reg, prefix + ".vel.w", init_normal(rng, {4, half}));
    b_vel_ = register_param(reg, prefix + ".vel.b", init_normal(rng, {half}));
}

Tensor PartEmbedding::embed(const MotionTensors& mt) const {
    std::vector<Tensor> tokens;
    tokens.reserve(mt.parts.size() + 1);
    for (std::size_t p = 0; p < mt.parts.size(); ++p)
        tokens.push_back(linear(mt.parts[p], w_part_[p], b_part_[p]));
    // global token: the root half and the velocity half side by side
    tokens.push_back(concat_cols({linear(mt.root, w_root_, b_root_),
                                  linear(mt.vel, w_vel_, b_vel_)}));
    return zero_rows(concat_cols(tokens), mt.frame_valid);
}

}  // namespace mst
