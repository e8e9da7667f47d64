// Distributed under the Apache License, Version 2.0.
// See the accompanying LICENSE file or http://www.apache.org/licenses/LICENSE-2.0

#include "mst/losses.hpp"

#include <cmath>

namespace mst {

namespace {
constexpr double kLogFloor = 1e-7;

// rows -> per-joint 7-vectors, then summed l2 norms
Tensor part_rownorm(const Tensor& x, std::size_t t) {
    const std::size_t w = x.cols();
    const Tensor sliced = slice_rows(x, 0, t);
    return rownorm_sum(reshape(sliced, {t * (w / 7), 7}));
}

}  // namespace

Tensor motion_distance(const MotionTensors& a, const MotionTensors& b) {
    if (a.parts.size() != b.parts.size())
        throw error("motion_distance: part counts differ");
    const std::size_t t = std::min(a.t_actual, b.t_actual);
    if (t < 1) throw error("motion_distance: no valid frames");
    Tensor total = Tensor::scalar(0.0);
    for (std::size_t p = 0; p < a.parts.size(); ++p) {
        if (a.parts[p].cols() != b.parts[p].cols())
            throw error("motion_distance: part " + std::to_string(p) + " widths differ: " +
                        shape_str(a.parts[p].shape()) + " vs " + shape_str(b.parts[p].shape()));
        const Tensor diff = sub(slice_rows(a.parts[p], 0, t), slice_rows(b.parts[p], 0, t));
        total = add(total, rownorm_sum(reshape(diff, {t * (diff.cols() / 7), 7})));
    }
    total = add(total, rownorm_sum(sub(slice_rows(a.root, 0, t), slice_rows(b.root, 0, t))));
    total = add(total, rownorm_sum(sub(slice_rows(a.vel, 0, t), slice_rows(b.vel, 0, t))));
    return total;
}

double seq_distance(const MotionSequence& a, const MotionSequence& b, bool include_global) {
    if (a.joint_count != b.joint_count)
        throw error("seq_distance: joint counts differ, " + std::to_string(a.joint_count) +
                    " vs " + std::to_string(b.joint_count));
    const std::size_t t = std::min(a.frame_count, b.frame_count);
    double total = 0;
    for (std::size_t f = 0; f < t; ++f) {
        for (std::size_t j = 0; j < a.joint_count; ++j) {
            const double* va = a.joint_at(f, j);
            const double* vb = b.joint_at(f, j);
            double s = 0;
            for (int c = 0; c < 7; ++c) s += (va[c] - vb[c]) * (va[c] - vb[c]);
            total += std::sqrt(s);
        }
        if (include_global) {
            double s = 0;
            for (int c = 0; c < 7; ++c) s += (a.root_at(f)[c] - b.root_at(f)[c]) * (a.root_at(f)[c] - b.root_at(f)[c]);
            total += std::sqrt(s);
            s = 0;
            for (int c = 0; c < 4; ++c) s += (a.vel_at(f)[c] - b.vel_at(f)[c]) * (a.vel_at(f)[c] - b.vel_at(f)[c]);
            total += std::sqrt(s);
        }
    }
    return total;
}

Tensor velocity_reg(const MotionTensors& gen) {
    const std::size_t t = gen.t_actual;
    if (t < 2) throw error("velocity_reg: need at least 2 frames");
    Tensor total = Tensor::scalar(0.0);
    for (const auto& part : gen.parts)
        total = add(total, part_rownorm(row_diff(slice_rows(part, 0, t)), t - 1));
    total = add(total, rownorm_sum(row_diff(slice_rows(gen.root, 0, t))));
    return scale(total, 1.0 / static_cast<double>(t - 1));
}

Tensor accel_reg(const MotionTensors& gen) {
    const std::size_t t = gen.t_actual;
    if (t < 3) throw error("accel_reg: need at least 3 frames");
    Tensor total = Tensor::scalar(0.0);
    for (const auto& part : gen.parts)
        total = add(total, part_rownorm(row_diff(row_diff(slice_rows(part, 0, t))), t - 2));
    // velocity first difference, restricted to the same t-2 terms
    const Tensor vd = row_diff(slice_rows(gen.vel, 0, t));
    total = add(total, rownorm_sum(slice_rows(vd, 0, t - 2)));
    return scale(total, 1.0 / static_cast<double>(t - 2));
}

Tensor foot_reg(const MotionTensors& gen, const FootContactMask& contacts,
                const PartGrouping& grouping) {
    const std::size_t t = gen.t_actual;
    if (contacts.frame_count != t)
        throw error("foot_reg: contact mask has " + std::to_string(contacts.frame_count) +
                    " frames, generated motion has " + std::to_string(t));
    Tensor total = Tensor::scalar(0.0);
    for (std::size_t f = 0; f < 4; ++f) {
        const int joint = contacts.joints[f];
        // locate the joint inside its part
        int part = -1, pos = -1;
        for (std::size_t p = 0; p < grouping.parts() && part < 0; ++p)
            for (std::size_t k = 0; k < grouping.joints[p].size(); ++k)
                if (grouping.joints[p][k] == joint) {
                    part = static_cast<int>(p);
                    pos = static_cast<int>(k);
                    break;
                }
        if (part < 0) throw error("foot_reg: foot joint not covered by the part grouping");

        // displacement is m_{t+1} - m_t, so a contact frame needs a successor
        std::vector<std::uint8_t> rows(t - 1, 0);
        std::size_t count = 0;
        for (std::size_t fr = 0; fr + 1 < t; ++fr) {
            if (contacts.at(fr, f)) {
                rows[fr] = 1;
                ++count;
            }
        }
        if (count == 0) continue;
        const Tensor track = slice_cols(gen.parts[static_cast<std::size_t>(part)],
                                        static_cast<std::size_t>(pos) * 7,
                                        static_cast<std::size_t>(pos) * 7 + 7);
        const Tensor disp = row_diff(slice_rows(track, 0, t));
        total = add(total, scale(rownorm_sum(disp, rows), 1.0 / static_cast<double>(count)));
    }
    return total;
}

Tensor physics_loss(const MotionTensors& gen, const FootContactMask& contacts,
                    const PartGrouping& grouping, const HyperParams& hp) {
    Tensor total = scale(velocity_reg(gen), hp.lambda_vel);
    total = add(total, scale(accel_reg(gen), hp.lambda_acc));
    total = add(total, scale(foot_reg(gen, contacts, grouping), hp.lambda_foot));
    return total;
}

Tensor adversarial_generator_term(const Discriminator& d, const MotionTensors& fake) {
    return log_floor(one_minus(d.discriminate(fake)), kLogFloor);
}

Tensor adversarial_discriminator_objective(const Discriminator& d, const MotionTensors& real,
                                           const MotionTensors& fake_detached) {
    const Tensor value = add(log_floor(d.discriminate(real), kLogFloor),
                             log_floor(one_minus(d.discriminate(fake_detached)), kLogFloor));
    return scale(value, -1.0);  // D maximizes the raw objective
}

MotionTensors detach_motion(const MotionTensors& mt) {
    MotionTensors out;
    out.frame_valid = mt.frame_valid;
    out.t_actual = mt.t_actual;
    for (const auto& p : mt.parts) out.parts.push_back(detach(p));
    out.root = detach(mt.root);
    out.vel = detach(mt.vel);
    return out;
}

Tensor disentangle_loss(const StyleTransferModel& model, const MotionTensors& content,
                        const MotionTensors& style_a, const MotionTensors& style_b) {
    const MotionTensors branch_a = model.transfer(content, style_a).motion;
    MotionTensors branch_b;
    {
        NoGradGuard stop;
        branch_b = model.transfer(content, style_b).motion;
    }
    return motion_distance(branch_a, branch_b);
}

Tensor reconstruction_loss(const StyleTransferModel& model, const MotionTensors& content) {
    const EncodeOut enc = model.encoder().encode(content);
    return motion_distance(model.transfer_encoded(enc, enc).motion, content);
}

CycleLosses cycle_losses(const StyleTransferModel& model, const MotionTensors& content,
                         const MotionTensors& style, const MotionTensors& generated) {
    CycleLosses out;
    out.style_side = motion_distance(model.transfer(style, generated).motion, style);
    out.content_side = motion_distance(model.transfer(generated, content).motion, content);
    return out;
}

double weighted_total(const LossBreakdown& parts, const HyperParams& hp) {
    return hp.lambda_d * parts.l_d + hp.lambda_vel * parts.r_vel + hp.lambda_acc * parts.r_acc +
           hp.lambda_foot * parts.r_foot + hp.lambda_adv * parts.l_adv_g +
           hp.lambda_recon * parts.l_recon + hp.lambda_cyc * (parts.l_cyc_s + parts.l_cyc_c);
}

}  // namespace mst
