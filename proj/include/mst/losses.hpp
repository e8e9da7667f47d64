// Distributed under the Apache License, Version 2.0.
// See the accompanying LICENSE file or http://www.apache.org/licenses/LICENSE-2.0
#pragma once

#include "mst/discriminator.hpp"
#include "mst/model.hpp"

namespace mst {

/// Per-step loss components. Adversarial values are the raw objective terms
/// (log-probabilities, so negative); everything else is nonnegative.
struct LossBreakdown {
    double l_d = 0;
    double r_vel = 0;
    double r_acc = 0;
    double r_foot = 0;
    double l_adv_g = 0;   // log(1 - D(generated)), minimized by the generator
    double l_adv_d = 0;   // log D(real) + log(1 - D(generated)), maximized by D
    double l_recon = 0;
    double l_cyc_s = 0;
    double l_cyc_c = 0;
    double total = 0;
};

/// Sum over valid frames of the l2 norms of every per-joint 7-vector, the
/// root 7-vector and the velocity 4-vector difference. Frames beyond the
/// shorter t_actual are ignored.
Tensor motion_distance(const MotionTensors& a, const MotionTensors& b);

double seq_distance(const MotionSequence& a, const MotionSequence& b, bool include_global = true);

Tensor velocity_reg(const MotionTensors& gen);
Tensor accel_reg(const MotionTensors& gen);
/// Mean foot displacement over the content motion's contact frames; feet
/// without contacts contribute zero.
Tensor foot_reg(const MotionTensors& gen, const FootContactMask& contacts,
                const PartGrouping& grouping);
Tensor physics_loss(const MotionTensors& gen, const FootContactMask& contacts,
                    const PartGrouping& grouping, const HyperParams& hp);

/// log(1 - D(fake)) with the boundary clamped at 1e-7.
Tensor adversarial_generator_term(const Discriminator& d, const MotionTensors& fake);
/// Negated Supp-style objective for the discriminator to minimize; pass the
/// fake branch detached.
Tensor adversarial_discriminator_objective(const Discriminator& d, const MotionTensors& real,
                                           const MotionTensors& fake_detached);

/// Distance between the two same-style-different-content stylizations of one
/// content motion; the second branch is computed under stop-gradient.
Tensor disentangle_loss(const StyleTransferModel& model, const MotionTensors& content,
                        const MotionTensors& style_a, const MotionTensors& style_b);

Tensor reconstruction_loss(const StyleTransferModel& model, const MotionTensors& content);

struct CycleLosses {
    Tensor style_side;    // distance(transfer(style, generated), style)
    Tensor content_side;  // distance(transfer(generated, content), content)
};
CycleLosses cycle_losses(const StyleTransferModel& model, const MotionTensors& content,
                         const MotionTensors& style, const MotionTensors& generated);

/// The weighted total recomputed from logged components.
double weighted_total(const LossBreakdown& parts, const HyperParams& hp);

MotionTensors detach_motion(const MotionTensors& mt);

}  // namespace mst
