// Distributed under the Apache License, Version 2.0.
// See the accompanying LICENSE file or http://www.apache.org/licenses/LICENSE-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mst/config.hpp"
#include "mst/losses.hpp"
#include "mst/synth.hpp"
#include "testutil.hpp"

using namespace mst;
using testutil::fd_check;

namespace {

HyperParams tiny_hp() {
    HyperParams hp;
    hp.embed_dim = 8;
    hp.proj_dim = 4;
    hp.heads = 2;
    hp.blocks = 3;
    hp.t_max = 8;
    hp.mlp_hidden = 16;
    hp.batch = 1;
    return hp;
}

PartGrouping grouping21() {
    return desk_config().resolve_grouping(synthetic_skeleton21());
}

MotionSequence clip(const char* content, std::size_t style_idx, std::size_t frames) {
    const BvhDocument doc = synth_clip(content, synth_styles(4)[style_idx], frames, 60, 0);
    return to_motion_sequence(doc.skeleton, doc.frames, 60, {});
}

MotionTensors tensors(const MotionSequence& ms, std::size_t t_max = 8) {
    return motion_to_tensors(ms, grouping21(), t_max);
}

}  // namespace

TEST_CASE("motion_distance zero, forced arithmetic, and naive reference") {
    const MotionSequence ms = clip("walk", 0, 6);
    const MotionTensors a = tensors(ms);
    CHECK(motion_distance(a, a).item() == 0.0);

    MotionSequence other = ms;
    other.joint_at(2, 4)[0] += 3.0;
    other.joint_at(2, 4)[1] += 4.0;
    const MotionTensors b = tensors(other);
    CHECK(motion_distance(a, b).item() == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(motion_distance(a, b).item() ==
          doctest::Approx(seq_distance(ms, other)).epsilon(1e-12));
}

TEST_CASE("velocity and acceleration regularizers on scripted motion") {
    // perfectly static
    MotionSequence still;
    still.resize(5, 21);
    MotionTensors st = tensors(still);
    CHECK(velocity_reg(st).item() == 0.0);
    CHECK(accel_reg(st).item() == 0.0);

    // constant velocity: acceleration vanishes, velocity does not
    MotionSequence steady;
    steady.resize(5, 21);
    for (std::size_t t = 0; t < 5; ++t) {
        steady.root_at(t)[0] = 2.0 * static_cast<double>(t);
        for (std::size_t j = 0; j < 21; ++j)
            steady.joint_at(t, j)[2] = 0.5 * static_cast<double>(t);
    }
    MotionTensors sd = tensors(steady);
    CHECK(accel_reg(sd).item() == doctest::Approx(0.0));
    CHECK(velocity_reg(sd).item() > 0.0);

    // R_foot on static motion is zero regardless of contacts
    FootContactMask contacts;
    contacts.frame_count = 5;
    contacts.mask.assign(5 * 4, 1);
    contacts.joints = {15, 16, 19, 20};
    CHECK(foot_reg(st, contacts, grouping21()).item() == 0.0);
}

TEST_CASE("foot regularizer matches a hand-computed four-frame case") {
    MotionSequence ms;
    ms.resize(4, 21);
    const int foot = synthetic_skeleton21().find("LeftFoot");
    // the foot moves by (0.3, 0.4, 0) between frames 1 and 2, elsewhere static
    ms.joint_at(2, static_cast<std::size_t>(foot))[0] = 0.3;
    ms.joint_at(2, static_cast<std::size_t>(foot))[1] = 0.4;
    ms.joint_at(3, static_cast<std::size_t>(foot))[0] = 0.3;
    ms.joint_at(3, static_cast<std::size_t>(foot))[1] = 0.4;

    FootContactMask contacts;
    contacts.frame_count = 4;
    contacts.mask.assign(4 * 4, 0);
    contacts.joints = {foot, synthetic_skeleton21().find("LeftToeBase"),
                       synthetic_skeleton21().find("RightFoot"),
                       synthetic_skeleton21().find("RightToeBase")};
    contacts.mask[1 * 4 + 0] = 1;  // left foot grounded at frame 1 only

    const MotionTensors mt = tensors(ms, 4);
    // one contact frame, displacement norm sqrt(0.09 + 0.16) = 0.5
    CHECK(foot_reg(mt, contacts, grouping21()).item() == doctest::Approx(0.5).epsilon(1e-12));

    // frames outside the contact set do not matter
    MotionSequence moved = ms;
    moved.joint_at(0, static_cast<std::size_t>(foot))[2] += 9.0;  // affects diff row 0 only
    CHECK(foot_reg(tensors(moved, 4), contacts, grouping21()).item() ==
          doctest::Approx(0.5).epsilon(1e-12));

    // a foot with no contact frames contributes zero
    FootContactMask none = contacts;
    none.mask.assign(4 * 4, 0);
    CHECK(foot_reg(mt, none, grouping21()).item() == 0.0);
}

TEST_CASE("last-frame contacts have no successor displacement and are skipped") {
    MotionSequence ms;
    ms.resize(3, 21);
    const int foot = synthetic_skeleton21().find("RightFoot");
    ms.joint_at(1, static_cast<std::size_t>(foot))[0] = 1.0;
    FootContactMask contacts;
    contacts.frame_count = 3;
    contacts.mask.assign(3 * 4, 0);
    contacts.joints = {synthetic_skeleton21().find("LeftFoot"),
                       synthetic_skeleton21().find("LeftToeBase"), foot,
                       synthetic_skeleton21().find("RightToeBase")};
    contacts.mask[2 * 4 + 2] = 1;  // only the final frame marked
    CHECK(foot_reg(tensors(ms, 3), contacts, grouping21()).item() == 0.0);
}

TEST_CASE("disentangle loss vanishes exactly for identical style inputs") {
    Rng rng(71);
    StyleTransferModel model(grouping21(), tiny_hp(), rng);
    const MotionTensors content = tensors(clip("walk", 0, 6));
    const MotionTensors style = tensors(clip("kick", 1, 6));
    for (auto& p : model.params()) p.tensor.zero_grad();
    const Tensor loss = disentangle_loss(model, content, style, style);
    CHECK(loss.item() == 0.0);
    backward(loss);
    for (const auto& p : model.params())
        for (double g : p.tensor.grad()) CHECK(g == 0.0);
}

TEST_CASE("disentangle loss is symmetric in value but not in gradient") {
    Rng rng(72);
    StyleTransferModel model(grouping21(), tiny_hp(), rng);
    const MotionTensors content = tensors(clip("walk", 0, 6));
    const MotionTensors sa = tensors(clip("kick", 1, 6));
    const MotionTensors sb = tensors(clip("punch", 1, 6));

    for (auto& p : model.params()) p.tensor.zero_grad();
    const Tensor fwd = disentangle_loss(model, content, sa, sb);
    backward(fwd);
    std::vector<double> g1;
    for (const auto& p : model.params())
        g1.insert(g1.end(), p.tensor.grad().begin(), p.tensor.grad().end());

    for (auto& p : model.params()) p.tensor.zero_grad();
    const Tensor rev = disentangle_loss(model, content, sb, sa);
    backward(rev);
    std::vector<double> g2;
    for (const auto& p : model.params())
        g2.insert(g2.end(), p.tensor.grad().begin(), p.tensor.grad().end());

    CHECK(fwd.item() == doctest::Approx(rev.item()).epsilon(1e-12));
    double diff = 0;
    for (std::size_t i = 0; i < g1.size(); ++i) diff = std::max(diff, std::abs(g1[i] - g2[i]));
    CHECK(diff > 1e-12);
}

TEST_CASE("adversarial terms at D == 1/2 and their monotonicity") {
    Rng rng(73);
    ParamList reg;
    Discriminator disc(grouping21(), tiny_hp(), rng, reg);
    for (auto& p : reg)
        if (p.name.rfind("disc.readout", 0) == 0)
            std::fill(p.tensor.value_mut().begin(), p.tensor.value_mut().end(), 0.0);
    const MotionTensors real = tensors(clip("walk", 0, 6));
    const MotionTensors fake = tensors(clip("kick", 1, 6));

    const Tensor d_obj = adversarial_discriminator_objective(disc, real, fake);
    CHECK(d_obj.item() == doctest::Approx(-2.0 * std::log(0.5)).epsilon(1e-12));
    const Tensor g_term = adversarial_generator_term(disc, fake);
    CHECK(g_term.item() == doctest::Approx(std::log(0.5)).epsilon(1e-12));
}

TEST_CASE("generator objective falls as the discriminator is fooled") {
    Rng rng(74);
    ParamList reg;
    Discriminator disc(grouping21(), tiny_hp(), rng, reg);
    const MotionTensors a = tensors(clip("walk", 0, 6));
    const MotionTensors b = tensors(clip("punch", 2, 6));
    const double pa = disc.discriminate(a).item();
    const double pb = disc.discriminate(b).item();
    const double la = adversarial_generator_term(disc, a).item();
    const double lb = adversarial_generator_term(disc, b).item();
    // log(1-p) is strictly decreasing in p
    if (pa < pb) CHECK(la > lb);
    else if (pb < pa) CHECK(lb > la);
}

TEST_CASE("adversarial gradients match central differences") {
    Rng rng(75);
    ParamList reg;
    HyperParams hp = tiny_hp();
    hp.t_max = 4;
    Discriminator disc(grouping21(), hp, rng, reg);
    const MotionTensors real = tensors(clip("walk", 0, 4), 4);
    const MotionTensors fake = tensors(clip("kick", 1, 4), 4);
    std::vector<Tensor> leaves;
    for (auto& p : reg) leaves.push_back(p.tensor);
    const auto report = fd_check(
        [&] { return adversarial_discriminator_objective(disc, real, fake); }, leaves, 1e-5, 3);
    CHECK(report.max_rel_err < 1e-4);
}

TEST_CASE("reconstruction loss is the self-transfer distance by definition") {
    Rng rng(76);
    StyleTransferModel model(grouping21(), tiny_hp(), rng);
    const MotionTensors content = tensors(clip("walk", 1, 6));
    const double direct = reconstruction_loss(model, content).item();
    const double recomputed =
        motion_distance(model.transfer(content, content).motion, content).item();
    CHECK(direct == doctest::Approx(recomputed).epsilon(1e-12));
    CHECK(direct >= 0.0);
}

TEST_CASE("cycle losses: degenerate inputs reduce to reconstruction") {
    Rng rng(77);
    StyleTransferModel model(grouping21(), tiny_hp(), rng);
    const MotionTensors c = tensors(clip("kick", 0, 6));
    const double recon = reconstruction_loss(model, c).item();
    const CycleLosses cyc = cycle_losses(model, c, c, c);
    CHECK(cyc.style_side.item() == doctest::Approx(recon).epsilon(1e-9));
    CHECK(cyc.content_side.item() == doctest::Approx(recon).epsilon(1e-9));
    CHECK(cyc.style_side.item() >= 0.0);
}

TEST_CASE("cycle losses change when the transfer arguments are swapped") {
    Rng rng(78);
    StyleTransferModel model(grouping21(), tiny_hp(), rng);
    const MotionTensors c = tensors(clip("walk", 0, 6));
    const MotionTensors s = tensors(clip("kick", 1, 6));
    const MotionTensors g = model.transfer(c, s).motion;
    const double correct = motion_distance(model.transfer(s, g).motion, s).item();
    const double swapped = motion_distance(model.transfer(g, s).motion, s).item();
    CHECK(std::abs(correct - swapped) > 1e-9);
}

TEST_CASE("weighted total reproduces the configured sum") {
    HyperParams hp;  // paper-scale weights: adv 1, d 1, recon 3, cyc 3, vel 1, acc 0.1, foot 1
    LossBreakdown zero;
    CHECK(weighted_total(zero, hp) == 0.0);

    LossBreakdown unit;
    unit.l_d = unit.r_vel = unit.r_acc = unit.r_foot = 1.0;
    unit.l_adv_g = unit.l_recon = unit.l_cyc_s = unit.l_cyc_c = 1.0;
    CHECK(weighted_total(unit, hp) == doctest::Approx(13.1).epsilon(1e-12));

    Rng rng(79);
    LossBreakdown random;
    random.l_d = rng.uniform();
    random.r_vel = rng.uniform();
    random.r_acc = rng.uniform();
    random.r_foot = rng.uniform();
    random.l_adv_g = -rng.uniform();
    random.l_recon = rng.uniform();
    random.l_cyc_s = rng.uniform();
    random.l_cyc_c = rng.uniform();
    const double manual = hp.lambda_d * random.l_d + hp.lambda_vel * random.r_vel +
                          hp.lambda_acc * random.r_acc + hp.lambda_foot * random.r_foot +
                          hp.lambda_adv * random.l_adv_g + hp.lambda_recon * random.l_recon +
                          hp.lambda_cyc * (random.l_cyc_s + random.l_cyc_c);
    CHECK(weighted_total(random, hp) == doctest::Approx(manual).epsilon(1e-12));
}

TEST_CASE("every loss term is finite and correctly signed on random models") {
    Rng rng(80);
    StyleTransferModel model(grouping21(), tiny_hp(), rng);
    ParamList dreg;
    Discriminator disc(grouping21(), tiny_hp(), rng, dreg);
    const MotionSequence content_ms = clip("walk", 0, 6);
    const MotionTensors c = tensors(content_ms);
    const MotionTensors s = tensors(clip("punch", 1, 6));
    const auto out = model.transfer(c, s);
    const FootContactMask contacts =
        detect_foot_contacts(content_ms, synthetic_skeleton21(), {});

    CHECK(velocity_reg(out.motion).item() >= 0.0);
    CHECK(accel_reg(out.motion).item() >= 0.0);
    CHECK(foot_reg(out.motion, contacts, grouping21()).item() >= 0.0);
    CHECK(reconstruction_loss(model, c).item() >= 0.0);
    CHECK(adversarial_generator_term(disc, out.motion).item() < 0.0);  // log of a probability
    for (double v : {velocity_reg(out.motion).item(), accel_reg(out.motion).item(),
                     reconstruction_loss(model, c).item(),
                     adversarial_generator_term(disc, out.motion).item()})
        CHECK(std::isfinite(v));
}
