// Distributed under the Apache License, Version 2.0.
// See the accompanying LICENSE file or http://www.apache.org/licenses/LICENSE-2.0

#include "mst/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>

namespace mst {

namespace {

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

Trainer::Trainer(const RunConfig& cfg, Dataset dataset)
    : cfg_(cfg),
      dataset_(std::move(dataset)),
      rng_(cfg.seed),
      grouping_(cfg.resolve_grouping(dataset_.skeleton)),
      model_(grouping_, cfg_.hyper, rng_),
      disc_(grouping_, cfg_.hyper, rng_, disc_params_),
      model_opt_(model_.params()),
      disc_opt_(disc_params_) {
    for (const auto& style : dataset_.style_labels()) {
        std::size_t contents = 0;
        for (const auto& content : dataset_.content_labels())
            if (!dataset_.cell(style, content).empty()) ++contents;
        if (contents >= 2) eligible_styles_.push_back(style);
    }
}

MotionTensors Trainer::prep(const MotionSequence& ms) const {
    return motion_to_tensors(ms, grouping_, cfg_.hyper.t_max);
}

MotionSequence Trainer::crop(const MotionSequence& ms) {
    const std::size_t min_len = std::min(cfg_.min_crop, ms.frame_count);
    return random_crop(ms, rng_, min_len, cfg_.hyper.t_max);
}

Trainer::Triplet Trainer::sample_triplet() {
    Triplet t;
    const auto& clips = dataset_.clips;
    t.content = crop(clips[static_cast<std::size_t>(
        rng_.uniform_int(0, static_cast<std::int64_t>(clips.size()) - 1))]);

    if (!eligible_styles_.empty()) {
        const auto& style = eligible_styles_[static_cast<std::size_t>(
            rng_.uniform_int(0, static_cast<std::int64_t>(eligible_styles_.size()) - 1))];
        std::vector<std::string> contents;
        for (const auto& content : dataset_.content_labels())
            if (!dataset_.cell(style, content).empty()) contents.push_back(content);
        const auto i1 = static_cast<std::size_t>(
            rng_.uniform_int(0, static_cast<std::int64_t>(contents.size()) - 1));
        auto i2 = static_cast<std::size_t>(
            rng_.uniform_int(0, static_cast<std::int64_t>(contents.size()) - 2));
        if (i2 >= i1) ++i2;
        const auto cell_a = dataset_.cell(style, contents[i1]);
        const auto cell_b = dataset_.cell(style, contents[i2]);
        t.style_a = crop(clips[cell_a[static_cast<std::size_t>(
            rng_.uniform_int(0, static_cast<std::int64_t>(cell_a.size()) - 1))]]);
        t.style_b = crop(clips[cell_b[static_cast<std::size_t>(
            rng_.uniform_int(0, static_cast<std::int64_t>(cell_b.size()) - 1))]]);
    } else {
        t.style_a = crop(clips[static_cast<std::size_t>(
            rng_.uniform_int(0, static_cast<std::int64_t>(clips.size()) - 1))]);
    }
    return t;
}

LossBreakdown Trainer::step() {
    const HyperParams& hp = cfg_.hyper;
    const double inv_b = 1.0 / static_cast<double>(hp.batch);

    model_opt_.zero_grad();
    disc_opt_.zero_grad();

    LossBreakdown parts;
    Tensor total = Tensor::scalar(0.0);
    std::vector<MotionTensors> reals, fakes;

    for (std::size_t b = 0; b < hp.batch; ++b) {
        Triplet trip = sample_triplet();
        const FootContactMask contacts =
            detect_foot_contacts(trip.content, dataset_.skeleton, cfg_.contact);

        const MotionTensors mt_c = prep(trip.content);
        const MotionTensors mt_sa = prep(trip.style_a);

        const EncodeOut enc_c = model_.encoder().encode(mt_c);
        const EncodeOut enc_sa = model_.encoder().encode(mt_sa);
        const StyleTransferModel::Output out = model_.transfer_encoded(enc_c, enc_sa);

        Tensor item = Tensor::scalar(0.0);

        if (trip.style_b) {
            MotionTensors branch_b;
            {
                NoGradGuard stop;
                const MotionTensors mt_sb = prep(*trip.style_b);
                branch_b = model_.transfer_encoded(enc_c, model_.encoder().encode(mt_sb)).motion;
            }
            const Tensor l_d = motion_distance(out.motion, branch_b);
            parts.l_d += l_d.item() * inv_b;
            item = add(item, scale(l_d, hp.lambda_d));
        }

        const Tensor r_vel = velocity_reg(out.motion);
        const Tensor r_acc = accel_reg(out.motion);
        const Tensor r_foot = foot_reg(out.motion, contacts, grouping_);
        parts.r_vel += r_vel.item() * inv_b;
        parts.r_acc += r_acc.item() * inv_b;
        parts.r_foot += r_foot.item() * inv_b;
        item = add(item, scale(r_vel, hp.lambda_vel));
        item = add(item, scale(r_acc, hp.lambda_acc));
        item = add(item, scale(r_foot, hp.lambda_foot));

        const Tensor adv_g = adversarial_generator_term(disc_, out.motion);
        parts.l_adv_g += adv_g.item() * inv_b;
        item = add(item, scale(adv_g, hp.lambda_adv));

        const Tensor recon = motion_distance(model_.transfer_encoded(enc_c, enc_c).motion, mt_c);
        parts.l_recon += recon.item() * inv_b;
        item = add(item, scale(recon, hp.lambda_recon));

        const EncodeOut enc_g = model_.encoder().encode(out.motion);
        const Tensor cyc_s =
            motion_distance(model_.transfer_encoded(enc_sa, enc_g).motion, mt_sa);
        const Tensor cyc_c = motion_distance(model_.transfer_encoded(enc_g, enc_c).motion, mt_c);
        parts.l_cyc_s += cyc_s.item() * inv_b;
        parts.l_cyc_c += cyc_c.item() * inv_b;
        item = add(item, scale(add(cyc_s, cyc_c), hp.lambda_cyc));

        total = add(total, item);
        reals.push_back(mt_sa);
        fakes.push_back(detach_motion(out.motion));
    }

    total = scale(total, inv_b);
    parts.total = total.item();
    if (!std::isfinite(parts.total))
        throw error("training diverged: total loss is not finite at iteration " +
                    std::to_string(iteration_ + 1));
    backward(total);

    // discriminator step first (the generator pass above used the current D)
    disc_opt_.zero_grad();
    Tensor d_obj = Tensor::scalar(0.0);
    for (std::size_t b = 0; b < reals.size(); ++b)
        d_obj = add(d_obj, adversarial_discriminator_objective(disc_, reals[b], fakes[b]));
    d_obj = scale(d_obj, inv_b);
    parts.l_adv_d = -d_obj.item();
    backward(d_obj);
    disc_opt_.step(hp.lr_disc);

    model_opt_.step(hp.lr_encgen);
    ++iteration_;
    return parts;
}

std::string Trainer::loss_csv_header() {
    return "iteration,l_d,r_vel,r_acc,r_foot,l_adv_g,l_adv_d,l_recon,l_cyc_s,l_cyc_c,total";
}

std::string Trainer::loss_csv_row(std::uint64_t iteration, const LossBreakdown& p) {
    std::string row = std::to_string(iteration);
    for (double v : {p.l_d, p.r_vel, p.r_acc, p.r_foot, p.l_adv_g, p.l_adv_d, p.l_recon,
                     p.l_cyc_s, p.l_cyc_c, p.total})
        row += "," + fmt17(v);
    return row;
}

void Trainer::run(std::ostream* loss_csv, const std::string& out_dir) {
    namespace fs = std::filesystem;
    if (!out_dir.empty()) fs::create_directories(out_dir);
    auto ckpt_path = [&out_dir](std::uint64_t iter) {
        char buf[48];
        std::snprintf(buf, sizeof buf, "checkpoint_%06llu.bin",
                      static_cast<unsigned long long>(iter));
        return (fs::path(out_dir) / buf).string();
    };

    while (iteration_ < cfg_.iterations) {
        LossBreakdown parts;
        try {
            parts = step();
        } catch (const error& e) {
            if (!out_dir.empty()) dump_diagnostics(out_dir, e.what());
            throw;
        }
        if (loss_csv) *loss_csv << loss_csv_row(iteration_, parts) << "\n";
        if (!out_dir.empty() && cfg_.checkpoint_every > 0 &&
            (iteration_ % cfg_.checkpoint_every == 0 || iteration_ == cfg_.iterations))
            save(ckpt_path(iteration_));
    }
    if (loss_csv) loss_csv->flush();
    if (!out_dir.empty()) save((fs::path(out_dir) / "checkpoint_latest.bin").string());
}

void Trainer::save(const std::string& path) const {
    CheckpointState state;
    state.iteration = iteration_;
    state.rng_state = rng_.save_state();
    save_checkpoint(path, model_.params(), model_opt_, disc_params_, disc_opt_, state);
}

void Trainer::load(const std::string& path) {
    const CheckpointState state =
        load_checkpoint(path, model_.params(), model_opt_, disc_params_, disc_opt_);
    iteration_ = state.iteration;
    rng_.load_state(state.rng_state);
}

void Trainer::dump_diagnostics(const std::string& out_dir, const std::string& reason) const {
    std::ofstream os(std::filesystem::path(out_dir) / "diagnostics.txt");
    os << "aborted: " << reason << "\n";
    os << "iteration: " << iteration_ << "\n";
    auto dump = [&os](const ParamList& params, const char* which) {
        for (const auto& p : params) {
            double norm = 0, gnorm = 0;
            for (double v : p.tensor.value()) norm += v * v;
            for (double g : p.tensor.grad()) gnorm += g * g;
            os << which << " " << p.name << " |w|=" << std::sqrt(norm)
               << " |g|=" << std::sqrt(gnorm) << "\n";
        }
    };
    dump(model_.params(), "model");
    dump(disc_params_, "disc");
}

}  // namespace mst
