// Distributed under the Apache License, Version 2.0.
// See the accompanying LICENSE file or http://www.apache.org/licenses/LICENSE-2.0
#pragma once

#include <iosfwd>
#include <optional>

#include "mst/checkpoint.hpp"
#include "mst/dataset.hpp"
#include "mst/losses.hpp"

namespace mst {

/// Training loop: per iteration it samples a (content, style_a, style_b)
/// triplet with random crops, builds the full weighted objective, then takes
/// one discriminator step followed by one encoder/modulator/generator step.
/// Everything is driven by a single seeded RNG, so runs are reproducible and
/// resumable from the checkpointed RNG state.
class Trainer {
public:
    Trainer(const RunConfig& cfg, Dataset dataset);

    LossBreakdown step();

    /// Runs up to cfg.iterations, appending one CSV row per iteration and
    /// checkpointing on the configured cadence into out_dir.
    void run(std::ostream* loss_csv, const std::string& out_dir);

    void save(const std::string& path) const;
    void load(const std::string& path);

    std::uint64_t iteration() const { return iteration_; }
    StyleTransferModel& model() { return model_; }
    Discriminator& discriminator() { return disc_; }
    Adam& model_opt() { return model_opt_; }
    Adam& disc_opt() { return disc_opt_; }
    const Dataset& data() const { return dataset_; }
    const PartGrouping& grouping() const { return grouping_; }
    bool disentangle_enabled() const { return !eligible_styles_.empty(); }

    MotionTensors prep(const MotionSequence& ms) const;

    static std::string loss_csv_header();
    static std::string loss_csv_row(std::uint64_t iteration, const LossBreakdown& parts);

private:
    struct Triplet {
        MotionSequence content, style_a;
        std::optional<MotionSequence> style_b;
    };
    Triplet sample_triplet();
    MotionSequence crop(const MotionSequence& ms);
    void dump_diagnostics(const std::string& out_dir, const std::string& reason) const;

    RunConfig cfg_;
    Dataset dataset_;
    Rng rng_;
    PartGrouping grouping_;
    StyleTransferModel model_;
    ParamList disc_params_;
    Discriminator disc_;
    Adam model_opt_;
    Adam disc_opt_;
    std::vector<std::string> eligible_styles_;  // styles with >= 2 content labels
    std::uint64_t iteration_ = 0;
};

}  // namespace mst
