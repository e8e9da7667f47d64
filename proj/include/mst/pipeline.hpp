// Distributed under the Apache License, Version 2.0.
// See the accompanying LICENSE file or http://www.apache.org/licenses/LICENSE-2.0
#pragma once

#include <string>

#include "mst/trainer.hpp"

namespace mst {

inline constexpr const char* kVersion = "0.1.0";

/// Resolves a path against MST_OUTPUT_ROOT when it is set and the path is
/// relative.
std::string resolve_output_path(const std::string& path);

/// config hash + seed + code version, written next to every command's output.
void write_run_stamp(const RunConfig& cfg, const std::string& dir);

/// Trains from the config (optionally resuming), writing loss.csv,
/// checkpoints and the stamp into the config's out_dir.
void run_train(const RunConfig& cfg, const std::string& resume_ckpt = "");

struct TransferPaths {
    std::string generated_bvh;
    std::string attention_mean_csv;
    std::vector<std::string> attention_head_csvs;
    std::string style_feature_csv;
    std::string modulated_style_feature_csv;
};

/// Stylizes content_bvh with style_bvh through a trained checkpoint; writes
/// the generated BVH (raw network output, quaternions normalized at export)
/// plus the modulator attention maps and the raw/modulated style features.
TransferPaths run_transfer(const RunConfig& cfg, const std::string& ckpt_path,
                           const std::string& content_bvh, const std::string& style_bvh,
                           const std::string& out_bvh);

/// Evaluates a checkpoint over labeled test/train manifests and writes the
/// metrics CSV; returns the CSV path.
std::string run_evaluate(const RunConfig& cfg, const std::string& ckpt_path,
                         const std::string& test_manifest, const std::string& train_manifest,
                         const std::string& out_csv);

}  // namespace mst
