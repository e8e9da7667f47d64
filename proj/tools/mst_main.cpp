// Distributed under the Apache License, Version 2.0.
// See the accompanying LICENSE file or http://www.apache.org/licenses/LICENSE-2.0

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>

#include "mst/kernels.hpp"
#include "mst/pipeline.hpp"
#include "mst/synth.hpp"

int main(int argc, char** argv) {
    CLI::App app{"motion style transfer toolkit"};
    app.require_subcommand(1);

    std::string config_path, resume_path;
    auto* train = app.add_subcommand("train", "train a model from a run config");
    train->add_option("--config", config_path, "run config file")->required();
    train->add_option("--resume", resume_path, "checkpoint to resume from");

    std::string ckpt, content_bvh, style_bvh, out_bvh, transfer_config;
    auto* transfer = app.add_subcommand("transfer", "stylize a content motion with a style motion");
    transfer->add_option("--ckpt", ckpt, "trained checkpoint")->required();
    transfer->add_option("--content", content_bvh, "content motion BVH")->required();
    transfer->add_option("--style", style_bvh, "style motion BVH")->required();
    transfer->add_option("--out", out_bvh, "output BVH path")->required();
    transfer->add_option("--config", transfer_config, "run config (defaults to desk-scale)");

    std::string eval_ckpt, test_manifest, train_manifest, eval_out = "metrics.csv", eval_config;
    auto* evaluate = app.add_subcommand("evaluate", "compute the consistency metrics");
    evaluate->add_option("--ckpt", eval_ckpt, "trained checkpoint")->required();
    evaluate->add_option("--test", test_manifest, "test manifest")->required();
    evaluate->add_option("--train", train_manifest, "train manifest")->required();
    evaluate->add_option("--out", eval_out, "metrics CSV path");
    evaluate->add_option("--config", eval_config, "run config (defaults to desk-scale)");

    std::string synth_dir;
    mst::SynthDatasetOptions synth_opt;
    auto* synth = app.add_subcommand("synth-data", "write a synthetic BVH dataset + manifest");
    synth->add_option("--out", synth_dir, "output directory")->required();
    synth->add_option("--styles", synth_opt.styles, "style count (1-4)");
    synth->add_option("--contents", synth_opt.contents, "content count (1-3)");
    synth->add_option("--clips-per-cell", synth_opt.clips_per_cell, "clips per (style,content)");
    synth->add_option("--frames", synth_opt.frames, "frames per clip");
    synth->add_option("--fps", synth_opt.fps, "frame rate");
    synth->add_flag("--skeleton31", synth_opt.skeleton31, "emit the 31-joint skeleton");

    CLI11_PARSE(app, argc, argv);

    try {
        if (train->parsed()) {
            const mst::RunConfig cfg = mst::load_config(config_path);
            mst::run_train(cfg, resume_path);
            std::printf("training complete; outputs in %s\n",
                        mst::resolve_output_path(cfg.out_dir).c_str());
        } else if (transfer->parsed()) {
            const mst::RunConfig cfg = transfer_config.empty()
                                           ? mst::desk_config()
                                           : mst::load_config(transfer_config);
            const mst::TransferPaths paths =
                mst::run_transfer(cfg, ckpt, content_bvh, style_bvh, out_bvh);
            std::printf("wrote %s\n", paths.generated_bvh.c_str());
            std::printf("wrote %s\n", paths.attention_mean_csv.c_str());
            std::printf("wrote %s\n", paths.style_feature_csv.c_str());
            std::printf("wrote %s\n", paths.modulated_style_feature_csv.c_str());
        } else if (evaluate->parsed()) {
            const mst::RunConfig cfg =
                eval_config.empty() ? mst::desk_config() : mst::load_config(eval_config);
            const std::string out =
                mst::run_evaluate(cfg, eval_ckpt, test_manifest, train_manifest, eval_out);
            std::printf("wrote %s\n", out.c_str());
        } else if (synth->parsed()) {
            const auto files = mst::write_synth_dataset(synth_dir, synth_opt);
            std::printf("wrote %zu clips + manifest.tsv in %s\n", files.size(),
                        synth_dir.c_str());
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
