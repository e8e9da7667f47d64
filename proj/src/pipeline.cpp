// Distributed under the Apache License, Version 2.0.
// See the accompanying LICENSE file or http://www.apache.org/licenses/LICENSE-2.0

#include "mst/pipeline.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mst/metrics.hpp"

namespace mst {

namespace fs = std::filesystem;

namespace {

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw error("cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw error("cannot write '" + path + "'");
    out << content;
}

BvhDocument parse_bvh_file(const std::string& path) {
    try {
        return parse_bvh(read_file(path));
    } catch (const error& e) {
        throw error(std::string(e.what()) + " (in '" + path + "')");
    }
}

std::vector<std::string> token_names(const RunConfig& cfg) {
    std::vector<std::string> names = cfg.part_names;
    names.push_back("traj");
    return names;
}

std::string attention_csv(const AttentionResult& attn, std::size_t head_or_mean,
                          const std::vector<std::string>& names, bool mean) {
    const std::size_t n = attn.queries;
    std::ostringstream os;
    os << "content_part";
    for (const auto& s : names) os << "," << s;
    os << "\n";
    for (std::size_t q = 0; q < n; ++q) {
        os << names[q];
        for (std::size_t k = 0; k < n; ++k) {
            double v = 0;
            if (mean) {
                for (std::size_t h = 0; h < attn.heads; ++h)
                    v += (*attn.weights)[(h * n + q) * n + k];
                v /= static_cast<double>(attn.heads);
            } else {
                v = (*attn.weights)[(head_or_mean * n + q) * n + k];
            }
            os << "," << fmt17(v);
        }
        os << "\n";
    }
    return os.str();
}

std::string feature_csv(const Tensor& feature, const std::vector<std::string>& names) {
    std::ostringstream os;
    const std::size_t rows = feature.shape()[0];
    const std::size_t cols = feature.numel() / rows;
    os << "part";
    for (std::size_t c = 0; c < cols; ++c) os << ",c" << c;
    os << "\n";
    for (std::size_t r = 0; r < rows; ++r) {
        os << names[r];
        for (std::size_t c = 0; c < cols; ++c) os << "," << fmt17(feature.value()[r * cols + c]);
        os << "\n";
    }
    return os.str();
}

struct LoadedModel {
    PartGrouping grouping;
    StyleTransferModel model;
    ParamList disc_params;
    Discriminator disc;
};

LoadedModel build_model(const RunConfig& cfg, const Skeleton& skel) {
    Rng rng(cfg.seed);
    PartGrouping grouping = cfg.resolve_grouping(skel);
    StyleTransferModel model(grouping, cfg.hyper, rng);
    ParamList disc_params;
    Discriminator disc(grouping, cfg.hyper, rng, disc_params);
    return LoadedModel{std::move(grouping), std::move(model), std::move(disc_params),
                       std::move(disc)};
}

}  // namespace

std::string resolve_output_path(const std::string& path) {
    if (path.empty()) return path;
    if (fs::path(path).is_absolute()) return path;
    const char* root = std::getenv("MST_OUTPUT_ROOT");
    if (root == nullptr || *root == '\0') return path;
    return (fs::path(root) / path).string();
}

void write_run_stamp(const RunConfig& cfg, const std::string& dir) {
    if (dir.empty() ? false : !fs::exists(dir)) fs::create_directories(dir);
    std::ostringstream os;
    os << "config_hash: " << std::hex << fnv1a64(cfg.source_text) << std::dec << "\n";
    os << "seed: " << cfg.seed << "\n";
    os << "version: " << kVersion << "\n";
    write_file((fs::path(dir.empty() ? "." : dir) / "run_stamp.txt").string(), os.str());
}

void run_train(const RunConfig& cfg, const std::string& resume_ckpt) {
    if (cfg.manifest.empty()) throw error("train: config has no 'manifest' entry");
    const std::string out_dir = resolve_output_path(cfg.out_dir);
    fs::create_directories(out_dir);
    write_run_stamp(cfg, out_dir);

    Dataset dataset = load_dataset(cfg.manifest, cfg);
    Trainer trainer(cfg, std::move(dataset));
    if (!trainer.disentangle_enabled())
        std::fprintf(stderr,
                     "warning: no style label has two content labels; "
                     "the disentanglement term is disabled\n");
    const bool resume = !resume_ckpt.empty();
    if (resume) trainer.load(resume_ckpt);

    const std::string csv_path = (fs::path(out_dir) / "loss.csv").string();
    std::ofstream csv(csv_path, resume ? std::ios::app : std::ios::trunc);
    if (!csv) throw error("cannot write '" + csv_path + "'");
    if (!resume) csv << Trainer::loss_csv_header() << "\n";
    trainer.run(&csv, out_dir);
}

TransferPaths run_transfer(const RunConfig& cfg, const std::string& ckpt_path,
                           const std::string& content_bvh, const std::string& style_bvh,
                           const std::string& out_bvh) {
    const BvhDocument content_doc = parse_bvh_file(content_bvh);
    const BvhDocument style_doc = parse_bvh_file(style_bvh);

    Skeleton skel;
    MotionSequence content_ms = prepare_clip(content_doc, cfg, &skel);
    Skeleton style_skel;
    MotionSequence style_ms = prepare_clip(style_doc, cfg, &style_skel);
    if (style_skel.size() != skel.size())
        throw error("transfer: content and style skeletons differ in joint count");

    LoadedModel lm = build_model(cfg, skel);
    load_checkpoint_params(ckpt_path, lm.model.params(), lm.disc_params);

    NoGradGuard inference;
    const MotionTensors mt_c = motion_to_tensors(content_ms, lm.grouping, cfg.hyper.t_max);
    const MotionTensors mt_s = motion_to_tensors(style_ms, lm.grouping, cfg.hyper.t_max);
    const StyleTransferModel::Output out = lm.model.transfer(mt_c, mt_s);

    const std::string out_path = resolve_output_path(out_bvh);
    const fs::path dir = fs::path(out_path).parent_path();
    if (!dir.empty()) fs::create_directories(dir);
    const std::string stem = (dir / fs::path(out_path).stem()).string();

    const MotionSequence generated = tensors_to_motion(out.motion, lm.grouping, content_ms.fps);
    write_file(out_path, write_bvh(skel, generated, cfg.body, /*normalize=*/true));

    TransferPaths paths;
    paths.generated_bvh = out_path;
    const auto names = token_names(cfg);
    paths.attention_mean_csv = stem + "_psm_attention.csv";
    write_file(paths.attention_mean_csv, attention_csv(out.modulation.attn, 0, names, true));
    for (std::size_t h = 0; h < out.modulation.attn.heads; ++h) {
        const std::string p = stem + "_psm_attention_head" + std::to_string(h) + ".csv";
        write_file(p, attention_csv(out.modulation.attn, h, names, false));
        paths.attention_head_csvs.push_back(p);
    }
    paths.style_feature_csv = stem + "_style_feature.csv";
    write_file(paths.style_feature_csv, feature_csv(out.enc_style.style, names));
    paths.modulated_style_feature_csv = stem + "_modulated_style_feature.csv";
    write_file(paths.modulated_style_feature_csv,
               feature_csv(out.modulation.modulated, names));
    write_run_stamp(cfg, dir.string());
    return paths;
}

std::string run_evaluate(const RunConfig& cfg, const std::string& ckpt_path,
                         const std::string& test_manifest, const std::string& train_manifest,
                         const std::string& out_csv) {
    Dataset test = load_dataset(test_manifest, cfg);
    Dataset train = load_dataset(train_manifest, cfg);
    if (test.skeleton.size() != train.skeleton.size())
        throw error("evaluate: test and train skeletons differ");

    LoadedModel lm = build_model(cfg, test.skeleton);
    load_checkpoint_params(ckpt_path, lm.model.params(), lm.disc_params);

    const TransferFn fn = [&lm, &cfg](const MotionSequence& content, const MotionSequence& style) {
        NoGradGuard inference;
        const MotionTensors mt_c = motion_to_tensors(content, lm.grouping, cfg.hyper.t_max);
        const MotionTensors mt_s = motion_to_tensors(style, lm.grouping, cfg.hyper.t_max);
        return tensors_to_motion(lm.model.transfer(mt_c, mt_s).motion, lm.grouping, content.fps);
    };

    const MetricsReport report = evaluate_metrics(test.clips, train.clips, fn);
    const std::string out_path = resolve_output_path(out_csv);
    const fs::path dir = fs::path(out_path).parent_path();
    if (!dir.empty()) fs::create_directories(dir);
    write_file(out_path, metrics_report_csv(report));
    write_run_stamp(cfg, dir.string());
    return out_path;
}

}  // namespace mst
