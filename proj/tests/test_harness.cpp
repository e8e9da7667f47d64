// Distributed under the Apache License, Version 2.0.
// See the accompanying LICENSE file or http://www.apache.org/licenses/LICENSE-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "mst/metrics.hpp"
#include "mst/pipeline.hpp"
#include "mst/synth.hpp"

using namespace mst;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("mst_" + tag + "_" + std::to_string(::getpid()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string str() const { return path.string(); }
};

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

RunConfig tiny_config(const std::string& manifest, const std::string& out_dir,
                      std::size_t iterations = 3) {
    std::ostringstream os;
    os << "seed = 5\n"
       << "iterations = " << iterations << "\n"
       << "checkpoint_every = 3\n"
       << "min_crop = 8\n"
       << "t_max = 12\n"
       << "embed_dim = 8\n"
       << "proj_dim = 4\n"
       << "heads = 2\n"
       << "blocks = 3\n"
       << "mlp_hidden = 16\n"
       << "batch = 1\n"
       << "lr_encgen = 1e-4\n"
       << "lr_disc = 1e-5\n"
       << "manifest = " << manifest << "\n"
       << "out_dir = " << out_dir << "\n";
    return parse_config_text(os.str(), "");
}

std::string make_dataset(const TempDir& dir, std::size_t frames = 16) {
    SynthDatasetOptions opt;
    opt.styles = 2;
    opt.contents = 2;
    opt.clips_per_cell = 1;
    opt.frames = frames;
    write_synth_dataset(dir.str(), opt);
    return (dir.path / "manifest.tsv").string();
}

}  // namespace

TEST_CASE("config: parse, defaults and validation") {
    const RunConfig cfg = parse_config_text(
        "# comment\n"
        "seed = 42\n"
        "embed_dim = 16   # inline comment\n"
        "\n"
        "lambda_acc = 0.25\n",
        "");
    CHECK(cfg.seed == 42);
    CHECK(cfg.hyper.embed_dim == 16);
    CHECK(cfg.hyper.lambda_acc == 0.25);
    CHECK(cfg.part_names.size() == 5);  // desk defaults fill the rest
    CHECK(cfg.keep_joints.size() == 21);

    CHECK_THROWS_WITH_AS(parse_config_text("no_such_key = 1\n", ""),
                         doctest::Contains("unknown key"), error);
    CHECK_THROWS_WITH_AS(parse_config_text("embed_dim = seven\n", ""),
                         doctest::Contains("non-numeric"), error);
    CHECK_THROWS_AS(parse_config_text("embed_dim = 7\n", ""), error);   // odd
    CHECK_THROWS_AS(parse_config_text("min_crop = 999\n", ""), error);  // > t_max
    CHECK_THROWS_WITH_AS(parse_config_text("parts = torso\n", ""),
                         doctest::Contains("part"), error);
    CHECK_THROWS_WITH_AS(parse_config_text("feet = A,B\n", ""), doctest::Contains("feet"), error);
}

TEST_CASE("config: the in-code hyperparameter defaults are the full-scale profile") {
    const HyperParams hp;
    CHECK(hp.embed_dim == 64);
    CHECK(hp.proj_dim == 32);
    CHECK(hp.heads == 4);
    CHECK(hp.blocks == 3);
    CHECK(hp.t_max == 200);
    CHECK(hp.batch == 8);
    CHECK(hp.lr_encgen == 1e-5);
    CHECK(hp.lr_disc == 1e-6);
    CHECK(hp.lambda_adv == 1.0);
    CHECK(hp.lambda_d == 1.0);
    CHECK(hp.lambda_vel == 1.0);
    CHECK(hp.lambda_foot == 1.0);
    CHECK(hp.lambda_recon == 3.0);
    CHECK(hp.lambda_cyc == 3.0);
    CHECK(hp.lambda_acc == 0.1);

    const RunConfig full = parse_config_text(
        "iterations = 300000\nbatch = 8\nembed_dim = 64\nproj_dim = 32\nheads = 4\n"
        "t_max = 200\nmlp_hidden = 128\nlr_encgen = 1e-5\nlr_disc = 1e-6\nmin_crop = 120\n"
        "downsample = 2\n",
        "");
    CHECK(full.iterations == 300000);
    CHECK(full.hyper.batch == 8);
    CHECK(full.downsample_factor == 2);
}

TEST_CASE("config: grouping resolution catches bad partitions") {
    RunConfig cfg = desk_config();
    const Skeleton skel = synthetic_skeleton21();
    const PartGrouping g = cfg.resolve_grouping(skel);
    CHECK(g.parts() == 5);
    CHECK(g.total_joints() == 21);

    RunConfig missing = cfg;
    missing.part_joints["torso"] = {"Hips", "Spine", "Spine1", "Neck"};  // drops Head
    CHECK_THROWS_WITH_AS(missing.resolve_grouping(skel), doctest::Contains("Head"), error);

    RunConfig dup = cfg;
    dup.part_joints["left_arm"] = {"LeftShoulder", "LeftArm", "LeftForeArm", "Head"};
    CHECK_THROWS_AS(dup.resolve_grouping(skel), error);
}

TEST_CASE("synthetic dataset writes a loadable manifest") {
    TempDir dir("synth");
    const std::string manifest = make_dataset(dir);
    const RunConfig cfg = tiny_config(manifest, "");
    const Dataset ds = load_dataset(manifest, cfg);
    CHECK(ds.clips.size() == 4);
    CHECK(ds.skeleton.size() == 21);
    CHECK(ds.style_labels().size() == 2);
    CHECK(ds.content_labels().size() == 2);
    for (const auto& c : ds.clips) {
        CHECK(c.frame_count == 16);
        CHECK(c.joint_count == 21);
    }
    CHECK(ds.cell("neutral", "walk").size() == 1);
}

TEST_CASE("dataset loader reduces 31-joint files to the configured 21") {
    TempDir dir("synth31");
    SynthDatasetOptions opt;
    opt.styles = 1;
    opt.contents = 1;
    opt.frames = 12;
    opt.skeleton31 = true;
    write_synth_dataset(dir.str(), opt);
    const RunConfig cfg = tiny_config((dir.path / "manifest.tsv").string(), "");
    const Dataset ds = load_dataset(cfg.manifest, cfg);
    CHECK(ds.skeleton.size() == 21);
    CHECK(ds.clips[0].joint_count == 21);
}

TEST_CASE("trainer: same seed, same loss log") {
    TempDir dir("det");
    const std::string manifest = make_dataset(dir);
    const RunConfig cfg = tiny_config(manifest, "");

    auto run_rows = [&cfg, &manifest] {
        Trainer trainer(cfg, load_dataset(manifest, cfg));
        std::vector<std::string> rows;
        for (int i = 0; i < 3; ++i)
            rows.push_back(Trainer::loss_csv_row(trainer.iteration() + 1, trainer.step()));
        return rows;
    };
    const auto rows1 = run_rows();
    const auto rows2 = run_rows();
    CHECK(rows1 == rows2);
    CHECK(rows1.size() == 3);
    CHECK(rows1[0] != rows1[1]);
}

TEST_CASE("trainer: disentanglement sampling requires two content labels per style") {
    TempDir dir("nold");
    SynthDatasetOptions opt;
    opt.styles = 2;
    opt.contents = 1;  // one content label: the triplet cannot be formed
    opt.frames = 12;
    write_synth_dataset(dir.str(), opt);
    const RunConfig cfg = tiny_config((dir.path / "manifest.tsv").string(), "");
    Trainer trainer(cfg, load_dataset(cfg.manifest, cfg));
    CHECK_FALSE(trainer.disentangle_enabled());
    const LossBreakdown parts = trainer.step();
    CHECK(parts.l_d == 0.0);
    CHECK(parts.total == doctest::Approx(weighted_total(parts, cfg.hyper)).epsilon(1e-9));
}

TEST_CASE("checkpoint: save/load round trip reproduces outputs bit-exactly") {
    TempDir dir("ckpt");
    const std::string manifest = make_dataset(dir);
    const RunConfig cfg = tiny_config(manifest, "");

    Trainer a(cfg, load_dataset(manifest, cfg));
    a.step();
    a.step();
    const fs::path ckpt = dir.path / "state.bin";
    a.save(ckpt.string());

    Trainer b(cfg, load_dataset(manifest, cfg));
    b.load(ckpt.string());
    CHECK(b.iteration() == 2);

    // identical forward outputs on a fixed input
    const Dataset ds = load_dataset(manifest, cfg);
    const MotionTensors probe = a.prep(ds.clips[0]);
    NoGradGuard inference;
    const auto out_a = a.model().transfer(probe, probe);
    const auto out_b = b.model().transfer(probe, probe);
    CHECK(std::equal(out_a.motion.root.value().begin(), out_a.motion.root.value().end(),
                     out_b.motion.root.value().begin()));
    for (std::size_t p = 0; p < out_a.motion.parts.size(); ++p)
        CHECK(std::equal(out_a.motion.parts[p].value().begin(),
                         out_a.motion.parts[p].value().end(),
                         out_b.motion.parts[p].value().begin()));

    // save -> load -> save is byte-identical
    const fs::path ckpt2 = dir.path / "state2.bin";
    b.save(ckpt2.string());
    CHECK(read_file(ckpt) == read_file(ckpt2));
}

TEST_CASE("checkpoint: loading rejects mismatched models") {
    TempDir dir("ckptbad");
    const std::string manifest = make_dataset(dir);
    const RunConfig cfg = tiny_config(manifest, "");
    Trainer a(cfg, load_dataset(manifest, cfg));
    const fs::path ckpt = dir.path / "state.bin";
    a.save(ckpt.string());

    RunConfig bigger = cfg;
    bigger.hyper.embed_dim = 16;
    Trainer b(bigger, load_dataset(manifest, cfg));
    CHECK_THROWS_WITH_AS(b.load(ckpt.string()), doctest::Contains("shape"), error);
}

TEST_CASE("trainer: resume continues the exact loss trajectory") {
    TempDir dir("resume");
    const std::string manifest = make_dataset(dir);
    const RunConfig cfg = tiny_config(manifest, "");

    Trainer straight(cfg, load_dataset(manifest, cfg));
    std::vector<std::string> straight_rows;
    for (int i = 0; i < 6; ++i)
        straight_rows.push_back(Trainer::loss_csv_row(straight.iteration() + 1, straight.step()));

    Trainer first(cfg, load_dataset(manifest, cfg));
    for (int i = 0; i < 3; ++i) first.step();
    const fs::path ckpt = dir.path / "mid.bin";
    first.save(ckpt.string());

    Trainer resumed(cfg, load_dataset(manifest, cfg));
    resumed.load(ckpt.string());
    for (int i = 3; i < 6; ++i) {
        const std::string row =
            Trainer::loss_csv_row(resumed.iteration() + 1, resumed.step());
        CHECK(row == straight_rows[static_cast<std::size_t>(i)]);
    }
}

TEST_CASE("pipeline: train, transfer and evaluate end to end") {
    TempDir data("pipe_data");
    TempDir out("pipe_out");
    const std::string manifest = make_dataset(data);
    RunConfig cfg = tiny_config(manifest, (out.path / "run").string(), 3);
    cfg.source_text = "synthetic";

    run_train(cfg);
    const fs::path run_dir = out.path / "run";
    CHECK(fs::exists(run_dir / "loss.csv"));
    CHECK(fs::exists(run_dir / "run_stamp.txt"));
    CHECK(fs::exists(run_dir / "checkpoint_000003.bin"));
    CHECK(fs::exists(run_dir / "checkpoint_latest.bin"));
    const std::string stamp = read_file(run_dir / "run_stamp.txt");
    CHECK(stamp.find("config_hash:") != std::string::npos);
    CHECK(stamp.find("seed: 5") != std::string::npos);
    CHECK(stamp.find("version:") != std::string::npos);

    // loss.csv: header + 3 rows
    std::istringstream csv(read_file(run_dir / "loss.csv"));
    std::string line;
    std::getline(csv, line);
    CHECK(line == Trainer::loss_csv_header());
    std::size_t rows = 0;
    while (std::getline(csv, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 3);

    // transfer
    const std::string content_bvh = (data.path / "neutral_walk_0.bvh").string();
    const std::string style_bvh = (data.path / "energetic_kick_0.bvh").string();
    const std::string gen_path = (out.path / "gen" / "stylized.bvh").string();
    const TransferPaths paths =
        run_transfer(cfg, (run_dir / "checkpoint_latest.bin").string(), content_bvh, style_bvh,
                     gen_path);
    CHECK(fs::exists(paths.generated_bvh));
    CHECK(fs::exists(paths.style_feature_csv));
    CHECK(fs::exists(paths.modulated_style_feature_csv));
    CHECK(paths.attention_head_csvs.size() == 2);

    // the generated file parses and keeps the content frame count
    const BvhDocument gen_doc = parse_bvh(read_file(paths.generated_bvh));
    CHECK(gen_doc.skeleton.size() == 21);
    CHECK(gen_doc.frames.size() == 12);  // t_max-truncated content length

    // attention CSV re-read: header + row-stochastic data rows
    std::istringstream attn(read_file(paths.attention_mean_csv));
    std::getline(attn, line);
    CHECK(line.find("content_part,torso,") == 0);
    std::size_t attn_rows = 0;
    while (std::getline(attn, line)) {
        if (line.empty()) continue;
        ++attn_rows;
        double sum = 0;
        std::istringstream row(line);
        std::string cell;
        std::getline(row, cell, ',');  // part name
        while (std::getline(row, cell, ',')) sum += std::stod(cell);
        CHECK(std::abs(sum - 1.0) < 1e-6);
    }
    CHECK(attn_rows == 6);

    // evaluate: CSV exists and the average row carries all three metrics
    const std::string metrics_path =
        run_evaluate(cfg, (run_dir / "checkpoint_latest.bin").string(), manifest, manifest,
                     (out.path / "eval" / "metrics.csv").string());
    const std::string metrics = read_file(metrics_path);
    CHECK(metrics.find("kind,name,cc,sc,scpp") == 0);
    CHECK(metrics.find("overall,average,") != std::string::npos);
    CHECK(metrics.find("content,walk,") != std::string::npos);
    CHECK(metrics.find("style,neutral,") != std::string::npos);
}

TEST_CASE("pipeline: evaluate matches direct metric computation") {
    TempDir data("xcheck");
    TempDir out("xcheck_out");
    const std::string manifest = make_dataset(data, 14);
    RunConfig cfg = tiny_config(manifest, (out.path / "run").string(), 2);
    run_train(cfg);
    const std::string ckpt = (out.path / "run" / "checkpoint_latest.bin").string();

    const std::string metrics_path = run_evaluate(
        cfg, ckpt, manifest, manifest, (out.path / "metrics.csv").string());

    // recompute through the public surfaces
    const Dataset ds = load_dataset(manifest, cfg);
    Rng rng(cfg.seed);
    const PartGrouping grouping = cfg.resolve_grouping(ds.skeleton);
    StyleTransferModel model(grouping, cfg.hyper, rng);
    ParamList disc_params;
    Discriminator disc(grouping, cfg.hyper, rng, disc_params);
    load_checkpoint_params(ckpt, model.params(), disc_params);
    const TransferFn fn = [&](const MotionSequence& c, const MotionSequence& s) {
        NoGradGuard inference;
        const MotionTensors mc = motion_to_tensors(c, grouping, cfg.hyper.t_max);
        const MotionTensors ms = motion_to_tensors(s, grouping, cfg.hyper.t_max);
        return tensors_to_motion(model.transfer(mc, ms).motion, grouping, c.fps);
    };
    const MetricsReport want = evaluate_metrics(ds.clips, ds.clips, fn);

    std::istringstream csv(read_file(metrics_path));
    std::string line;
    std::getline(csv, line);  // header
    std::getline(csv, line);  // overall,average,...
    std::istringstream row(line);
    std::string cell;
    std::getline(row, cell, ',');
    std::getline(row, cell, ',');
    std::getline(row, cell, ',');
    const double cc = std::stod(cell);
    std::getline(row, cell, ',');
    const double sc = std::stod(cell);
    std::getline(row, cell, ',');
    const double scpp = std::stod(cell);
    REQUIRE(want.average.cc.has_value());
    CHECK(cc == doctest::Approx(*want.average.cc).epsilon(1e-12));
    CHECK(sc == doctest::Approx(*want.average.sc).epsilon(1e-12));
    CHECK(scpp == doctest::Approx(*want.average.scpp).epsilon(1e-12));
}

TEST_CASE("output root environment variable reroutes relative paths") {
    CHECK(resolve_output_path("/abs/path.csv") == "/abs/path.csv");
    ::setenv("MST_OUTPUT_ROOT", "/tmp/mst_root_test", 1);
    CHECK(resolve_output_path("rel/x.csv") == "/tmp/mst_root_test/rel/x.csv");
    ::unsetenv("MST_OUTPUT_ROOT");
    CHECK(resolve_output_path("rel/x.csv") == "rel/x.csv");
}
