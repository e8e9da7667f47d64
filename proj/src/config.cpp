// Distributed under the Apache License, Version 2.0.
// See the accompanying LICENSE file or http://www.apache.org/licenses/LICENSE-2.0

#include "mst/config.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace mst {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            const std::string t = trim(cur);
            if (!t.empty()) out.push_back(t);
            cur.clear();
        } else {
            cur += c;
        }
    }
    const std::string t = trim(cur);
    if (!t.empty()) out.push_back(t);
    return out;
}

double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw error("config: key '" + key + "' has non-numeric value '" + v + "'");
    }
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
    const double d = parse_double(key, v);
    if (d < 0 || d != static_cast<double>(static_cast<std::uint64_t>(d)))
        throw error("config: key '" + key + "' must be a nonnegative integer, got '" + v + "'");
    return static_cast<std::uint64_t>(d);
}

std::string resolve_path(const std::string& p, const std::string& base) {
    if (p.empty() || base.empty()) return p;
    std::filesystem::path fp(p);
    if (fp.is_absolute()) return p;
    return (std::filesystem::path(base) / fp).string();
}

}  // namespace

std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

RunConfig parse_config_text(const std::string& text, const std::string& base_dir) {
    RunConfig cfg = desk_config();
    cfg.source_text = text;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        const std::string t = trim(line);
        if (t.empty()) continue;
        const std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw error("config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));

        if (key == "seed") cfg.seed = parse_u64(key, value);
        else if (key == "iterations") cfg.iterations = parse_u64(key, value);
        else if (key == "checkpoint_every") cfg.checkpoint_every = parse_u64(key, value);
        else if (key == "min_crop") cfg.min_crop = parse_u64(key, value);
        else if (key == "downsample") cfg.downsample_factor = parse_u64(key, value);
        else if (key == "manifest") cfg.manifest = resolve_path(value, base_dir);
        else if (key == "out_dir") cfg.out_dir = value;
        else if (key == "embed_dim") cfg.hyper.embed_dim = parse_u64(key, value);
        else if (key == "proj_dim") cfg.hyper.proj_dim = parse_u64(key, value);
        else if (key == "heads") cfg.hyper.heads = parse_u64(key, value);
        else if (key == "blocks") cfg.hyper.blocks = parse_u64(key, value);
        else if (key == "t_max") cfg.hyper.t_max = parse_u64(key, value);
        else if (key == "mlp_hidden") cfg.hyper.mlp_hidden = parse_u64(key, value);
        else if (key == "batch") cfg.hyper.batch = parse_u64(key, value);
        else if (key == "lambda_adv") cfg.hyper.lambda_adv = parse_double(key, value);
        else if (key == "lambda_d") cfg.hyper.lambda_d = parse_double(key, value);
        else if (key == "lambda_vel") cfg.hyper.lambda_vel = parse_double(key, value);
        else if (key == "lambda_foot") cfg.hyper.lambda_foot = parse_double(key, value);
        else if (key == "lambda_recon") cfg.hyper.lambda_recon = parse_double(key, value);
        else if (key == "lambda_cyc") cfg.hyper.lambda_cyc = parse_double(key, value);
        else if (key == "lambda_acc") cfg.hyper.lambda_acc = parse_double(key, value);
        else if (key == "lr_encgen") cfg.hyper.lr_encgen = parse_double(key, value);
        else if (key == "lr_disc") cfg.hyper.lr_disc = parse_double(key, value);
        else if (key == "keep_joints") cfg.keep_joints = split_list(value);
        else if (key == "parts") cfg.part_names = split_list(value);
        else if (key.rfind("part.", 0) == 0) cfg.part_joints[key.substr(5)] = split_list(value);
        else if (key == "feet") {
            const auto list = split_list(value);
            if (list.size() != 4)
                throw error("config: 'feet' needs exactly 4 joint names, got " +
                            std::to_string(list.size()));
            for (std::size_t i = 0; i < 4; ++i) cfg.contact.feet[i] = list[i];
        } else if (key == "contact_height_cm") cfg.contact.height_thresh_cm = parse_double(key, value);
        else if (key == "contact_velocity_cm") cfg.contact.velocity_thresh_cm = parse_double(key, value);
        else if (key == "left_hip") cfg.body.left_hip = value;
        else if (key == "right_hip") cfg.body.right_hip = value;
        else throw error("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
    cfg.validate();
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw error("cannot open config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str(), std::filesystem::path(path).parent_path().string());
}

void RunConfig::validate() const {
    hyper.validate();
    if (part_names.empty()) throw error("config: 'parts' must name at least one part");
    for (const auto& name : part_names)
        if (part_joints.find(name) == part_joints.end())
            throw error("config: part '" + name + "' has no part." + name + " joint list");
    for (const auto& [name, joints] : part_joints) {
        bool known = false;
        for (const auto& p : part_names) known = known || p == name;
        if (!known) throw error("config: part." + name + " is not listed in 'parts'");
        if (joints.empty()) throw error("config: part." + name + " is empty");
    }
    if (min_crop < 2) throw error("config: min_crop must be >= 2");
    if (min_crop > hyper.t_max) throw error("config: min_crop exceeds t_max");
    if (downsample_factor < 1) throw error("config: downsample must be >= 1");
}

PartGrouping RunConfig::resolve_grouping(const Skeleton& skel) const {
    std::vector<std::vector<std::string>> lists;
    for (const auto& name : part_names) lists.push_back(part_joints.at(name));
    return PartGrouping::resolve(part_names, lists, skel);
}

RunConfig desk_config() {
    RunConfig cfg;
    cfg.seed = 1;
    cfg.iterations = 2000;
    cfg.checkpoint_every = 500;
    cfg.min_crop = 28;
    cfg.downsample_factor = 1;
    cfg.hyper.embed_dim = 32;
    cfg.hyper.proj_dim = 8;
    cfg.hyper.heads = 2;
    cfg.hyper.blocks = 3;
    cfg.hyper.t_max = 32;
    cfg.hyper.mlp_hidden = 64;
    cfg.hyper.batch = 2;
    // constant Adam rates sized for the short desk-scale overfit runs
    cfg.hyper.lr_encgen = 4e-3;
    cfg.hyper.lr_disc = 1e-4;
    cfg.part_names = {"torso", "left_arm", "right_arm", "left_leg", "right_leg"};
    cfg.part_joints["torso"] = {"Hips", "Spine", "Spine1", "Neck", "Head"};
    cfg.part_joints["left_arm"] = {"LeftShoulder", "LeftArm", "LeftForeArm", "LeftHand"};
    cfg.part_joints["right_arm"] = {"RightShoulder", "RightArm", "RightForeArm", "RightHand"};
    cfg.part_joints["left_leg"] = {"LeftUpLeg", "LeftLeg", "LeftFoot", "LeftToeBase"};
    cfg.part_joints["right_leg"] = {"RightUpLeg", "RightLeg", "RightFoot", "RightToeBase"};
    cfg.keep_joints = {"Hips",          "Spine",        "Spine1",       "Neck",
                       "Head",          "LeftShoulder", "LeftArm",      "LeftForeArm",
                       "LeftHand",      "RightShoulder","RightArm",     "RightForeArm",
                       "RightHand",     "LeftUpLeg",    "LeftLeg",      "LeftFoot",
                       "LeftToeBase",   "RightUpLeg",   "RightLeg",     "RightFoot",
                       "RightToeBase"};
    return cfg;
}

}  // namespace mst
