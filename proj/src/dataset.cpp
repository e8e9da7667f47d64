// Distributed under the Apache License, Version 2.0.
// See the accompanying LICENSE file or http://www.apache.org/licenses/LICENSE-2.0

#include "mst/dataset.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace mst {

std::vector<std::string> Dataset::style_labels() const {
    std::vector<std::string> out;
    for (const auto& c : clips)
        if (std::find(out.begin(), out.end(), c.style_label) == out.end())
            out.push_back(c.style_label);
    return out;
}

std::vector<std::string> Dataset::content_labels() const {
    std::vector<std::string> out;
    for (const auto& c : clips)
        if (std::find(out.begin(), out.end(), c.content_label) == out.end())
            out.push_back(c.content_label);
    return out;
}

std::vector<std::size_t> Dataset::cell(const std::string& style, const std::string& content) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < clips.size(); ++i)
        if (clips[i].style_label == style && clips[i].content_label == content) out.push_back(i);
    return out;
}

MotionSequence prepare_clip(const BvhDocument& doc, const RunConfig& cfg, Skeleton* out_skel) {
    const Skeleton* skel = &doc.skeleton;
    const std::vector<std::vector<double>>* frames = &doc.frames;
    RetargetResult reduced;
    if (!cfg.keep_joints.empty()) {
        reduced = retarget(doc.skeleton, doc.frames, RetargetSpec{cfg.keep_joints});
        skel = &reduced.skeleton;
        frames = &reduced.frames;
    }
    MotionSequence ms = to_motion_sequence(*skel, *frames, doc.fps(), cfg.body);
    if (cfg.downsample_factor > 1) ms = downsample(ms, cfg.downsample_factor);
    if (out_skel) *out_skel = *skel;
    return ms;
}

Dataset load_dataset(const std::string& manifest_path, const RunConfig& cfg) {
    std::ifstream in(manifest_path);
    if (!in) throw error("cannot open manifest '" + manifest_path + "'");
    const std::string base = std::filesystem::path(manifest_path).parent_path().string();

    Dataset ds;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream row(line);
        std::string path, style, content;
        if (!(row >> path >> style >> content))
            throw error("manifest line " + std::to_string(lineno) +
                        ": expected 'path style content'");
        const std::string full =
            std::filesystem::path(path).is_absolute()
                ? path
                : (std::filesystem::path(base) / path).string();
        std::ifstream file(full, std::ios::binary);
        if (!file) throw error("manifest line " + std::to_string(lineno) + ": cannot open '" +
                               full + "'");
        std::ostringstream buf;
        buf << file.rdbuf();
        BvhDocument doc;
        try {
            doc = parse_bvh(buf.str());
        } catch (const error& e) {
            throw error(std::string(e.what()) + " (in '" + full + "')");
        }
        Skeleton skel;
        MotionSequence ms = prepare_clip(doc, cfg, &skel);
        ms.style_label = style;
        ms.content_label = content;
        if (ds.clips.empty()) {
            ds.skeleton = skel;
        } else {
            if (skel.size() != ds.skeleton.size())
                throw error("manifest line " + std::to_string(lineno) +
                            ": clip skeleton differs in joint count");
            for (std::size_t j = 0; j < skel.size(); ++j)
                if (skel.joints[j].name != ds.skeleton.joints[j].name)
                    throw error("manifest line " + std::to_string(lineno) +
                                ": clip skeleton joint order differs at '" +
                                skel.joints[j].name + "'");
        }
        ds.clips.push_back(std::move(ms));
    }
    if (ds.clips.empty()) throw error("manifest '" + manifest_path + "' lists no clips");
    return ds;
}

}  // namespace mst
