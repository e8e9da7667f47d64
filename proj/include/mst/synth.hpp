// Distributed under the Apache License, Version 2.0.
// See the accompanying LICENSE file or http://www.apache.org/licenses/LICENSE-2.0
#pragma once

#include <string>
#include <vector>

#include "mst/bvh.hpp"

namespace mst {

/// Procedural desk-scale mocap stand-in: sinusoidal walk/kick/punch-like
/// clips on a 21-joint humanoid, with style expressed as amplitude/tempo/
/// posture parameters. All output is deterministic in (content, style,
/// variant).

Skeleton synthetic_skeleton21();

/// CMU-style 31-joint variant of the same humanoid; the ten extra joints
/// (hip auxiliaries, lower back, second neck link, fingers and thumbs) stay
/// unarticulated so a 21-joint reduction preserves forward kinematics.
Skeleton synthetic_skeleton31();

struct SynthStyle {
    std::string name;
    double amplitude = 1.0;
    double tempo = 1.0;
    double posture_deg = 0.0;  // constant spine pitch
};

std::vector<SynthStyle> synth_styles(std::size_t count);
std::vector<std::string> synth_contents(std::size_t count);

BvhDocument synth_clip(const std::string& content, const SynthStyle& style, std::size_t frames,
                       double fps, std::uint32_t variant, bool skeleton31 = false);

struct SynthDatasetOptions {
    std::size_t styles = 2;
    std::size_t contents = 2;
    std::size_t clips_per_cell = 1;
    std::size_t frames = 48;
    double fps = 60.0;
    bool skeleton31 = false;
};

/// Writes the BVH files plus a manifest.tsv of (path, style, content) rows;
/// returns the written file names.
std::vector<std::string> write_synth_dataset(const std::string& dir,
                                             const SynthDatasetOptions& opt);

}  // namespace mst
