// Distributed under the Apache License, Version 2.0.
// See the accompanying LICENSE file or http://www.apache.org/licenses/LICENSE-2.0
#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mst/quat.hpp"

namespace mst {

enum class Channel { XPos, YPos, ZPos, XRot, YRot, ZRot };

struct Joint {
    std::string name;
    int parent = -1;  // -1 on the root
    Vec3 offset;      // rest offset from parent, cm
    std::vector<Channel> channels;
    std::string rot_order;  // rotation channels in file order, e.g. "ZXY"
    std::size_t channel_start = 0;
};

struct EndSite {
    int parent = -1;
    Vec3 offset;
};

struct Skeleton {
    std::vector<Joint> joints;  // topologically ordered, parent index < joint index
    std::vector<EndSite> end_sites;
    std::size_t channel_count = 0;

    int find(std::string_view name) const;
    std::size_t size() const { return joints.size(); }
};

struct BvhDocument {
    Skeleton skeleton;
    std::vector<std::vector<double>> frames;  // channel_count values per frame
    double frame_time = 1.0 / 120.0;

    double fps() const { return 1.0 / frame_time; }
};

/// Parses a BVH text document. Throws mst::error with the offending line
/// number on malformed input, channel-count mismatch or frame-count mismatch.
BvhDocument parse_bvh(std::string_view text);

/// Emits the document back to BVH text (inverse of parse_bvh).
std::string write_bvh_document(const BvhDocument& doc);

struct FramePose {
    std::vector<Vec3> pos;   // world position per joint
    std::vector<Quat> rot;   // world rotation per joint
};

Quat local_rotation(const Joint& j, std::span<const double> frame);
Vec3 local_translation(const Joint& j, std::span<const double> frame);

FramePose forward_kinematics(const Skeleton& skel, std::span<const double> frame);

}  // namespace mst
