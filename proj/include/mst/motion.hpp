// Distributed under the Apache License, Version 2.0.
// See the accompanying LICENSE file or http://www.apache.org/licenses/LICENSE-2.0
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "mst/bvh.hpp"
#include "mst/rng.hpp"

namespace mst {

/// Canonical motion representation. Per frame: one 7-vector per joint
/// (root-relative world offset in cm + unit quaternion in the body-facing
/// frame), a root 7-vector (world position + world rotation) and a global
/// velocity 4-vector (positional velocity in cm/frame + yaw rate in
/// rad/frame). The last frame repeats the previous velocity.
struct MotionSequence {
    std::size_t joint_count = 0;
    std::size_t frame_count = 0;
    std::vector<double> joints;  // frame_count x joint_count x 7, layout [o.xyz, q.wxyz]
    std::vector<double> root;    // frame_count x 7
    std::vector<double> vel;     // frame_count x 4
    double fps = 60.0;
    std::string style_label;
    std::string content_label;

    double* joint_at(std::size_t t, std::size_t j) { return joints.data() + (t * joint_count + j) * 7; }
    const double* joint_at(std::size_t t, std::size_t j) const {
        return joints.data() + (t * joint_count + j) * 7;
    }
    double* root_at(std::size_t t) { return root.data() + t * 7; }
    const double* root_at(std::size_t t) const { return root.data() + t * 7; }
    double* vel_at(std::size_t t) { return vel.data() + t * 4; }
    const double* vel_at(std::size_t t) const { return vel.data() + t * 4; }

    void resize(std::size_t frames, std::size_t njoints) {
        joint_count = njoints;
        frame_count = frames;
        joints.assign(frames * njoints * 7, 0.0);
        root.assign(frames * 7, 0.0);
        vel.assign(frames * 4, 0.0);
    }
};

/// Names of joints to keep when reducing a source skeleton. The reduced
/// skeleton keeps the source's topological order; rotations of removed
/// joints are folded into the first kept joint below them on each chain so
/// kept world rotations are preserved exactly.
struct RetargetSpec {
    std::vector<std::string> keep;
};

struct RetargetResult {
    Skeleton skeleton;
    std::vector<std::vector<double>> frames;
};

RetargetResult retarget(const Skeleton& src, const std::vector<std::vector<double>>& frames,
                        const RetargetSpec& spec);

/// Joint names used to derive the per-frame body-facing yaw (forward axis =
/// horizontal projection of up x (right hip - left hip)).
struct BodyFrameSpec {
    std::string left_hip = "LeftUpLeg";
    std::string right_hip = "RightUpLeg";
};

MotionSequence to_motion_sequence(const Skeleton& skel, const std::vector<std::vector<double>>& frames,
                                  double fps, const BodyFrameSpec& body);

/// Keeps every factor-th frame; velocities are recomputed from the kept
/// frames and fps is divided by the factor.
MotionSequence downsample(const MotionSequence& ms, std::size_t factor);

/// Contiguous window with length uniform in [min_len, min(max_len, frames)]
/// and start uniform over the feasible range; velocities recomputed.
MotionSequence random_crop(const MotionSequence& ms, Rng& rng, std::size_t min_len,
                           std::size_t max_len);

void recompute_velocities(MotionSequence& ms);

struct ContactParams {
    std::array<std::string, 4> feet = {"LeftFoot", "LeftToeBase", "RightFoot", "RightToeBase"};
    double height_thresh_cm = 3.0;   // above the per-clip floor
    double velocity_thresh_cm = 0.5; // cm per frame
};

struct FootContactMask {
    std::array<int, 4> joints{-1, -1, -1, -1};
    std::size_t frame_count = 0;
    std::vector<std::uint8_t> mask;       // frame_count x 4
    std::array<std::size_t, 4> counts{};  // contact frames per foot

    bool at(std::size_t t, std::size_t foot) const { return mask[t * 4 + foot] != 0; }
};

FootContactMask detect_foot_contacts(const MotionSequence& ms, const Skeleton& skel,
                                     const ContactParams& params);

/// Rebuilds a BVH document from the representation (inverse of
/// to_motion_sequence). Quaternions farther than unit_tol from unit length
/// are an error unless normalize is set.
BvhDocument motion_to_bvh(const Skeleton& skel, const MotionSequence& ms,
                          const BodyFrameSpec& body, bool normalize = false,
                          double unit_tol = 1e-3);

std::string write_bvh(const Skeleton& skel, const MotionSequence& ms, const BodyFrameSpec& body,
                      bool normalize = false, double unit_tol = 1e-3);

}  // namespace mst
