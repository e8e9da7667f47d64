// Distributed under the Apache License, Version 2.0.
// See the accompanying LICENSE file or http://www.apache.org/licenses/LICENSE-2.0

#include "mst/motion.hpp"

#include <algorithm>
#include <cmath>

namespace mst {

namespace {

double wrap_angle(double a) {
    while (a > kPi) a -= 2 * kPi;
    while (a <= -kPi) a += 2 * kPi;
    return a;
}

// Facing yaw from hip positions: forward = horizontal(up x (right - left)).
double facing_yaw(const Vec3& left_hip, const Vec3& right_hip, double fallback) {
    const Vec3 up{0, 1, 0};
    Vec3 f = up.cross(right_hip - left_hip);
    f.y = 0;
    const double n = f.norm();
    if (n < 1e-9) return fallback;
    return std::atan2(-f.z / n, f.x / n);
}

}  // namespace

RetargetResult retarget(const Skeleton& src, const std::vector<std::vector<double>>& frames,
                        const RetargetSpec& spec) {
    std::vector<int> keep_of_src(src.size(), -1);
    for (const auto& name : spec.keep) {
        const int j = src.find(name);
        if (j < 0) throw error("retarget: required joint '" + name + "' not found in skeleton");
        keep_of_src[static_cast<std::size_t>(j)] = 1;
    }
    if (keep_of_src[0] != 1)
        throw error("retarget: root joint '" + src.joints[0].name + "' must be kept");

    RetargetResult out;
    std::vector<int> new_index(src.size(), -1);
    // Source order is topological, so the kept subsequence is too.
    std::vector<std::vector<int>> fold_path(src.size());  // removed joints folded into each kept one
    for (std::size_t j = 0; j < src.size(); ++j) {
        if (keep_of_src[j] != 1) continue;
        const Joint& sj = src.joints[j];
        Joint nj;
        nj.name = sj.name;
        nj.channels = sj.channels;
        nj.rot_order = sj.rot_order;
        nj.offset = sj.offset;
        // walk up to the nearest kept ancestor, accumulating rest offsets
        int p = sj.parent;
        std::vector<int> path;
        while (p >= 0 && keep_of_src[static_cast<std::size_t>(p)] != 1) {
            path.push_back(p);
            nj.offset = nj.offset + src.joints[static_cast<std::size_t>(p)].offset;
            p = src.joints[static_cast<std::size_t>(p)].parent;
        }
        std::reverse(path.begin(), path.end());  // top-down along the chain
        nj.parent = p < 0 ? -1 : new_index[static_cast<std::size_t>(p)];
        nj.channel_start = out.skeleton.channel_count;
        out.skeleton.channel_count += nj.channels.size();
        new_index[j] = static_cast<int>(out.skeleton.joints.size());
        fold_path[j] = std::move(path);
        out.skeleton.joints.push_back(std::move(nj));
    }
    for (const auto& es : src.end_sites) {
        if (keep_of_src[static_cast<std::size_t>(es.parent)] == 1)
            out.skeleton.end_sites.push_back(
                {new_index[static_cast<std::size_t>(es.parent)], es.offset});
    }

    out.frames.reserve(frames.size());
    for (const auto& frame : frames) {
        if (frame.size() != src.channel_count)
            throw error("retarget: frame has " + std::to_string(frame.size()) +
                        " channels, skeleton expects " + std::to_string(src.channel_count));
        std::vector<double> row(out.skeleton.channel_count, 0.0);
        for (std::size_t j = 0; j < src.size(); ++j) {
            if (new_index[j] < 0) continue;
            const Joint& sj = src.joints[j];
            const Joint& nj = out.skeleton.joints[static_cast<std::size_t>(new_index[j])];
            // fold removed rotations above this joint into its local rotation
            Quat q = Quat::identity();
            for (int r : fold_path[j]) q = q * local_rotation(src.joints[static_cast<std::size_t>(r)], frame);
            q = q * local_rotation(sj, frame);
            std::array<double, 3> deg{0, 0, 0};
            if (!nj.rot_order.empty()) deg = quat_to_euler_deg(q, nj.rot_order);
            std::size_t rot_i = 0;
            std::size_t ci = nj.channel_start;
            std::size_t src_ci = sj.channel_start;
            for (Channel c : sj.channels) {
                const double v = frame[src_ci++];
                switch (c) {
                    case Channel::XPos:
                    case Channel::YPos:
                    case Channel::ZPos: row[ci++] = v; break;
                    default: row[ci++] = deg[rot_i++]; break;
                }
            }
        }
        out.frames.push_back(std::move(row));
    }
    return out;
}

MotionSequence to_motion_sequence(const Skeleton& skel, const std::vector<std::vector<double>>& frames,
                                  double fps, const BodyFrameSpec& body) {
    if (frames.size() < 2)
        throw error("to_motion_sequence: need at least 2 frames, got " +
                    std::to_string(frames.size()));
    const int lh = skel.find(body.left_hip);
    const int rh = skel.find(body.right_hip);
    if (lh < 0 || rh < 0)
        throw error("to_motion_sequence: hip joints '" + body.left_hip + "'/'" + body.right_hip +
                    "' not found");

    MotionSequence ms;
    ms.resize(frames.size(), skel.size());
    ms.fps = fps;

    double prev_yaw = 0.0;
    std::vector<Quat> prev_q(skel.size() + 1);  // slot joint_count = root
    for (std::size_t t = 0; t < frames.size(); ++t) {
        const FramePose pose = forward_kinematics(skel, frames[t]);
        const double psi = facing_yaw(pose.pos[static_cast<std::size_t>(lh)],
                                      pose.pos[static_cast<std::size_t>(rh)], prev_yaw);
        prev_yaw = psi;
        const Quat inv_face = Quat::about_y(psi).conj();
        for (std::size_t j = 0; j < skel.size(); ++j) {
            const Vec3 o = pose.pos[j] - pose.pos[0];
            Quat q = (inv_face * pose.rot[j]).normalized();
            if (t == 0 ? q.w < 0 : q.dot(prev_q[j]) < 0) q = q.negated();
            prev_q[j] = q;
            double* v = ms.joint_at(t, j);
            v[0] = o.x; v[1] = o.y; v[2] = o.z;
            v[3] = q.w; v[4] = q.x; v[5] = q.y; v[6] = q.z;
        }
        Quat qr = pose.rot[0].normalized();
        if (t == 0 ? qr.w < 0 : qr.dot(prev_q[skel.size()]) < 0) qr = qr.negated();
        prev_q[skel.size()] = qr;
        double* r = ms.root_at(t);
        r[0] = pose.pos[0].x; r[1] = pose.pos[0].y; r[2] = pose.pos[0].z;
        r[3] = qr.w; r[4] = qr.x; r[5] = qr.y; r[6] = qr.z;
    }
    recompute_velocities(ms);
    return ms;
}

void recompute_velocities(MotionSequence& ms) {
    if (ms.frame_count < 2) throw error("recompute_velocities: need at least 2 frames");
    auto yaw_at = [&ms](std::size_t t) {
        const double* r = ms.root_at(t);
        return yaw_of({r[3], r[4], r[5], r[6]});
    };
    for (std::size_t t = 0; t + 1 < ms.frame_count; ++t) {
        const double* r0 = ms.root_at(t);
        const double* r1 = ms.root_at(t + 1);
        double* v = ms.vel_at(t);
        v[0] = r1[0] - r0[0];
        v[1] = r1[1] - r0[1];
        v[2] = r1[2] - r0[2];
        v[3] = wrap_angle(yaw_at(t + 1) - yaw_at(t));
    }
    std::copy_n(ms.vel_at(ms.frame_count - 2), 4, ms.vel_at(ms.frame_count - 1));
}

MotionSequence downsample(const MotionSequence& ms, std::size_t factor) {
    if (factor < 1) throw error("downsample: factor must be >= 1");
    if (factor == 1) return ms;
    const std::size_t kept = (ms.frame_count + factor - 1) / factor;
    if (kept < 2)
        throw error("downsample: result would have " + std::to_string(kept) + " frame(s)");
    MotionSequence out;
    out.resize(kept, ms.joint_count);
    out.fps = ms.fps / static_cast<double>(factor);
    out.style_label = ms.style_label;
    out.content_label = ms.content_label;
    for (std::size_t i = 0; i < kept; ++i) {
        const std::size_t t = i * factor;
        std::copy_n(ms.joint_at(t, 0), ms.joint_count * 7, out.joint_at(i, 0));
        std::copy_n(ms.root_at(t), 7, out.root_at(i));
    }
    recompute_velocities(out);
    return out;
}

MotionSequence random_crop(const MotionSequence& ms, Rng& rng, std::size_t min_len,
                           std::size_t max_len) {
    if (min_len < 2) throw error("random_crop: min_len must be >= 2");
    if (min_len > ms.frame_count)
        throw error("random_crop: min_len " + std::to_string(min_len) + " exceeds clip length " +
                    std::to_string(ms.frame_count));
    const std::size_t hi = std::min(max_len, ms.frame_count);
    const auto len = static_cast<std::size_t>(
        rng.uniform_int(static_cast<std::int64_t>(min_len), static_cast<std::int64_t>(hi)));
    const auto start = static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<std::int64_t>(ms.frame_count - len)));
    MotionSequence out;
    out.resize(len, ms.joint_count);
    out.fps = ms.fps;
    out.style_label = ms.style_label;
    out.content_label = ms.content_label;
    std::copy_n(ms.joint_at(start, 0), len * ms.joint_count * 7, out.joint_at(0, 0));
    std::copy_n(ms.root_at(start), len * 7, out.root_at(0));
    recompute_velocities(out);
    return out;
}

FootContactMask detect_foot_contacts(const MotionSequence& ms, const Skeleton& skel,
                                     const ContactParams& params) {
    FootContactMask fc;
    fc.frame_count = ms.frame_count;
    fc.mask.assign(ms.frame_count * 4, 0);
    for (std::size_t f = 0; f < 4; ++f) {
        const int j = skel.find(params.feet[f]);
        if (j < 0) throw error("detect_foot_contacts: foot joint '" + params.feet[f] + "' not found");
        fc.joints[f] = j;
    }

    auto world = [&ms](std::size_t t, std::size_t j) {
        const double* r = ms.root_at(t);
        const double* v = ms.joint_at(t, j);
        return Vec3{r[0] + v[0], r[1] + v[1], r[2] + v[2]};
    };

    double floor_y = 1e300;
    for (std::size_t t = 0; t < ms.frame_count; ++t)
        for (std::size_t f = 0; f < 4; ++f)
            floor_y = std::min(floor_y, world(t, static_cast<std::size_t>(fc.joints[f])).y);

    for (std::size_t f = 0; f < 4; ++f) {
        const auto j = static_cast<std::size_t>(fc.joints[f]);
        std::size_t count = 0;
        for (std::size_t t = 0; t < ms.frame_count; ++t) {
            const Vec3 p = world(t, j);
            const std::size_t tv = t + 1 < ms.frame_count ? t : t - 1;  // repeat last velocity
            const double speed = (world(tv + 1, j) - world(tv, j)).norm();
            const bool contact =
                p.y < floor_y + params.height_thresh_cm && speed < params.velocity_thresh_cm;
            fc.mask[t * 4 + f] = contact ? 1 : 0;
            count += contact ? 1 : 0;
        }
        fc.counts[f] = count;
    }
    return fc;
}

BvhDocument motion_to_bvh(const Skeleton& skel, const MotionSequence& ms, const BodyFrameSpec& body,
                          bool normalize, double unit_tol) {
    if (skel.size() != ms.joint_count)
        throw error("motion_to_bvh: skeleton has " + std::to_string(skel.size()) +
                    " joints, sequence has " + std::to_string(ms.joint_count));
    const int lh = skel.find(body.left_hip);
    const int rh = skel.find(body.right_hip);
    if (lh < 0 || rh < 0)
        throw error("motion_to_bvh: hip joints '" + body.left_hip + "'/'" + body.right_hip +
                    "' not found");
    bool root_has_pos = false;
    for (Channel c : skel.joints[0].channels)
        if (c == Channel::XPos || c == Channel::YPos || c == Channel::ZPos) root_has_pos = true;
    if (!root_has_pos) throw error("motion_to_bvh: root joint has no translation channels");

    auto unit = [normalize, unit_tol](Quat q, const char* what) {
        const double n = q.norm();
        if (!normalize && std::abs(n - 1.0) > unit_tol)
            throw error(std::string("motion_to_bvh: non-unit quaternion (|q|=") + std::to_string(n) +
                        ") in " + what);
        return q.normalized();
    };

    BvhDocument doc;
    doc.skeleton = skel;
    doc.frame_time = 1.0 / ms.fps;
    doc.frames.reserve(ms.frame_count);

    double prev_yaw = 0.0;
    for (std::size_t t = 0; t < ms.frame_count; ++t) {
        const double* r = ms.root_at(t);
        const Vec3 root_pos{r[0], r[1], r[2]};
        const Quat q_root = unit({r[3], r[4], r[5], r[6]}, "root rotation");

        auto joint_offset = [&ms, t](std::size_t j) {
            const double* v = ms.joint_at(t, j);
            return Vec3{v[0], v[1], v[2]};
        };
        const double psi = facing_yaw(joint_offset(static_cast<std::size_t>(lh)),
                                      joint_offset(static_cast<std::size_t>(rh)), prev_yaw);
        prev_yaw = psi;
        const Quat face = Quat::about_y(psi);

        std::vector<Quat> world_rot(skel.size());
        world_rot[0] = q_root;
        for (std::size_t j = 1; j < skel.size(); ++j) {
            const double* v = ms.joint_at(t, j);
            world_rot[j] = face * unit({v[3], v[4], v[5], v[6]}, skel.joints[j].name.c_str());
        }

        std::vector<double> row(skel.channel_count, 0.0);
        for (std::size_t j = 0; j < skel.size(); ++j) {
            const Joint& joint = skel.joints[j];
            const Quat local = joint.parent < 0
                                   ? world_rot[j]
                                   : world_rot[static_cast<std::size_t>(joint.parent)].conj() *
                                         world_rot[j];
            std::array<double, 3> deg{0, 0, 0};
            if (!joint.rot_order.empty()) deg = quat_to_euler_deg(local, joint.rot_order);
            const Vec3 tr = root_pos - joint.offset;  // only used on the root
            std::size_t rot_i = 0;
            std::size_t ci = joint.channel_start;
            for (Channel c : joint.channels) {
                switch (c) {
                    case Channel::XPos: row[ci++] = joint.parent < 0 ? tr.x : 0.0; break;
                    case Channel::YPos: row[ci++] = joint.parent < 0 ? tr.y : 0.0; break;
                    case Channel::ZPos: row[ci++] = joint.parent < 0 ? tr.z : 0.0; break;
                    default: row[ci++] = deg[rot_i++]; break;
                }
            }
        }
        doc.frames.push_back(std::move(row));
    }
    return doc;
}

std::string write_bvh(const Skeleton& skel, const MotionSequence& ms, const BodyFrameSpec& body,
                      bool normalize, double unit_tol) {
    return write_bvh_document(motion_to_bvh(skel, ms, body, normalize, unit_tol));
}

}  // namespace mst
