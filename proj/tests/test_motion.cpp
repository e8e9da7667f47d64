// Distributed under the Apache License, Version 2.0.
// See the accompanying LICENSE file or http://www.apache.org/licenses/LICENSE-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mst/losses.hpp"
#include "mst/motion.hpp"
#include "mst/synth.hpp"

using namespace mst;

namespace {

const char* kTinyBvh = R"(HIERARCHY
ROOT A
{
  OFFSET 1 2 3
  CHANNELS 6 Xposition Yposition Zposition Zrotation Xrotation Yrotation
  JOINT B
  {
    OFFSET 0 5 0
    CHANNELS 3 Zrotation Xrotation Yrotation
    End Site
    {
      OFFSET 0 2 0
    }
  }
}
MOTION
Frames: 1
Frame Time: 0.0333
0 0 0 0 0 0 0 0 0
)";

BvhDocument walk_doc(std::size_t frames = 40, bool skel31 = false) {
    return synth_clip("walk", synth_styles(2)[1], frames, 60.0, 3, skel31);
}

double max_channel_delta(const BvhDocument& a, const BvhDocument& b) {
    REQUIRE(a.frames.size() == b.frames.size());
    double worst = 0;
    for (std::size_t f = 0; f < a.frames.size(); ++f)
        for (std::size_t c = 0; c < a.frames[f].size(); ++c)
            worst = std::max(worst, std::abs(a.frames[f][c] - b.frames[f][c]));
    return worst;
}

}  // namespace

TEST_CASE("parse_bvh reads a hand-written two-joint file") {
    const BvhDocument doc = parse_bvh(kTinyBvh);
    REQUIRE(doc.skeleton.size() == 2);
    CHECK(doc.skeleton.joints[0].name == "A");
    CHECK(doc.skeleton.joints[1].parent == 0);
    CHECK(doc.skeleton.joints[1].offset.y == 5.0);
    CHECK(doc.skeleton.end_sites.size() == 1);
    CHECK(doc.skeleton.channel_count == 9);
    REQUIRE(doc.frames.size() == 1);
    const Quat q = local_rotation(doc.skeleton.joints[1], doc.frames[0]);
    CHECK(q.w == doctest::Approx(1.0));
    CHECK(doc.fps() == doctest::Approx(1.0 / 0.0333));
}

TEST_CASE("parse_bvh recovers declared joint and frame counts") {
    const BvhDocument doc = parse_bvh(write_bvh_document(walk_doc(120, true)));
    CHECK(doc.skeleton.size() == 31);
    CHECK(doc.frames.size() == 120);
}

TEST_CASE("parse_bvh errors carry line numbers") {
    CHECK_THROWS_WITH_AS(parse_bvh("NOPE"), doctest::Contains("line 1"), error);

    // drop one value from the single motion line: channel-count mismatch
    std::string text = kTinyBvh;
    text.resize(text.size() - 3);
    CHECK_THROWS_WITH_AS(parse_bvh(text), doctest::Contains("channel-count"), error);

    std::string extra = std::string(kTinyBvh) + "0 0 0 0 0 0 0 0 0\n";
    CHECK_THROWS_WITH_AS(parse_bvh(extra), doctest::Contains("frame-count"), error);
}

TEST_CASE("bvh write/parse round trip is channel-exact") {
    const BvhDocument orig = walk_doc(60);
    const BvhDocument again = parse_bvh(write_bvh_document(orig));
    CHECK(max_channel_delta(orig, again) == 0.0);  // %.17g survives the text trip
    CHECK(again.frame_time == orig.frame_time);
}

TEST_CASE("motion representation round trip stays within 1e-4 degrees") {
    const BvhDocument orig = walk_doc(50);
    const MotionSequence ms = to_motion_sequence(orig.skeleton, orig.frames, orig.fps(), {});
    const BvhDocument rebuilt = motion_to_bvh(orig.skeleton, ms, {});
    CHECK(max_channel_delta(orig, rebuilt) < 1e-4);
    const BvhDocument reparsed = parse_bvh(write_bvh_document(rebuilt));
    CHECK(max_channel_delta(orig, reparsed) < 1e-4);
}

TEST_CASE("retarget with the identity keep list is a no-op") {
    const BvhDocument doc = walk_doc(10);
    std::vector<std::string> keep;
    for (const auto& j : doc.skeleton.joints) keep.push_back(j.name);
    const RetargetResult r = retarget(doc.skeleton, doc.frames, {keep});
    CHECK(r.skeleton.size() == doc.skeleton.size());
    REQUIRE(r.frames.size() == doc.frames.size());
    double worst = 0;
    for (std::size_t f = 0; f < r.frames.size(); ++f)
        for (std::size_t c = 0; c < r.frames[f].size(); ++c)
            worst = std::max(worst, std::abs(r.frames[f][c] - doc.frames[f][c]));
    CHECK(worst < 1e-9);
}

TEST_CASE("retarget folds a 31-joint identity pose into 21 identity joints") {
    Skeleton skel31 = synthetic_skeleton31();
    std::vector<std::vector<double>> frames(3, std::vector<double>(skel31.channel_count, 0.0));
    std::vector<std::string> keep;
    for (const auto& j : synthetic_skeleton21().joints) keep.push_back(j.name);
    const RetargetResult r = retarget(skel31, frames, {keep});
    REQUIRE(r.skeleton.size() == 21);
    for (const auto& row : r.frames)
        for (double v : row) CHECK(std::abs(v) < 1e-12);
    // offsets compose along removed chains: Hips->LowerBack->Spine
    const int spine = r.skeleton.find("Spine");
    CHECK(r.skeleton.joints[static_cast<std::size_t>(spine)].offset.y == doctest::Approx(12.0));
}

TEST_CASE("retarget preserves kept-joint world positions (FK oracle)") {
    const BvhDocument doc = walk_doc(30, true);  // articulates only kept joints
    std::vector<std::string> keep;
    for (const auto& j : synthetic_skeleton21().joints) keep.push_back(j.name);
    const RetargetResult r = retarget(doc.skeleton, doc.frames, {keep});
    for (std::size_t f = 0; f < doc.frames.size(); ++f) {
        const FramePose full = forward_kinematics(doc.skeleton, doc.frames[f]);
        const FramePose red = forward_kinematics(r.skeleton, r.frames[f]);
        for (std::size_t j = 0; j < r.skeleton.size(); ++j) {
            const int src = doc.skeleton.find(r.skeleton.joints[j].name);
            REQUIRE(src >= 0);
            const Vec3 d = full.pos[static_cast<std::size_t>(src)] - red.pos[j];
            CHECK(d.norm() < 1e-6);
        }
    }
}

TEST_CASE("retarget reports missing joints") {
    const BvhDocument doc = walk_doc(4);
    CHECK_THROWS_WITH_AS(retarget(doc.skeleton, doc.frames, {{"Hips", "NoSuchJoint"}}),
                         doctest::Contains("NoSuchJoint"), error);
}

TEST_CASE("to_motion_sequence on a static pose has zero velocity") {
    Skeleton skel = synthetic_skeleton21();
    std::vector<std::vector<double>> frames(2, std::vector<double>(skel.channel_count, 0.0));
    const MotionSequence ms = to_motion_sequence(skel, frames, 60, {});
    REQUIRE(ms.frame_count == 2);
    REQUIRE(ms.joint_count == 21);
    for (std::size_t t = 0; t < 2; ++t)
        for (int c = 0; c < 4; ++c) CHECK(ms.vel_at(t)[c] == doctest::Approx(0.0));
    for (std::size_t j = 0; j < 21; ++j)
        for (int c = 0; c < 7; ++c)
            CHECK(ms.joint_at(0, j)[c] == doctest::Approx(ms.joint_at(1, j)[c]));
}

TEST_CASE("to_motion_sequence reports per-frame root velocity") {
    Skeleton skel = synthetic_skeleton21();
    std::vector<std::vector<double>> frames;
    for (int t = 0; t < 4; ++t) {
        std::vector<double> row(skel.channel_count, 0.0);
        row[0] = static_cast<double>(t);  // +1 cm per frame along x
        frames.push_back(row);
    }
    const MotionSequence ms = to_motion_sequence(skel, frames, 60, {});
    for (std::size_t t = 0; t < 4; ++t) {
        CHECK(ms.vel_at(t)[0] == doctest::Approx(1.0));
        CHECK(ms.vel_at(t)[1] == doctest::Approx(0.0));
        CHECK(ms.vel_at(t)[2] == doctest::Approx(0.0));
        CHECK(ms.vel_at(t)[3] == doctest::Approx(0.0));
    }
}

TEST_CASE("corpus quaternions are unit norm") {
    for (const char* content : {"walk", "kick", "punch"}) {
        const BvhDocument doc = synth_clip(content, synth_styles(3)[2], 25, 60, 1);
        const MotionSequence ms = to_motion_sequence(doc.skeleton, doc.frames, 60, {});
        for (std::size_t t = 0; t < ms.frame_count; ++t) {
            for (std::size_t j = 0; j < ms.joint_count; ++j) {
                const double* q = ms.joint_at(t, j) + 3;
                const double n = std::sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]);
                CHECK(std::abs(n - 1.0) < 1e-6);
            }
            const double* r = ms.root_at(t) + 3;
            const double n = std::sqrt(r[0] * r[0] + r[1] * r[1] + r[2] * r[2] + r[3] * r[3]);
            CHECK(std::abs(n - 1.0) < 1e-6);
        }
    }
}

TEST_CASE("downsample halves the frame rate and frame count") {
    const BvhDocument doc = walk_doc(120);
    MotionSequence ms = to_motion_sequence(doc.skeleton, doc.frames, 120, {});
    const MotionSequence half = downsample(ms, 2);
    CHECK(half.frame_count == 60);
    CHECK(half.fps == doctest::Approx(60.0));
}

TEST_CASE("downsample with factor 1 is the identity") {
    const BvhDocument doc = walk_doc(16);
    MotionSequence ms = to_motion_sequence(doc.skeleton, doc.frames, 60, {});
    const MotionSequence same = downsample(ms, 1);
    CHECK(same.joints == ms.joints);
    CHECK(same.root == ms.root);
    CHECK(same.vel == ms.vel);
    CHECK(same.fps == ms.fps);
}

TEST_CASE("downsample rescales velocities of constant-speed motion") {
    Skeleton skel = synthetic_skeleton21();
    std::vector<std::vector<double>> frames;
    for (int t = 0; t < 12; ++t) {
        std::vector<double> row(skel.channel_count, 0.0);
        row[2] = 2.0 * t;  // 2 cm per frame along z
        frames.push_back(row);
    }
    MotionSequence ms = to_motion_sequence(skel, frames, 120, {});
    const MotionSequence half = downsample(ms, 3);
    for (std::size_t t = 0; t + 1 < half.frame_count; ++t)
        CHECK(half.vel_at(t)[2] == doctest::Approx(6.0));  // 3x the per-frame step
    CHECK_THROWS_AS(downsample(ms, 12), error);
}

TEST_CASE("random_crop identity and determinism") {
    const BvhDocument doc = walk_doc(20);
    MotionSequence ms = to_motion_sequence(doc.skeleton, doc.frames, 60, {});
    Rng rng(3);
    const MotionSequence full = random_crop(ms, rng, 20, 20);
    CHECK(full.frame_count == 20);
    CHECK(full.joints == ms.joints);

    Rng r1(77), r2(77);
    const MotionSequence a = random_crop(ms, r1, 8, 16);
    const MotionSequence b = random_crop(ms, r2, 8, 16);
    CHECK(a.frame_count == b.frame_count);
    CHECK(a.joints == b.joints);

    CHECK_THROWS_AS(random_crop(ms, rng, 21, 32), error);
}

TEST_CASE("random_crop draws uniform starts and lengths (chi-squared)") {
    Skeleton skel = synthetic_skeleton21();
    std::vector<std::vector<double>> frames(200, std::vector<double>(skel.channel_count, 0.0));
    for (std::size_t t = 0; t < 200; ++t) frames[t][0] = static_cast<double>(t);
    MotionSequence ms = to_motion_sequence(skel, frames, 60, {});

    Rng rng(123);
    const int draws = 10000;
    // fixed length 64: start is uniform over [0, 136]
    {
        std::array<int, 10> bins{};
        for (int i = 0; i < draws; ++i) {
            const MotionSequence c = random_crop(ms, rng, 64, 64);
            const auto start = static_cast<std::size_t>(c.root_at(0)[0]);
            bins[start * 10 / 137]++;
        }
        double chi2 = 0;
        for (std::size_t b = 0; b < 10; ++b) {
            const double lo = std::ceil(b * 137.0 / 10.0);
            const double hi = std::ceil((b + 1) * 137.0 / 10.0);
            const double expect = draws * (hi - lo) / 137.0;
            chi2 += (bins[b] - expect) * (bins[b] - expect) / expect;
        }
        CHECK(chi2 < 21.666);  // dof 9, p = 0.01
    }
    // lengths are uniform over [64, 200]
    {
        std::array<int, 10> bins{};
        for (int i = 0; i < draws; ++i) {
            const MotionSequence c = random_crop(ms, rng, 64, 300);
            bins[(c.frame_count - 64) * 10 / 137]++;
        }
        double chi2 = 0;
        for (std::size_t b = 0; b < 10; ++b) {
            const double lo = std::ceil(b * 137.0 / 10.0);
            const double hi = std::ceil((b + 1) * 137.0 / 10.0);
            const double expect = draws * (hi - lo) / 137.0;
            chi2 += (bins[b] - expect) * (bins[b] - expect) / expect;
        }
        CHECK(chi2 < 21.666);
    }
}

namespace {

// 21-joint sequence with scripted foot world positions; everything else static
MotionSequence scripted_feet(std::size_t frames,
                             const std::function<Vec3(std::size_t, int)>& foot_world) {
    Skeleton skel = synthetic_skeleton21();
    MotionSequence ms;
    ms.resize(frames, 21);
    ms.fps = 60;
    const std::array<const char*, 4> feet = {"LeftFoot", "LeftToeBase", "RightFoot",
                                             "RightToeBase"};
    for (std::size_t t = 0; t < frames; ++t) {
        double* root = ms.root_at(t);
        root[0] = 0;
        root[1] = 90;
        root[2] = 0;
        root[3] = 1;  // identity quaternion
        for (std::size_t j = 0; j < 21; ++j) {
            double* v = ms.joint_at(t, j);
            v[1] = -60;  // generic below-root offset
            v[3] = 1;
        }
        for (int f = 0; f < 4; ++f) {
            const int j = skel.find(feet[static_cast<std::size_t>(f)]);
            const Vec3 w = foot_world(t, f);
            double* v = ms.joint_at(t, static_cast<std::size_t>(j));
            v[0] = w.x - root[0];
            v[1] = w.y - root[1];
            v[2] = w.z - root[2];
        }
    }
    recompute_velocities(ms);
    return ms;
}

}  // namespace

TEST_CASE("foot contacts: pinned feet are always in contact") {
    const MotionSequence ms =
        scripted_feet(6, [](std::size_t, int f) { return Vec3{double(f), 0.0, 0.0}; });
    const FootContactMask fc = detect_foot_contacts(ms, synthetic_skeleton21(), {});
    for (std::size_t t = 0; t < 6; ++t)
        for (std::size_t f = 0; f < 4; ++f) CHECK(fc.at(t, f));
    for (std::size_t f = 0; f < 4; ++f) CHECK(fc.counts[f] == 6);
}

TEST_CASE("foot contacts: jump apex frames are not contacts") {
    const MotionSequence ms = scripted_feet(9, [](std::size_t t, int f) {
        const double h = t >= 3 && t <= 5 ? 30.0 : 0.0;  // in the air mid-clip
        return Vec3{double(f), h, 0.0};
    });
    const FootContactMask fc = detect_foot_contacts(ms, synthetic_skeleton21(), {});
    for (std::size_t f = 0; f < 4; ++f) {
        CHECK(fc.at(0, f));
        CHECK_FALSE(fc.at(4, f));  // apex
    }
}

TEST_CASE("foot contacts match a scripted stance pattern") {
    // alternating single-support walk: each foot holds still for 10 frames
    // then swings forward above the ground
    const std::size_t frames = 60;
    auto script = [](std::size_t t, int f) {
        const bool left = f < 2;
        const std::size_t phase = (t / 10) % 2;
        const bool stance = left ? phase == 0 : phase == 1;
        if (stance) {
            const double base = 8.0 * static_cast<double>(t / 20);
            return Vec3{left ? 9.0 : -9.0, 0.0, base};
        }
        const double swing = static_cast<double>(t % 10) / 10.0;
        return Vec3{left ? 9.0 : -9.0, 6.0 * std::sin(swing * kPi) + 1.0,
                    8.0 * swing + 8.0 * static_cast<double>(t / 20)};
    };
    const MotionSequence ms = scripted_feet(frames, script);
    const FootContactMask fc = detect_foot_contacts(ms, synthetic_skeleton21(), {});
    std::size_t agree = 0, total = 0;
    for (std::size_t t = 0; t < frames; ++t) {
        for (int f = 0; f < 4; ++f) {
            const bool left = f < 2;
            const std::size_t phase = (t / 10) % 2;
            const bool want = left ? phase == 0 : phase == 1;
            agree += fc.at(t, static_cast<std::size_t>(f)) == want ? 1 : 0;
            ++total;
        }
    }
    CHECK(static_cast<double>(agree) / static_cast<double>(total) >= 0.95);
}

TEST_CASE("foot contacts are invariant to rigid horizontal translation") {
    const MotionSequence ms = scripted_feet(12, [](std::size_t t, int f) {
        return Vec3{double(f), t % 3 == 0 ? 0.0 : 10.0, double(t)};
    });
    MotionSequence moved = ms;
    for (std::size_t t = 0; t < moved.frame_count; ++t) {
        moved.root_at(t)[0] += 1234.0;
        moved.root_at(t)[2] -= 987.0;
    }
    recompute_velocities(moved);
    const FootContactMask a = detect_foot_contacts(ms, synthetic_skeleton21(), {});
    const FootContactMask b = detect_foot_contacts(moved, synthetic_skeleton21(), {});
    CHECK(a.mask == b.mask);
}

TEST_CASE("write_bvh emits an all-zero motion block for a static origin pose") {
    Skeleton skel = synthetic_skeleton21();
    std::vector<std::vector<double>> frames(2, std::vector<double>(skel.channel_count, 0.0));
    const MotionSequence ms = to_motion_sequence(skel, frames, 60, {});
    const BvhDocument out = motion_to_bvh(skel, ms, {});
    CHECK(out.frames.size() == 2);
    CHECK(out.frame_time == doctest::Approx(1.0 / 60.0));
    for (const auto& row : out.frames)
        for (double v : row) CHECK(std::abs(v) < 1e-9);
}

TEST_CASE("write_bvh rejects badly non-unit quaternions unless normalizing") {
    Skeleton skel = synthetic_skeleton21();
    std::vector<std::vector<double>> frames(2, std::vector<double>(skel.channel_count, 0.0));
    MotionSequence ms = to_motion_sequence(skel, frames, 60, {});
    ms.joint_at(1, 5)[3] = 1.5;  // |q| well past the tolerance
    CHECK_THROWS_WITH_AS(motion_to_bvh(skel, ms, {}), doctest::Contains("non-unit"), error);
    CHECK_NOTHROW(motion_to_bvh(skel, ms, {}, /*normalize=*/true));
}

TEST_CASE("seq_distance basics") {
    const BvhDocument doc = walk_doc(12);
    const MotionSequence ms = to_motion_sequence(doc.skeleton, doc.frames, 60, {});
    CHECK(seq_distance(ms, ms) == 0.0);

    MotionSequence other = ms;
    other.joint_at(3, 7)[0] += 3.0;
    other.joint_at(3, 7)[1] += 4.0;
    CHECK(seq_distance(ms, other) == doctest::Approx(5.0).epsilon(1e-12));

    // brute-force reference
    double want = 0;
    for (std::size_t t = 0; t < ms.frame_count; ++t) {
        for (std::size_t j = 0; j < ms.joint_count; ++j) {
            double s = 0;
            for (int c = 0; c < 7; ++c) {
                const double d = ms.joint_at(t, j)[c] - other.joint_at(t, j)[c];
                s += d * d;
            }
            want += std::sqrt(s);
        }
    }
    CHECK(seq_distance(ms, other, false) == doctest::Approx(want).epsilon(1e-12));
}
