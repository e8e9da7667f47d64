// Distributed under the Apache License, Version 2.0.
// See the accompanying LICENSE file or http://www.apache.org/licenses/LICENSE-2.0

#include "mst/synth.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "mst/error.hpp"

namespace mst {

namespace {

struct JointSpec {
    const char* name;
    const char* parent;  // nullptr on the root
    Vec3 offset;
};

// 21-joint humanoid, y up, facing +z (left side on +x).
constexpr JointSpec kCore21[] = {
    {"Hips", nullptr, {0, 0, 0}},
    {"Spine", "Hips", {0, 12, 0}},
    {"Spine1", "Spine", {0, 13, 0}},
    {"Neck", "Spine1", {0, 12, 0}},
    {"Head", "Neck", {0, 10, 0}},
    {"LeftShoulder", "Spine1", {8, 10, 0}},
    {"LeftArm", "LeftShoulder", {12, 0, 0}},
    {"LeftForeArm", "LeftArm", {26, 0, 0}},
    {"LeftHand", "LeftForeArm", {25, 0, 0}},
    {"RightShoulder", "Spine1", {-8, 10, 0}},
    {"RightArm", "RightShoulder", {-12, 0, 0}},
    {"RightForeArm", "RightArm", {-26, 0, 0}},
    {"RightHand", "RightForeArm", {-25, 0, 0}},
    {"LeftUpLeg", "Hips", {9, -3, 0}},
    {"LeftLeg", "LeftUpLeg", {0, -40, 0}},
    {"LeftFoot", "LeftLeg", {0, -40, 0}},
    {"LeftToeBase", "LeftFoot", {0, -5, 13}},
    {"RightUpLeg", "Hips", {-9, -3, 0}},
    {"RightLeg", "RightUpLeg", {0, -40, 0}},
    {"RightFoot", "RightLeg", {0, -40, 0}},
    {"RightToeBase", "RightFoot", {0, -5, 13}},
};

Skeleton build_skeleton(const std::vector<JointSpec>& specs) {
    Skeleton skel;
    for (const auto& spec : specs) {
        Joint j;
        j.name = spec.name;
        j.offset = spec.offset;
        j.parent = spec.parent == nullptr ? -1 : skel.find(spec.parent);
        if (spec.parent != nullptr && j.parent < 0)
            throw error(std::string("synthetic skeleton: parent '") + spec.parent + "' undefined");
        if (j.parent < 0) {
            j.channels = {Channel::XPos, Channel::YPos, Channel::ZPos,
                          Channel::ZRot, Channel::XRot, Channel::YRot};
        } else {
            j.channels = {Channel::ZRot, Channel::XRot, Channel::YRot};
        }
        j.rot_order = "ZXY";
        j.channel_start = skel.channel_count;
        skel.channel_count += j.channels.size();
        skel.joints.push_back(std::move(j));
    }
    return skel;
}

std::vector<JointSpec> specs21() { return {std::begin(kCore21), std::end(kCore21)}; }

std::vector<JointSpec> specs31() {
    // splice the auxiliaries so the chains read Hips->LowerBack->Spine,
    // Hips->LHipJoint->LeftUpLeg, Neck->Neck1->Head, hand->fingers/thumb
    std::vector<JointSpec> specs = {
        {"Hips", nullptr, {0, 0, 0}},
        {"LowerBack", "Hips", {0, 5, 0}},
        {"Spine", "LowerBack", {0, 7, 0}},
        {"Spine1", "Spine", {0, 13, 0}},
        {"Neck", "Spine1", {0, 12, 0}},
        {"Neck1", "Neck", {0, 5, 0}},
        {"Head", "Neck1", {0, 5, 0}},
        {"LeftShoulder", "Spine1", {8, 10, 0}},
        {"LeftArm", "LeftShoulder", {12, 0, 0}},
        {"LeftForeArm", "LeftArm", {26, 0, 0}},
        {"LeftHand", "LeftForeArm", {25, 0, 0}},
        {"LeftFingerBase", "LeftHand", {8, 0, 0}},
        {"LeftHandIndex1", "LeftFingerBase", {4, 0, 0}},
        {"LThumb", "LeftHand", {3, 0, 2}},
        {"RightShoulder", "Spine1", {-8, 10, 0}},
        {"RightArm", "RightShoulder", {-12, 0, 0}},
        {"RightForeArm", "RightArm", {-26, 0, 0}},
        {"RightHand", "RightForeArm", {-25, 0, 0}},
        {"RightFingerBase", "RightHand", {-8, 0, 0}},
        {"RightHandIndex1", "RightFingerBase", {-4, 0, 0}},
        {"RThumb", "RightHand", {-3, 0, 2}},
        {"LHipJoint", "Hips", {2, -1, 0}},
        {"LeftUpLeg", "LHipJoint", {7, -2, 0}},
        {"LeftLeg", "LeftUpLeg", {0, -40, 0}},
        {"LeftFoot", "LeftLeg", {0, -40, 0}},
        {"LeftToeBase", "LeftFoot", {0, -5, 13}},
        {"RHipJoint", "Hips", {-2, -1, 0}},
        {"RightUpLeg", "RHipJoint", {-7, -2, 0}},
        {"RightLeg", "RightUpLeg", {0, -40, 0}},
        {"RightFoot", "RightLeg", {0, -40, 0}},
        {"RightToeBase", "RightFoot", {0, -5, 13}},
    };
    return specs;
}

double clamp_pos(double x) { return x > 0 ? x : 0.0; }
double burst(double cycles) { return std::pow(clamp_pos(std::sin(2 * kPi * cycles)), 3.0); }

struct Angles {
    double z = 0, x = 0, y = 0;
};

// Per-joint channel program. s is style-tempo time in seconds, A the style
// amplitude. Unlisted joints hold the rest pose.
Angles joint_angles(const std::string& content, const std::string& joint, double s, double A,
                    double posture) {
    Angles a;
    if (joint == "Spine" || joint == "Spine1") a.x += posture / 2;
    if (content == "walk") {
        const double ph = 2 * kPi * 1.3 * s;
        const double swing = 30 * A * std::sin(ph);
        auto knee = [&](double shift) {
            const double u = (1 + std::sin(ph + shift)) / 2;
            return 22 * A * u * u;
        };
        if (joint == "LeftUpLeg") a.x = -swing;
        if (joint == "RightUpLeg") a.x = swing;
        if (joint == "LeftLeg") a.x = knee(2.2);
        if (joint == "RightLeg") a.x = knee(2.2 + kPi);
        if (joint == "LeftFoot") a.x = -6 * A * std::sin(ph);
        if (joint == "RightFoot") a.x = 6 * A * std::sin(ph);
        if (joint == "LeftArm") a.x = 20 * A * std::sin(ph);
        if (joint == "RightArm") a.x = -20 * A * std::sin(ph);
        if (joint == "LeftForeArm") a.x = -10 * A * (1 + std::sin(ph)) / 2;
        if (joint == "RightForeArm") a.x = -10 * A * (1 - std::sin(ph)) / 2;
        if (joint == "Spine") a.z = 2.5 * A * std::sin(2 * ph);
        if (joint == "Head") a.x += 2 * A * std::sin(2 * ph);
    } else if (content == "kick") {
        const double b = burst(0.9 * s);
        const double b2 = burst(0.9 * s - 0.12);
        if (joint == "RightUpLeg") a.x = -60 * A * b;
        if (joint == "RightLeg") a.x = 40 * A * b2;
        if (joint == "RightFoot") a.x = -12 * A * b;
        if (joint == "LeftUpLeg") a.x = 6 * A * b;
        if (joint == "LeftArm") a.x = -12 * A - 8 * A * b;
        if (joint == "RightArm") a.x = -12 * A + 10 * A * b;
        if (joint == "LeftForeArm") a.x = -35 * A;
        if (joint == "RightForeArm") a.x = -35 * A * (1 - b);
        if (joint == "Spine") a.y = -9 * A * b;
        if (joint == "Spine1") a.y += -5 * A * b;
    } else if (content == "punch") {
        const double bl = burst(1.1 * s);
        const double br = burst(1.1 * s + 0.5);
        if (joint == "LeftArm") a.x = -20 * A - 55 * A * bl;
        if (joint == "RightArm") a.x = -20 * A - 55 * A * br;
        if (joint == "LeftForeArm") a.x = -50 * A * (1 - bl);
        if (joint == "RightForeArm") a.x = -50 * A * (1 - br);
        if (joint == "Spine") a.y = 8 * A * (bl - br);
        if (joint == "Spine1") a.y = 4 * A * (bl - br);
        if (joint == "LeftUpLeg") a.x = -6 * A;
        if (joint == "RightUpLeg") a.x = 6 * A;
        if (joint == "Head") a.x = 2 * A * (bl + br);
    } else {
        throw error("synth_clip: unknown content '" + content + "'");
    }
    return a;
}

}  // namespace

Skeleton synthetic_skeleton21() {
    Skeleton skel = build_skeleton(specs21());
    skel.end_sites.push_back({skel.find("Head"), {0, 10, 0}});
    skel.end_sites.push_back({skel.find("LeftHand"), {9, 0, 0}});
    skel.end_sites.push_back({skel.find("RightHand"), {-9, 0, 0}});
    skel.end_sites.push_back({skel.find("LeftToeBase"), {0, 0, 6}});
    skel.end_sites.push_back({skel.find("RightToeBase"), {0, 0, 6}});
    return skel;
}

Skeleton synthetic_skeleton31() {
    Skeleton skel = build_skeleton(specs31());
    skel.end_sites.push_back({skel.find("Head"), {0, 10, 0}});
    skel.end_sites.push_back({skel.find("LeftHandIndex1"), {3, 0, 0}});
    skel.end_sites.push_back({skel.find("RightHandIndex1"), {-3, 0, 0}});
    skel.end_sites.push_back({skel.find("LThumb"), {1, 0, 1}});
    skel.end_sites.push_back({skel.find("RThumb"), {-1, 0, 1}});
    skel.end_sites.push_back({skel.find("LeftToeBase"), {0, 0, 6}});
    skel.end_sites.push_back({skel.find("RightToeBase"), {0, 0, 6}});
    return skel;
}

std::vector<SynthStyle> synth_styles(std::size_t count) {
    static const std::vector<SynthStyle> all = {
        {"neutral", 1.0, 1.0, 0.0},
        {"energetic", 1.45, 1.3, -4.0},
        {"reserved", 0.55, 0.75, 14.0},
        {"heavy", 0.9, 0.6, 6.0},
    };
    if (count == 0 || count > all.size())
        throw error("synth_styles: between 1 and " + std::to_string(all.size()) +
                    " styles are available");
    return {all.begin(), all.begin() + static_cast<std::ptrdiff_t>(count)};
}

std::vector<std::string> synth_contents(std::size_t count) {
    static const std::vector<std::string> all = {"walk", "kick", "punch"};
    if (count == 0 || count > all.size())
        throw error("synth_contents: between 1 and " + std::to_string(all.size()) +
                    " contents are available");
    return {all.begin(), all.begin() + static_cast<std::ptrdiff_t>(count)};
}

BvhDocument synth_clip(const std::string& content, const SynthStyle& style, std::size_t frames,
                       double fps, std::uint32_t variant, bool skeleton31) {
    if (frames < 2) throw error("synth_clip: need at least 2 frames");
    BvhDocument doc;
    doc.skeleton = skeleton31 ? synthetic_skeleton31() : synthetic_skeleton21();
    doc.frame_time = 1.0 / fps;

    const double jitter = 1.0 + 0.05 * std::fmod(static_cast<double>(variant) * 0.7548776662, 1.0);
    const double amp = style.amplitude * jitter;
    const double phase0 = 0.37 * static_cast<double>(variant);

    doc.frames.reserve(frames);
    for (std::size_t f = 0; f < frames; ++f) {
        const double s = (static_cast<double>(f) / fps) * style.tempo + phase0;
        std::vector<double> row(doc.skeleton.channel_count, 0.0);
        for (const Joint& joint : doc.skeleton.joints) {
            const Angles a = joint_angles(content, joint.name, s, amp, style.posture_deg);
            std::size_t ci = joint.channel_start;
            for (Channel c : joint.channels) {
                double v = 0;
                switch (c) {
                    case Channel::XPos: v = 0; break;
                    case Channel::YPos:
                        v = 88 + 1.8 * amp * std::sin(4 * kPi * 1.3 * s) -
                            0.35 * style.posture_deg;
                        break;
                    case Channel::ZPos:
                        v = content == "walk" ? 55.0 * amp * style.tempo * s
                                              : 2.0 * amp * std::sin(2 * kPi * 0.45 * s);
                        break;
                    case Channel::XRot: v = a.x; break;
                    case Channel::YRot: v = a.y; break;
                    case Channel::ZRot: v = a.z; break;
                }
                row[ci++] = v;
            }
        }
        doc.frames.push_back(std::move(row));
    }
    return doc;
}

std::vector<std::string> write_synth_dataset(const std::string& dir,
                                             const SynthDatasetOptions& opt) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    const auto styles = synth_styles(opt.styles);
    const auto contents = synth_contents(opt.contents);

    std::vector<std::string> files;
    std::ofstream manifest(fs::path(dir) / "manifest.tsv");
    if (!manifest) throw error("cannot write manifest in '" + dir + "'");
    std::uint32_t variant = 0;
    for (const auto& style : styles) {
        for (const auto& content : contents) {
            for (std::size_t k = 0; k < opt.clips_per_cell; ++k) {
                const std::string name =
                    style.name + "_" + content + "_" + std::to_string(k) + ".bvh";
                const BvhDocument doc =
                    synth_clip(content, style, opt.frames, opt.fps, variant++, opt.skeleton31);
                std::ofstream out(fs::path(dir) / name, std::ios::binary);
                if (!out) throw error("cannot write '" + name + "' in '" + dir + "'");
                out << write_bvh_document(doc);
                manifest << name << "\t" << style.name << "\t" << content << "\n";
                files.push_back(name);
            }
        }
    }
    return files;
}

}  // namespace mst
