// Distributed under the Apache License, Version 2.0.
// See the accompanying LICENSE file or http://www.apache.org/licenses/LICENSE-2.0

#include "mst/bvh.hpp"

#include <charconv>
#include <cstdio>
#include <functional>
#include <sstream>

namespace mst {

int Skeleton::find(std::string_view name) const {
    for (std::size_t i = 0; i < joints.size(); ++i)
        if (joints[i].name == name) return static_cast<int>(i);
    return -1;
}

namespace {

struct Token {
    std::string_view text;
    int line;
};

struct Lexer {
    std::vector<Token> tokens;
    std::size_t pos = 0;

    explicit Lexer(std::string_view text) {
        int line = 1;
        std::size_t i = 0;
        while (i < text.size()) {
            const char c = text[i];
            if (c == '\n') {
                ++line;
                ++i;
            } else if (c == ' ' || c == '\t' || c == '\r') {
                ++i;
            } else {
                std::size_t j = i;
                while (j < text.size() && text[j] != ' ' && text[j] != '\t' && text[j] != '\r' &&
                       text[j] != '\n')
                    ++j;
                tokens.push_back({text.substr(i, j - i), line});
                i = j;
            }
        }
    }

    bool done() const { return pos >= tokens.size(); }
    int line() const {
        if (done()) return tokens.empty() ? 1 : tokens.back().line;
        return tokens[pos].line;
    }
    Token peek() const {
        if (done()) throw error("bvh parse error: unexpected end of file");
        return tokens[pos];
    }
    Token next() {
        Token t = peek();
        ++pos;
        return t;
    }
    void expect(std::string_view word) {
        Token t = next();
        if (t.text != word)
            throw error("bvh parse error at line " + std::to_string(t.line) + ": expected '" +
                        std::string(word) + "', got '" + std::string(t.text) + "'");
    }
    double number() {
        Token t = next();
        double v = 0;
        const char* b = t.text.data();
        const char* e = b + t.text.size();
        auto [p, ec] = std::from_chars(b, e, v);
        if (ec != std::errc() || p != e)
            throw error("bvh parse error at line " + std::to_string(t.line) +
                        ": expected a number, got '" + std::string(t.text) + "'");
        return v;
    }
};

Channel channel_from_name(std::string_view s, int line) {
    if (s == "Xposition") return Channel::XPos;
    if (s == "Yposition") return Channel::YPos;
    if (s == "Zposition") return Channel::ZPos;
    if (s == "Xrotation") return Channel::XRot;
    if (s == "Yrotation") return Channel::YRot;
    if (s == "Zrotation") return Channel::ZRot;
    throw error("bvh parse error at line " + std::to_string(line) + ": unknown channel '" +
                std::string(s) + "'");
}

const char* channel_name(Channel c) {
    switch (c) {
        case Channel::XPos: return "Xposition";
        case Channel::YPos: return "Yposition";
        case Channel::ZPos: return "Zposition";
        case Channel::XRot: return "Xrotation";
        case Channel::YRot: return "Yrotation";
        case Channel::ZRot: return "Zrotation";
    }
    return "?";
}

void parse_joint_body(Lexer& lex, Skeleton& skel, int index) {
    lex.expect("{");
    lex.expect("OFFSET");
    skel.joints[static_cast<std::size_t>(index)].offset = {lex.number(), lex.number(), lex.number()};
    lex.expect("CHANNELS");
    const int line = lex.line();
    const double nch = lex.number();
    if (nch < 0 || nch > 6 || nch != static_cast<double>(static_cast<int>(nch)))
        throw error("bvh parse error at line " + std::to_string(line) + ": bad channel count");
    auto& joint = skel.joints[static_cast<std::size_t>(index)];
    joint.channel_start = skel.channel_count;
    for (int c = 0; c < static_cast<int>(nch); ++c) {
        Token t = lex.next();
        const Channel ch = channel_from_name(t.text, t.line);
        joint.channels.push_back(ch);
        if (ch == Channel::XRot) joint.rot_order += 'X';
        if (ch == Channel::YRot) joint.rot_order += 'Y';
        if (ch == Channel::ZRot) joint.rot_order += 'Z';
    }
    skel.channel_count += joint.channels.size();

    while (true) {
        Token t = lex.peek();
        if (t.text == "JOINT") {
            lex.next();
            Token name = lex.next();
            const int child = static_cast<int>(skel.joints.size());
            skel.joints.push_back({std::string(name.text), index, {}, {}, "", 0});
            parse_joint_body(lex, skel, child);
        } else if (t.text == "End") {
            lex.next();
            lex.expect("Site");
            lex.expect("{");
            lex.expect("OFFSET");
            EndSite es;
            es.parent = index;
            es.offset = {lex.number(), lex.number(), lex.number()};
            skel.end_sites.push_back(es);
            lex.expect("}");
        } else if (t.text == "}") {
            lex.next();
            return;
        } else {
            throw error("bvh parse error at line " + std::to_string(t.line) +
                        ": expected JOINT, End Site or '}', got '" + std::string(t.text) + "'");
        }
    }
}

}  // namespace

BvhDocument parse_bvh(std::string_view text) {
    Lexer lex(text);
    BvhDocument doc;
    if (lex.done() || lex.peek().text != "HIERARCHY")
        throw error("bvh parse error at line " + std::to_string(lex.line()) +
                    ": expected HIERARCHY header");
    lex.next();
    lex.expect("ROOT");
    Token root_name = lex.next();
    doc.skeleton.joints.push_back({std::string(root_name.text), -1, {}, {}, "", 0});
    parse_joint_body(lex, doc.skeleton, 0);

    Token t = lex.next();
    if (t.text == "ROOT")
        throw error("bvh parse error at line " + std::to_string(t.line) +
                    ": multiple ROOT blocks are not supported");
    if (t.text != "MOTION")
        throw error("bvh parse error at line " + std::to_string(t.line) + ": expected MOTION");

    // "Frames:" may arrive as one token or as "Frames" ":".
    Token ft = lex.next();
    if (ft.text == "Frames") lex.expect(":");
    else if (ft.text != "Frames:")
        throw error("bvh parse error at line " + std::to_string(ft.line) + ": expected Frames:");
    const double nframes_d = lex.number();
    if (nframes_d < 0 || nframes_d != static_cast<double>(static_cast<long>(nframes_d)))
        throw error("bvh parse error: bad frame count");
    const auto nframes = static_cast<std::size_t>(nframes_d);

    Token tt = lex.next();
    if (tt.text == "Frame") {
        Token tm = lex.next();
        if (tm.text == "Time") lex.expect(":");
        else if (tm.text != "Time:")
            throw error("bvh parse error at line " + std::to_string(tm.line) +
                        ": expected Frame Time:");
    } else {
        throw error("bvh parse error at line " + std::to_string(tt.line) +
                    ": expected Frame Time:");
    }
    doc.frame_time = lex.number();
    if (doc.frame_time <= 0) throw error("bvh parse error: Frame Time must be positive");

    doc.frames.reserve(nframes);
    for (std::size_t f = 0; f < nframes; ++f) {
        std::vector<double> row(doc.skeleton.channel_count);
        for (std::size_t c = 0; c < doc.skeleton.channel_count; ++c) {
            if (lex.done())
                throw error("bvh parse error at line " + std::to_string(lex.line()) +
                            ": motion data ends at frame " + std::to_string(f) + " of " +
                            std::to_string(nframes) + " (channel-count mismatch)");
            row[c] = lex.number();
        }
        doc.frames.push_back(std::move(row));
    }
    if (!lex.done())
        throw error("bvh parse error at line " + std::to_string(lex.line()) +
                    ": trailing data after " + std::to_string(nframes) +
                    " declared frames (frame-count mismatch)");
    return doc;
}

std::string write_bvh_document(const BvhDocument& doc) {
    const Skeleton& skel = doc.skeleton;
    std::ostringstream os;
    char buf[64];

    auto fmt = [&buf](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };

    // children lists for hierarchy emission
    std::vector<std::vector<int>> children(skel.joints.size());
    for (std::size_t j = 1; j < skel.joints.size(); ++j)
        children[static_cast<std::size_t>(skel.joints[j].parent)].push_back(static_cast<int>(j));
    std::vector<std::vector<const EndSite*>> sites(skel.joints.size());
    for (const auto& es : skel.end_sites)
        sites[static_cast<std::size_t>(es.parent)].push_back(&es);

    std::function<void(int, int)> emit = [&](int j, int depth) {
        const auto& joint = skel.joints[static_cast<std::size_t>(j)];
        const std::string ind(static_cast<std::size_t>(depth) * 2, ' ');
        os << ind << (joint.parent < 0 ? "ROOT " : "JOINT ") << joint.name << "\n";
        os << ind << "{\n";
        os << ind << "  OFFSET " << fmt(joint.offset.x) << " " << fmt(joint.offset.y) << " "
           << fmt(joint.offset.z) << "\n";
        os << ind << "  CHANNELS " << joint.channels.size();
        for (Channel c : joint.channels) os << " " << channel_name(c);
        os << "\n";
        for (int child : children[static_cast<std::size_t>(j)]) emit(child, depth + 1);
        for (const EndSite* es : sites[static_cast<std::size_t>(j)]) {
            os << ind << "  End Site\n" << ind << "  {\n";
            os << ind << "    OFFSET " << fmt(es->offset.x) << " " << fmt(es->offset.y) << " "
               << fmt(es->offset.z) << "\n";
            os << ind << "  }\n";
        }
        os << ind << "}\n";
    };

    os << "HIERARCHY\n";
    emit(0, 0);
    os << "MOTION\n";
    os << "Frames: " << doc.frames.size() << "\n";
    os << "Frame Time: " << fmt(doc.frame_time) << "\n";
    for (const auto& row : doc.frames) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) os << " ";
            os << fmt(row[c]);
        }
        os << "\n";
    }
    return os.str();
}

Quat local_rotation(const Joint& j, std::span<const double> frame) {
    std::array<double, 3> deg{0, 0, 0};
    std::string order;
    std::size_t ci = j.channel_start;
    for (Channel c : j.channels) {
        const double v = frame[ci++];
        switch (c) {
            case Channel::XRot: order += 'X'; deg[order.size() - 1] = v; break;
            case Channel::YRot: order += 'Y'; deg[order.size() - 1] = v; break;
            case Channel::ZRot: order += 'Z'; deg[order.size() - 1] = v; break;
            default: break;
        }
    }
    if (order.empty()) return Quat::identity();
    while (order.size() < 3) {
        // pad unused axes with zero rotation; composition order is preserved
        order += (order.find('X') == std::string::npos   ? 'X'
                  : order.find('Y') == std::string::npos ? 'Y'
                                                         : 'Z');
    }
    return quat_from_euler_deg(deg, order);
}

Vec3 local_translation(const Joint& j, std::span<const double> frame) {
    Vec3 t = j.offset;
    std::size_t ci = j.channel_start;
    for (Channel c : j.channels) {
        const double v = frame[ci++];
        switch (c) {
            case Channel::XPos: t.x += v; break;
            case Channel::YPos: t.y += v; break;
            case Channel::ZPos: t.z += v; break;
            default: break;
        }
    }
    return t;
}

FramePose forward_kinematics(const Skeleton& skel, std::span<const double> frame) {
    if (frame.size() != skel.channel_count)
        throw error("forward_kinematics: frame has " + std::to_string(frame.size()) +
                    " channels, skeleton expects " + std::to_string(skel.channel_count));
    FramePose pose;
    pose.pos.resize(skel.size());
    pose.rot.resize(skel.size());
    for (std::size_t j = 0; j < skel.size(); ++j) {
        const Joint& joint = skel.joints[j];
        const Quat lr = local_rotation(joint, frame);
        const Vec3 lt = local_translation(joint, frame);
        if (joint.parent < 0) {
            pose.pos[j] = lt;
            pose.rot[j] = lr;
        } else {
            const auto p = static_cast<std::size_t>(joint.parent);
            pose.pos[j] = pose.pos[p] + pose.rot[p].rotate(lt);
            pose.rot[j] = pose.rot[p] * lr;
        }
    }
    return pose;
}

}  // namespace mst
