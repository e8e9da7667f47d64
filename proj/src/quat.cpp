// Distributed under the Apache License, Version 2.0.
// See the accompanying LICENSE file or http://www.apache.org/licenses/LICENSE-2.0

#include "mst/quat.hpp"

#include <algorithm>

namespace mst {

namespace {

Quat axis_quat(char axis, double rad) {
    switch (axis) {
        case 'X': return Quat::axis_angle({1, 0, 0}, rad);
        case 'Y': return Quat::axis_angle({0, 1, 0}, rad);
        case 'Z': return Quat::axis_angle({0, 0, 1}, rad);
        default: throw error(std::string("unknown rotation axis '") + axis + "'");
    }
}

double clamp1(double v) { return std::clamp(v, -1.0, 1.0); }

}  // namespace

Quat quat_from_euler_deg(const std::array<double, 3>& deg, const std::string& order) {
    if (order.size() != 3) throw error("rotation order must name three axes, got '" + order + "'");
    Quat q = Quat::identity();
    for (int i = 0; i < 3; ++i) q = q * axis_quat(order[static_cast<std::size_t>(i)], deg[static_cast<std::size_t>(i)] * kDegToRad);
    return q;
}

std::array<double, 3> quat_to_euler_deg(const Quat& q, const std::string& order) {
    const auto m = q.normalized().to_matrix();
    double a, b, c;
    if (order == "XYZ") {
        b = std::asin(clamp1(m[0][2]));
        a = std::atan2(-m[1][2], m[2][2]);
        c = std::atan2(-m[0][1], m[0][0]);
    } else if (order == "XZY") {
        b = std::asin(clamp1(-m[0][1]));
        a = std::atan2(m[2][1], m[1][1]);
        c = std::atan2(m[0][2], m[0][0]);
    } else if (order == "YXZ") {
        b = std::asin(clamp1(-m[1][2]));
        a = std::atan2(m[0][2], m[2][2]);
        c = std::atan2(m[1][0], m[1][1]);
    } else if (order == "YZX") {
        b = std::asin(clamp1(m[1][0]));
        a = std::atan2(-m[2][0], m[0][0]);
        c = std::atan2(-m[1][2], m[1][1]);
    } else if (order == "ZXY") {
        b = std::asin(clamp1(m[2][1]));
        a = std::atan2(-m[0][1], m[1][1]);
        c = std::atan2(-m[2][0], m[2][2]);
    } else if (order == "ZYX") {
        b = std::asin(clamp1(-m[2][0]));
        a = std::atan2(m[1][0], m[0][0]);
        c = std::atan2(m[2][1], m[2][2]);
    } else {
        throw error("unsupported rotation order '" + order + "'");
    }
    return {a * kRadToDeg, b * kRadToDeg, c * kRadToDeg};
}

double yaw_of(const Quat& q) {
    const Vec3 fx = q.rotate({1, 0, 0});
    const double len = std::sqrt(fx.x * fx.x + fx.z * fx.z);
    if (len < 1e-12) return 0.0;
    return std::atan2(-fx.z, fx.x);
}

}  // namespace mst
