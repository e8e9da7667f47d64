// Distributed under the Apache License, Version 2.0.
// See the accompanying LICENSE file or http://www.apache.org/licenses/LICENSE-2.0
#pragma once

#include <array>
#include <cmath>
#include <string>

#include "mst/error.hpp"

namespace mst {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kDegToRad = kPi / 180.0;
inline constexpr double kRadToDeg = 180.0 / kPi;

struct Vec3 {
    double x = 0, y = 0, z = 0;

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    Vec3 cross(const Vec3& o) const {
        return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
    }
    double norm() const { return std::sqrt(dot(*this)); }
    Vec3 normalized() const {
        const double n = norm();
        return n > 0 ? Vec3{x / n, y / n, z / n} : Vec3{};
    }
};

/// Unit quaternion, w-first. Composition q1*q2 applies q2 first when
/// rotating column vectors, matching R(q1*q2) = R(q1)R(q2).
struct Quat {
    double w = 1, x = 0, y = 0, z = 0;

    static Quat identity() { return {}; }

    static Quat axis_angle(const Vec3& axis, double rad) {
        const double h = 0.5 * rad;
        const double s = std::sin(h);
        const Vec3 a = axis.normalized();
        return {std::cos(h), a.x * s, a.y * s, a.z * s};
    }

    static Quat about_y(double rad) { return axis_angle({0, 1, 0}, rad); }

    Quat operator*(const Quat& o) const {
        return {w * o.w - x * o.x - y * o.y - z * o.z,
                w * o.x + x * o.w + y * o.z - z * o.y,
                w * o.y - x * o.z + y * o.w + z * o.x,
                w * o.z + x * o.y - y * o.x + z * o.w};
    }

    Quat conj() const { return {w, -x, -y, -z}; }

    double norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }

    Quat normalized() const {
        const double n = norm();
        if (n == 0) return identity();
        return {w / n, x / n, y / n, z / n};
    }

    double dot(const Quat& o) const { return w * o.w + x * o.x + y * o.y + z * o.z; }

    Quat negated() const { return {-w, -x, -y, -z}; }

    Vec3 rotate(const Vec3& v) const {
        // v' = v + 2w(u x v) + 2(u x (u x v))
        const Vec3 u{x, y, z};
        const Vec3 c1 = u.cross(v);
        const Vec3 c2 = u.cross({c1.x + w * v.x, c1.y + w * v.y, c1.z + w * v.z});
        return {v.x + 2 * c2.x, v.y + 2 * c2.y, v.z + 2 * c2.z};
    }

    std::array<std::array<double, 3>, 3> to_matrix() const {
        const double xx = x * x, yy = y * y, zz = z * z;
        const double xy = x * y, xz = x * z, yz = y * z;
        const double wx = w * x, wy = w * y, wz = w * z;
        return {{{1 - 2 * (yy + zz), 2 * (xy - wz), 2 * (xz + wy)},
                 {2 * (xy + wz), 1 - 2 * (xx + zz), 2 * (yz - wx)},
                 {2 * (xz - wy), 2 * (yz + wx), 1 - 2 * (xx + yy)}}};
    }
};

/// Quaternion from Euler angles in degrees, axes applied in the given
/// channel order ("ZXY" means Rz * Rx * Ry on column vectors).
Quat quat_from_euler_deg(const std::array<double, 3>& deg, const std::string& order);

/// Inverse of quat_from_euler_deg for the six Tait-Bryan orders.
std::array<double, 3> quat_to_euler_deg(const Quat& q, const std::string& order);

/// Heading of the rotated x axis projected to the horizontal plane, as the
/// angle of the yaw-only rotation about +y taking world x onto it.
double yaw_of(const Quat& q);

}  // namespace mst
