#pragma once

// Rigid transforms and rotation metrics.
//
// Quaternions are stored as Eigen::Quaterniond but always exchanged in
// (x, y, z, w) order on the wire. Every constructed Pose is canonicalized
// to w >= 0 so that equality comparisons are deterministic.

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>

#include "seat/error.hpp"

namespace seat {

using Vec3 = Eigen::Vector3d;
using Vec3i = Eigen::Vector3i;
using Quat = Eigen::Quaterniond;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kPi = std::numbers::pi;
inline double deg2rad(double d) { return d * kPi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / kPi; }

inline Quat canonical(Quat q) {
    q.normalize();
    if (q.w() < 0.0) q.coeffs() *= -1.0;
    return q;
}

inline Quat quat_xyzw(double x, double y, double z, double w) { return canonical(Quat(w, x, y, z)); }

inline Quat axis_angle(const Vec3& axis, double angle) {
    return canonical(Quat(Eigen::AngleAxisd(angle, axis.normalized())));
}

inline bool is_unit(const Quat& q, double tol = 1e-6) { return std::abs(q.norm() - 1.0) <= tol; }

/// Geodesic angle between two orientations, arccos(2 (q1.q2)^2 - 1).
/// Invariant to the sign of either quaternion; result in [0, pi].
inline double quat_geodesic(const Quat& a, const Quat& b) {
    require(is_unit(a) && is_unit(b), ErrorCode::invalid_argument, "quat_geodesic requires unit quaternions");
    double d = a.coeffs().dot(b.coeffs());
    double c = std::clamp(2.0 * d * d - 1.0, -1.0, 1.0);
    return std::acos(c);
}

struct Pose {
    Vec3 p = Vec3::Zero();
    Quat q = Quat::Identity();

    Pose() = default;
    Pose(const Vec3& position, const Quat& orientation) : p(position), q(canonical(orientation)) {}

    static Pose identity() { return {}; }
    static Pose translation(const Vec3& t) { return {t, Quat::Identity()}; }
    static Pose rotation(const Quat& r) { return {Vec3::Zero(), r}; }

    Vec3 operator*(const Vec3& x) const { return q * x + p; }
    Vec3 rotate(const Vec3& v) const { return q * v; }

    Pose inverse() const {
        Quat qi = q.conjugate();
        return {-(qi * p), qi};
    }

    Eigen::Isometry3d isometry() const {
        Eigen::Isometry3d t = Eigen::Isometry3d::Identity();
        t.linear() = q.toRotationMatrix();
        t.translation() = p;
        return t;
    }
};

/// a * b: apply b in a's frame.
inline Pose compose(const Pose& a, const Pose& b) { return {a.p + a.q * b.p, a.q * b.q}; }
inline Pose operator*(const Pose& a, const Pose& b) { return compose(a, b); }
inline Pose inverse(const Pose& a) { return a.inverse(); }

inline double position_error(const Pose& a, const Pose& b) { return (a.p - b.p).norm(); }
inline double rotation_error(const Pose& a, const Pose& b) { return quat_geodesic(a.q, b.q); }

inline Pose interpolate(const Pose& a, const Pose& b, double t) {
    return {a.p + (b.p - a.p) * t, a.q.slerp(t, b.q)};
}

// ---------------------------------------------------------------------------
// Random helpers. All randomness in the project flows through an explicit
// 64-bit seed and std::mt19937_64.

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t hash_seed(std::uint64_t a, std::uint64_t b) { return splitmix64(a ^ splitmix64(b)); }
inline std::uint64_t hash_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    return hash_seed(hash_seed(a, b), c);
}

inline double uniform(Rng& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline Vec3 random_unit_vector(Rng& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    for (;;) {
        Vec3 v(n(rng), n(rng), n(rng));
        double len = v.norm();
        if (len > 1e-12) return v / len;
    }
}

inline Quat random_rotation(Rng& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    for (;;) {
        Quat q(n(rng), n(rng), n(rng), n(rng));
        if (q.norm() > 1e-12) return canonical(q);
    }
}

/// Axis uniform on the sphere, angle uniform in [0, max_angle].
inline Quat random_rotation_within(Rng& rng, double max_angle) {
    Vec3 axis = random_unit_vector(rng);
    double angle = uniform(rng, 0.0, max_angle);
    return axis_angle(axis, angle);
}

/// Haar-uniform rotation restricted to the geodesic ball of radius max_angle.
/// The rotation angle has density proportional to (1 - cos a) on [0, max_angle].
inline Quat random_rotation_in_ball(Rng& rng, double max_angle) {
    Vec3 axis = random_unit_vector(rng);
    double peak = 1.0 - std::cos(max_angle);
    for (;;) {
        double a = uniform(rng, 0.0, max_angle);
        if (uniform(rng, 0.0, peak) <= 1.0 - std::cos(a)) return axis_angle(axis, a);
    }
}

/// Yaw (z) * pitch (y) * roll (x).
inline Quat from_ypr(double yaw, double pitch, double roll) {
    return canonical(Quat(Eigen::AngleAxisd(yaw, Vec3::UnitZ())) * Quat(Eigen::AngleAxisd(pitch, Vec3::UnitY())) *
                     Quat(Eigen::AngleAxisd(roll, Vec3::UnitX())));
}

struct Aabb {
    Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
    Vec3 hi = Vec3::Constant(-std::numeric_limits<double>::infinity());

    bool empty() const { return (lo.array() > hi.array()).any(); }
    void extend(const Vec3& x) {
        lo = lo.cwiseMin(x);
        hi = hi.cwiseMax(x);
    }
    void extend(const Aabb& b) {
        if (b.empty()) return;
        extend(b.lo);
        extend(b.hi);
    }
    Vec3 center() const { return 0.5 * (lo + hi); }
    Vec3 extent() const { return hi - lo; }
    Aabb inflated(double d) const { return {(lo.array() - d).matrix(), (hi.array() + d).matrix()}; }
    bool contains(const Vec3& x) const { return (x.array() >= lo.array()).all() && (x.array() <= hi.array()).all(); }
};

}  // namespace seat
