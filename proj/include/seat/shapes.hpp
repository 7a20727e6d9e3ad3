#pragma once

// Procedural closed meshes used as stand-in CAD parts and test fixtures.

#include <cmath>
#include <vector>

#include "seat/error.hpp"
#include "seat/geom.hpp"
#include "seat/mesh.hpp"

namespace seat::shapes {

using Polygon = std::vector<Eigen::Vector2d>;

inline double signed_area(const Polygon& poly) {
    double a = 0.0;
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const auto& p = poly[i];
        const auto& q = poly[(i + 1) % poly.size()];
        a += p.x() * q.y() - q.x() * p.y();
    }
    return 0.5 * a;
}

/// Ear-clipping triangulation of a simple counter-clockwise polygon.
inline std::vector<std::array<int, 3>> triangulate(const Polygon& poly) {
    const int n = static_cast<int>(poly.size());
    require(n >= 3, ErrorCode::invalid_argument, "polygon needs at least 3 vertices");
    std::vector<int> idx(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
    auto cross = [](const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& c) {
        return (b - a).x() * (c - a).y() - (b - a).y() * (c - a).x();
    };
    auto inside = [&](const Eigen::Vector2d& p, const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                      const Eigen::Vector2d& c) {
        return cross(a, b, p) >= 0 && cross(b, c, p) >= 0 && cross(c, a, p) >= 0;
    };
    std::vector<std::array<int, 3>> tris;
    std::size_t guard = 0;
    while (idx.size() > 3 && guard++ < 10000) {
        bool clipped = false;
        for (std::size_t k = 0; k < idx.size(); ++k) {
            int ia = idx[(k + idx.size() - 1) % idx.size()], ib = idx[k], ic = idx[(k + 1) % idx.size()];
            const auto& a = poly[static_cast<std::size_t>(ia)];
            const auto& b = poly[static_cast<std::size_t>(ib)];
            const auto& c = poly[static_cast<std::size_t>(ic)];
            if (cross(a, b, c) <= 0) continue;
            bool ear = true;
            for (int o : idx) {
                if (o == ia || o == ib || o == ic) continue;
                if (inside(poly[static_cast<std::size_t>(o)], a, b, c)) {
                    ear = false;
                    break;
                }
            }
            if (!ear) continue;
            tris.push_back({ia, ib, ic});
            idx.erase(idx.begin() + static_cast<std::ptrdiff_t>(k));
            clipped = true;
            break;
        }
        require(clipped, ErrorCode::invalid_argument, "polygon is not simple");
    }
    tris.push_back({idx[0], idx[1], idx[2]});
    return tris;
}

/// Closed prism: polygon in the xy plane extruded over z in [z0, z1].
inline TriMesh prism(Polygon poly, double z0, double z1) {
    if (signed_area(poly) < 0) std::reverse(poly.begin(), poly.end());
    const int n = static_cast<int>(poly.size());
    TriMesh m;
    for (const auto& p : poly) m.vertices.emplace_back(p.x(), p.y(), z0);
    for (const auto& p : poly) m.vertices.emplace_back(p.x(), p.y(), z1);
    for (auto t : triangulate(poly)) {
        m.triangles.push_back({t[0], t[2], t[1]});              // bottom faces -z
        m.triangles.push_back({t[0] + n, t[1] + n, t[2] + n});  // top faces +z
    }
    for (int i = 0; i < n; ++i) {
        int j = (i + 1) % n;
        m.triangles.push_back({i, j, j + n});
        m.triangles.push_back({i, j + n, i + n});
    }
    return m;
}

/// Axis-aligned box centered at the origin.
inline TriMesh box(const Vec3& size) {
    double x = 0.5 * size.x(), y = 0.5 * size.y();
    return prism({{-x, -y}, {x, -y}, {x, y}, {-x, y}}, -0.5 * size.z(), 0.5 * size.z());
}

inline TriMesh box(double edge) { return box(Vec3::Constant(edge)); }

inline TriMesh cylinder(double radius, double height, int segments = 48) {
    Polygon p;
    for (int i = 0; i < segments; ++i) {
        double a = 2.0 * kPi * i / segments;
        p.emplace_back(radius * std::cos(a), radius * std::sin(a));
    }
    return prism(p, -0.5 * height, 0.5 * height);
}

/// L-shaped prism: a `size` square footprint with the (+x, +y) quadrant of
/// side `size - arm` removed. Height along z, centered at origin.
inline TriMesh l_prism(double size, double arm, double height) {
    double h = 0.5 * size;
    return prism({{-h, -h}, {h, -h}, {h, -h + arm}, {-h + arm, -h + arm}, {-h + arm, h}, {-h, h}}, -0.5 * height,
                 0.5 * height);
}

/// UV sphere with outward orientation.
inline TriMesh sphere(double radius, int rings = 48, int segments = 96) {
    TriMesh m;
    m.vertices.emplace_back(0, 0, -radius);
    for (int r = 1; r < rings; ++r) {
        double phi = -0.5 * kPi + kPi * r / rings;
        for (int s = 0; s < segments; ++s) {
            double th = 2.0 * kPi * s / segments;
            m.vertices.emplace_back(radius * std::cos(phi) * std::cos(th), radius * std::cos(phi) * std::sin(th),
                                    radius * std::sin(phi));
        }
    }
    m.vertices.emplace_back(0, 0, radius);
    const int top = static_cast<int>(m.vertices.size()) - 1;
    auto ring = [&](int r, int s) { return 1 + (r - 1) * segments + (s % segments); };
    for (int s = 0; s < segments; ++s) m.triangles.push_back({0, ring(1, s + 1), ring(1, s)});
    for (int r = 1; r < rings - 1; ++r)
        for (int s = 0; s < segments; ++s) {
            m.triangles.push_back({ring(r, s), ring(r, s + 1), ring(r + 1, s + 1)});
            m.triangles.push_back({ring(r, s), ring(r + 1, s + 1), ring(r + 1, s)});
        }
    for (int s = 0; s < segments; ++s) m.triangles.push_back({top, ring(rings - 1, s), ring(rings - 1, s + 1)});
    return m;
}

/// Random star-shaped polygon prism; no rotational symmetry in general, so
/// its in-kit orientation is well defined.
inline TriMesh random_part(Rng& rng) {
    int n = std::uniform_int_distribution<int>(5, 8)(rng);
    std::vector<double> angles;
    for (int i = 0; i < n; ++i) angles.push_back(uniform(rng, 0.0, 2.0 * kPi));
    std::sort(angles.begin(), angles.end());
    // keep angular gaps reasonable so the outline is not degenerate
    for (int i = 0; i < n; ++i) angles[static_cast<std::size_t>(i)] = 0.8 * angles[static_cast<std::size_t>(i)] + 0.2 * (2.0 * kPi * i / n);
    Polygon p;
    for (double a : angles) {
        double r = uniform(rng, 0.45, 1.0);
        p.emplace_back(r * std::cos(a), r * std::sin(a));
    }
    double height = uniform(rng, 0.35, 0.9);
    return prism(p, -0.5 * height, 0.5 * height);
}

}  // namespace seat::shapes
