#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "seat/error.hpp"
#include "seat/geom.hpp"
#include "seat/volume.hpp"

namespace seat {

/// 3D points with a per-point label (+1 object, -1 kit).
struct LabeledPointCloud {
    std::vector<Vec3> points;
    std::vector<float> labels;

    std::size_t size() const { return points.size(); }
    void append(const LabeledPointCloud& o) {
        points.insert(points.end(), o.points.begin(), o.points.end());
        labels.insert(labels.end(), o.labels.begin(), o.labels.end());
    }
};

namespace detail {

struct SurfaceElement {
    Vec3 anchor;  // point on the surface
    int axis;     // axis normal to the element
};

inline bool solid_at(const VoxelVolume& v, const Vec3i& c) {
    if (!v.grid().in_range(c)) return false;
    float x = v.at(c);
    return v.kind() == VolumeKind::tsdf ? x <= 0.0f : x > 0.5f;
}

/// Occupancy boundary faces (occupancy/feature volumes) or untruncated
/// zero crossings between axis neighbours (TSDF volumes).
inline std::vector<SurfaceElement> surface_elements(const VoxelVolume& vol) {
    std::vector<SurfaceElement> out;
    const GridSpec& g = vol.grid();
    const double s = g.voxel_size;
    const bool tsdf = vol.kind() == VolumeKind::tsdf;
    for (int k = 0; k < g.dims.z(); ++k)
        for (int j = 0; j < g.dims.y(); ++j)
            for (int i = 0; i < g.dims.x(); ++i) {
                Vec3i c(i, j, k);
                if (tsdf) {
                    float a = vol.at(c);
                    for (int ax = 0; ax < 3; ++ax) {
                        Vec3i n = c;
                        n[ax] += 1;
                        if (!g.in_range(n)) continue;
                        float b = vol.at(n);
                        if (std::abs(a) >= 1.0f && std::abs(b) >= 1.0f) continue;
                        if ((a > 0.0f) == (b > 0.0f)) continue;
                        double t = a / static_cast<double>(a - b);
                        Vec3 p = g.center(c);
                        p[ax] += t * s;
                        out.push_back({p, ax});
                    }
                } else {
                    if (!solid_at(vol, c)) continue;
                    for (int ax = 0; ax < 3; ++ax)
                        for (int dir = -1; dir <= 1; dir += 2) {
                            Vec3i n = c;
                            n[ax] += dir;
                            if (solid_at(vol, n)) continue;
                            Vec3 p = g.center(c);
                            p[ax] += 0.5 * dir * s;
                            out.push_back({p, ax});
                        }
                }
            }
    return out;
}

}  // namespace detail

/// Exactly `n` points drawn uniformly (with replacement) from the volume's
/// surface elements, each jittered within its voxel face. Deterministic per seed.
inline LabeledPointCloud sample_surface_points(const VoxelVolume& vol, std::size_t n, float label,
                                               std::uint64_t seed) {
    require(label == 1.0f || label == -1.0f, ErrorCode::invalid_argument, "label must be +1 or -1");
    require(n > 0, ErrorCode::invalid_argument, "point count must be positive");
    auto elems = detail::surface_elements(vol);
    require(!elems.empty(), ErrorCode::empty_surface, "volume has no surface");
    Rng rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, elems.size() - 1);
    std::uniform_real_distribution<double> jitter(-0.5, 0.5);
    const double s = vol.voxel_size();
    LabeledPointCloud pc;
    pc.points.reserve(n);
    pc.labels.assign(n, label);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& e = elems[pick(rng)];
        Vec3 p = e.anchor;
        for (int ax = 0; ax < 3; ++ax)
            if (ax != e.axis) p[ax] += jitter(rng) * s;
        pc.points.push_back(p);
    }
    return pc;
}

}  // namespace seat
