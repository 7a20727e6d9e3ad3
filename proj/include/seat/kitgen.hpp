#pragma once

// Procedural kits: every object gets a block with a cavity that is the
// margin-dilated vertical extrusion of its top-down silhouette, and kits are
// chained into tilted multi-kit assemblies with hinged footprint edges.
//
// Kit frame: block top face at z = 0, footprint centered on the origin,
// cavity opening toward +z (the insertion axis).

#include <cmath>
#include <random>
#include <vector>

#include "seat/error.hpp"
#include "seat/geom.hpp"
#include "seat/mesh.hpp"
#include "seat/volume.hpp"

namespace seat {

inline constexpr double kObjectBoxEdge = 0.05;

struct KitSpec {
    double margin = 0.0025;          // horizontal clearance (m)
    double block_base_thickness = 0.01;
    double border = 0.01;            // block wall beyond the cavity footprint
    double voxel_size = 0.001;       // CSG resolution
    double max_footprint = 0.1;      // largest admissible block edge
    Vec3 insertion_axis = Vec3::UnitZ();

    void validate() const {
        require(margin >= 0.0, ErrorCode::invalid_argument, "margin must be >= 0");
        require(block_base_thickness > 0.0, ErrorCode::invalid_argument, "base thickness must be > 0");
        require(voxel_size > 0.0 && border >= 0.0, ErrorCode::invalid_argument, "bad kit resolution/border");
    }
};

/// Scales a mesh so its longest bounding-box edge is 5 cm and centers the box at the origin.
inline TriMesh normalize_object(const TriMesh& mesh, double edge = kObjectBoxEdge) {
    require(!mesh.empty(), ErrorCode::invalid_argument, "cannot normalize an empty mesh");
    Aabb b = mesh.aabb();
    double longest = b.extent().maxCoeff();
    require(longest > 1e-12, ErrorCode::invalid_argument, "degenerate mesh has zero extent");
    TriMesh out = mesh;
    Vec3 c = b.center();
    double s = edge / longest;
    for (auto& v : out.vertices) v = (v - c) * s;
    return out;
}

struct GeneratedKit {
    TriMesh kit;            // kit solid, kit frame
    Pose cavity_pose;       // object model frame expressed in the kit frame
    VoxelVolume occupancy;  // kit solid on the CSG grid
    VoxelVolume cavity;     // removed region (dilated extrusion)
    VoxelVolume extrusion;  // undilated silhouette extrusion of the object
};

namespace detail {

/// Orthographic top view on the columns of `g`: a column is set when the
/// projection of any triangle overlaps its square with positive area.
inline std::vector<std::uint8_t> silhouette_columns(const TriMesh& mesh, const GridSpec& g) {
    const int nx = g.dims.x(), ny = g.dims.y();
    const double vs = g.voxel_size, eps = 1e-9;
    std::vector<std::uint8_t> sil(static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny), 0);
    for (const auto& t : mesh.triangles) {
        Eigen::Vector2d p[3];
        for (int i = 0; i < 3; ++i) p[i] = mesh.vertices[static_cast<std::size_t>(t[i])].head<2>();
        double area = (p[1] - p[0]).x() * (p[2] - p[0]).y() - (p[1] - p[0]).y() * (p[2] - p[0]).x();
        if (std::abs(area) < 1e-18) continue;  // vertical face: covered by its neighbours
        Eigen::Vector2d lo = p[0].cwiseMin(p[1]).cwiseMin(p[2]), hi = p[0].cwiseMax(p[1]).cwiseMax(p[2]);
        int i0 = std::max(0, static_cast<int>(std::floor((lo.x() - g.origin.x()) / vs))),
            i1 = std::min(nx - 1, static_cast<int>(std::floor((hi.x() - g.origin.x()) / vs)));
        int j0 = std::max(0, static_cast<int>(std::floor((lo.y() - g.origin.y()) / vs))),
            j1 = std::min(ny - 1, static_cast<int>(std::floor((hi.y() - g.origin.y()) / vs)));
        for (int j = j0; j <= j1; ++j)
            for (int i = i0; i <= i1; ++i) {
                std::size_t c = static_cast<std::size_t>(i) + static_cast<std::size_t>(nx) * static_cast<std::size_t>(j);
                if (sil[c]) continue;
                Eigen::Vector2d slo(g.origin.x() + i * vs, g.origin.y() + j * vs), shi = slo + Eigen::Vector2d(vs, vs);
                if (hi.x() <= slo.x() + eps || lo.x() >= shi.x() - eps || hi.y() <= slo.y() + eps || lo.y() >= shi.y() - eps)
                    continue;
                // separating axis along each edge normal
                bool separated = false;
                for (int e = 0; e < 3 && !separated; ++e) {
                    Eigen::Vector2d a = p[e], b = p[(e + 1) % 3], o = p[(e + 2) % 3];
                    Eigen::Vector2d n(-(b - a).y(), (b - a).x());
                    double side = n.dot(o - a);
                    if (side < 0) n = -n;
                    double sq_max = -1e300;
                    for (int q = 0; q < 4; ++q) {
                        Eigen::Vector2d corner((q & 1) ? shi.x() : slo.x(), (q & 2) ? shi.y() : slo.y());
                        sq_max = std::max(sq_max, n.dot(corner - a));
                    }
                    if (sq_max <= eps * n.norm()) separated = true;
                }
                if (!separated) sil[c] = 1;
            }
    }
    return sil;
}

}  // namespace detail

/// Kit solid and cavity pose for a normalized object.
inline GeneratedKit generate_kit(const TriMesh& object, const KitSpec& spec = {}) {
    spec.validate();
    require(!object.empty(), ErrorCode::invalid_argument, "empty object mesh");
    const double vs = spec.voxel_size;
    Aabb ob = object.aabb();
    Vec3 ext = ob.extent();
    Pose cavity_pose = Pose::translation(-ob.center() - Vec3(0, 0, 0.5 * ext.z()));
    TriMesh placed = transformed(object, cavity_pose);

    const int shift_axis = static_cast<int>(std::floor(spec.margin / vs + 1e-9));
    const int shift_diag = static_cast<int>(std::floor(spec.margin / (std::sqrt(2.0) * vs) + 1e-9));
    const int border = static_cast<int>(std::lround(spec.border / vs));
    const int base = std::max(1, static_cast<int>(std::lround(spec.block_base_thickness / vs)));
    const int half_x = static_cast<int>(std::ceil(0.5 * ext.x() / vs - 1e-9)) + shift_axis + border;
    const int half_y = static_cast<int>(std::ceil(0.5 * ext.y() / vs - 1e-9)) + shift_axis + border;
    const int depth = static_cast<int>(std::ceil(ext.z() / vs - 1e-9));

    GridSpec g;
    g.voxel_size = vs;
    g.dims = Vec3i(2 * half_x, 2 * half_y, depth + base);
    g.origin = Vec3(-half_x * vs, -half_y * vs, -ext.z() - base * vs);  // cavity floor on a cell boundary
    require(g.extent().x() <= spec.max_footprint + 1e-12 && g.extent().y() <= spec.max_footprint + 1e-12,
            ErrorCode::spec_error, "margin too large: cavity and border exceed the maximum block footprint");

    const int nx = g.dims.x(), ny = g.dims.y();
    std::vector<std::uint8_t> sil = detail::silhouette_columns(placed, g);

    std::vector<std::pair<int, int>> offsets = {{0, 0}};
    if (shift_axis > 0)
        for (auto o : {std::pair{shift_axis, 0}, {-shift_axis, 0}, {0, shift_axis}, {0, -shift_axis}})
            offsets.push_back(o);
    if (shift_diag > 0)
        for (auto o : {std::pair{shift_diag, shift_diag}, {shift_diag, -shift_diag}, {-shift_diag, shift_diag},
                       {-shift_diag, -shift_diag}})
            offsets.push_back(o);
    std::vector<std::uint8_t> dil(sil.size(), 0);
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i)
            for (auto [dx, dy] : offsets) {
                int si = i - dx, sj = j - dy;
                if (si < 0 || sj < 0 || si >= nx || sj >= ny) continue;
                if (sil[static_cast<std::size_t>(si) + static_cast<std::size_t>(nx) * static_cast<std::size_t>(sj)]) {
                    dil[static_cast<std::size_t>(i) + static_cast<std::size_t>(nx) * static_cast<std::size_t>(j)] = 1;
                    break;
                }
            }

    GeneratedKit out;
    out.cavity_pose = cavity_pose;
    out.occupancy = VoxelVolume(g, VolumeKind::occupancy, 1.0f);
    out.cavity = VoxelVolume(g, VolumeKind::occupancy, 0.0f);
    out.extrusion = VoxelVolume(g, VolumeKind::occupancy, 0.0f);
    const double floor_z = -ext.z();
    for (int k = 0; k < g.dims.z(); ++k) {
        double zc = g.origin.z() + (k + 0.5) * vs;
        if (zc <= floor_z) continue;
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i) {
                std::size_t c = static_cast<std::size_t>(i) + static_cast<std::size_t>(nx) * static_cast<std::size_t>(j);
                if (sil[c]) out.extrusion.at(i, j, k) = 1.0f;
                if (dil[c]) {
                    out.cavity.at(i, j, k) = 1.0f;
                    out.occupancy.at(i, j, k) = 0.0f;
                }
            }
    }
    out.kit = occupancy_to_mesh(out.occupancy);
    return out;
}

/// Occupancy of a lattice-aligned kit mesh (as produced by generate_kit) on its own grid.
inline VoxelVolume kit_occupancy(const TriMesh& kit, double voxel_size = 0.001) {
    Aabb b = kit.aabb();
    GridSpec g = GridSpec::covering(b, voxel_size, b.lo);
    // guard against floor/ceil jitter on exact lattice bounds
    g.dims = ((b.extent() / voxel_size).array().round().matrix()).cast<int>();
    g.origin = b.lo;
    return voxelize_mesh(kit, g);
}

struct KitEntry {
    TriMesh mesh;       // kit frame
    Pose kit_pose;      // kit frame in the assembly frame
    Pose cavity_pose;   // object model frame in the kit frame
    int object_id = 0;

    Pose cavity_in_assembly() const { return kit_pose * cavity_pose; }
    Vec3 insertion_axis() const { return kit_pose.rotate(Vec3::UnitZ()); }
};

struct KitAssembly {
    std::vector<KitEntry> kits;
    std::vector<double> bracket_angles;  // degrees
    Pose base_frame;                     // assembly frame in the world

    Pose cavity_world(std::size_t i) const { return base_frame * kits[i].cavity_in_assembly(); }
    Pose kit_world(std::size_t i) const { return base_frame * kits[i].kit_pose; }

    Aabb world_aabb() const {
        Aabb b;
        for (std::size_t i = 0; i < kits.size(); ++i) b.extend(transformed(kits[i].mesh, kit_world(i)).aabb());
        return b;
    }
};

inline KitAssembly single_kit_assembly(const TriMesh& kit, const Pose& cavity_pose, int object_id = 0) {
    KitAssembly a;
    a.kits.push_back({kit, Pose::identity(), cavity_pose, object_id});
    return a;
}

namespace detail {

/// True when any solid cell center of `a` falls inside a solid cell of `b`.
inline bool kits_intersect(const VoxelVolume& a, const Pose& pa, const VoxelVolume& b, const Pose& pb) {
    Pose a_to_b = pb.inverse() * pa;
    for (std::size_t idx = 0; idx < a.size(); ++idx) {
        if (!a.occupied(idx)) continue;
        Vec3 x = a_to_b * a.grid().center(a.grid().coords(idx));
        if (b.occupied(b.grid().cell_of(x))) return true;
    }
    return false;
}

}  // namespace detail

/// Chains 2-5 kits along +x. Kit i+1 is hinged on the shared footprint edge
/// of kit i and tilted by angles[i] about that (horizontal) hinge. The tilt
/// direction alternates so the absolute tilt never exceeds the largest
/// single bracket angle; the seed picks the first direction.
inline KitAssembly link_kits(const std::vector<std::pair<TriMesh, Pose>>& kits, const std::vector<double>& angles_deg,
                             std::uint64_t seed) {
    require(kits.size() >= 2 && kits.size() <= 5, ErrorCode::invalid_argument, "link_kits needs 2-5 kits");
    require(angles_deg.size() + 1 == kits.size(), ErrorCode::invalid_argument, "need |kits|-1 bracket angles");
    for (double a : angles_deg)
        require(a >= 10.0 && a <= 45.0, ErrorCode::invalid_argument, "bracket angles must lie in [10, 45] degrees");

    Rng rng(seed);
    bool raise_first = std::uniform_int_distribution<int>(0, 1)(rng) == 1;

    KitAssembly out;
    out.bracket_angles = angles_deg;
    double tilt = 0.0;  // signed tilt of the kit's +x axis above horizontal (rad)
    Pose current = Pose::identity();
    for (std::size_t i = 0; i < kits.size(); ++i) {
        if (i > 0) {
            const Aabb prev = kits[i - 1].first.aabb();
            const Aabb next = kits[i].first.aabb();
            double a = deg2rad(angles_deg[i - 1]);
            bool raise = (tilt > 0.0) ? false : (tilt < 0.0 ? true : raise_first);
            // raise: hinge on the top edge, lower: hinge on the bottom edge
            Vec3 hinge_prev(prev.hi.x(), 0.5 * (prev.lo.y() + prev.hi.y()), raise ? prev.hi.z() : prev.lo.z());
            Vec3 hinge_next(next.lo.x(), 0.5 * (next.lo.y() + next.hi.y()), raise ? next.hi.z() : next.lo.z());
            Quat rel = axis_angle(Vec3::UnitY(), raise ? -a : a);
            current = current * Pose::translation(hinge_prev) * Pose::rotation(rel) * Pose::translation(-hinge_next);
            tilt += raise ? a : -a;
        }
        out.kits.push_back({kits[i].first, current, kits[i].second, static_cast<int>(i)});
    }

    std::vector<VoxelVolume> occ;
    for (const auto& k : out.kits) occ.push_back(kit_occupancy(k.mesh));
    for (std::size_t i = 0; i < occ.size(); ++i)
        for (std::size_t j = i + 1; j < occ.size(); ++j)
            if (detail::kits_intersect(occ[i], out.kits[i].kit_pose, occ[j], out.kits[j].kit_pose))
                fail(ErrorCode::placement_error, "kits " + std::to_string(i) + " and " + std::to_string(j) + " intersect");
    return out;
}

}  // namespace seat
