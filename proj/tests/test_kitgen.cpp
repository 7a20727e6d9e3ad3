#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "seat/kitgen.hpp"
#include "seat/plan.hpp"
#include "seat/shapes.hpp"

using namespace seat;
using namespace seat::shapes;

namespace {

// Cavity columns of a kit grid: (i, j) with any cavity cell.
std::vector<Eigen::Vector2i> cavity_columns(const VoxelVolume& cavity) {
    std::vector<Eigen::Vector2i> out;
    const Vec3i d = cavity.dims();
    for (int j = 0; j < d.y(); ++j)
        for (int i = 0; i < d.x(); ++i)
            for (int k = 0; k < d.z(); ++k)
                if (cavity.at(i, j, k) > 0.5f) {
                    out.emplace_back(i, j);
                    break;
                }
    return out;
}

Eigen::Vector2i footprint_extent(const VoxelVolume& cavity) {
    auto cols = cavity_columns(cavity);
    Eigen::Vector2i lo(1 << 20, 1 << 20), hi(-1, -1);
    for (const auto& c : cols) {
        lo = lo.cwiseMin(c);
        hi = hi.cwiseMax(c);
    }
    return hi - lo + Eigen::Vector2i(1, 1);
}

// Object voxel centers (0.5 mm lattice) in the model frame.
std::vector<Vec3> interior_points(const TriMesh& m, double vs = 0.0005) {
    GridSpec g = GridSpec::covering(m.aabb().inflated(2 * vs), vs, Vec3::Constant(0.5 * vs));
    VoxelVolume v = voxelize_mesh(m, g);
    std::vector<Vec3> pts;
    for (std::size_t i = 0; i < v.size(); ++i)
        if (v.occupied(i)) pts.push_back(g.center(g.coords(i)));
    return pts;
}

std::size_t points_in_solid(const std::vector<Vec3>& pts, const Pose& pose, const VoxelVolume& solid) {
    std::size_t n = 0;
    for (const auto& p : pts) n += solid.occupied(solid.grid().cell_of(pose * p));
    return n;
}

double tilt_deg(const KitEntry& k) { return rad2deg(std::acos(std::clamp(k.insertion_axis().z(), -1.0, 1.0))); }

}  // namespace

TEST(Normalize, TenCentimeterCube) {
    TriMesh m = normalize_object(transformed(box(0.1), Pose::translation(Vec3(1, 2, 3))));
    Aabb b = m.aabb();
    EXPECT_LT((b.extent() - Vec3::Constant(0.05)).norm(), 1e-12);
    EXPECT_LT(b.center().norm(), 1e-12);
}

TEST(Normalize, AlreadyNormalizedOnlyCenters) {
    TriMesh src = transformed(box(Vec3(0.05, 0.03, 0.02)), Pose::translation(Vec3(0.01, 0, 0)));
    TriMesh m = normalize_object(src);
    for (std::size_t i = 0; i < m.vertices.size(); ++i)
        EXPECT_LT((m.vertices[i] - (src.vertices[i] - Vec3(0.01, 0, 0))).norm(), 1e-12);
}

TEST(Normalize, ElongatedBar) {
    TriMesh m = normalize_object(box(Vec3(0.2, 0.02, 0.02)));
    EXPECT_LT((m.aabb().extent() - Vec3(0.05, 0.005, 0.005)).norm(), 1e-12);
}

TEST(Normalize, DegenerateRejected) {
    TriMesh m;
    m.vertices = {Vec3(1, 1, 1), Vec3(1, 1, 1), Vec3(1, 1, 1)};
    m.triangles = {{0, 1, 2}};
    try {
        normalize_object(m);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::invalid_argument);
    }
}

TEST(GenerateKit, CubeWithMargin) {
    const double edge = 0.04, margin = 0.0025;
    TriMesh cube = box(edge);
    GeneratedKit k = generate_kit(cube, KitSpec{.margin = margin});
    Eigen::Vector2i fp = footprint_extent(k.cavity);
    // 45 mm expected, one voxel tolerance
    EXPECT_NEAR(fp.x(), 45, 1);
    EXPECT_NEAR(fp.y(), 45, 1);
    int depth = 0;
    const Vec3i d = k.cavity.dims();
    for (int z = 0; z < d.z(); ++z) depth += k.cavity.at(d.x() / 2, d.y() / 2, z) > 0.5f;
    EXPECT_EQ(depth, 40);
    // horizontal clearance of the placed cube to the cavity walls
    double gap_x = 0.5 * (fp.x() * 0.001 - edge), gap_y = 0.5 * (fp.y() * 0.001 - edge);
    EXPECT_GE(gap_x, 0.0);
    EXPECT_LE(gap_x, 2 * margin);
    EXPECT_GE(gap_y, 0.0);
    EXPECT_LE(gap_y, 2 * margin);
    EXPECT_EQ(points_in_solid(interior_points(cube), k.cavity_pose, k.occupancy), 0u);
}

TEST(GenerateKit, BlockDimensions) {
    GeneratedKit k = generate_kit(box(0.04));
    Aabb b = k.kit.aabb();
    // cavity 44 mm (2 voxel shift per side) + 1 cm border per side, depth 40 + base 10
    EXPECT_NEAR(b.extent().x(), 0.064, 1e-9);
    EXPECT_NEAR(b.extent().z(), 0.05, 1e-9);
    EXPECT_NEAR(b.hi.z(), 0.0, 1e-9);
}

TEST(GenerateKit, ZeroMarginMatchesFootprint) {
    GeneratedKit k = generate_kit(box(0.04), KitSpec{.margin = 0.0});
    Eigen::Vector2i fp = footprint_extent(k.cavity);
    EXPECT_NEAR(fp.x(), 40, 1);
    EXPECT_NEAR(fp.y(), 40, 1);
}

TEST(GenerateKit, LShapedCavity) {
    TriMesh l = normalize_object(l_prism(0.05, 0.02, 0.03));
    GeneratedKit k = generate_kit(l);
    auto cols = cavity_columns(k.cavity);
    Aabb lb = l.aabb();
    double bbox_cols = (lb.extent().x() / 0.001 + 6) * (lb.extent().y() / 0.001 + 6);
    EXPECT_LT(static_cast<double>(cols.size()), 0.8 * bbox_cols);
    auto pts = interior_points(l);
    EXPECT_EQ(points_in_solid(pts, k.cavity_pose, k.occupancy), 0u);
    Pose rotated = k.cavity_pose * Pose::rotation(axis_angle(Vec3::UnitZ(), kPi / 2));
    EXPECT_GT(points_in_solid(pts, rotated, k.occupancy), 1000u);
}

TEST(GenerateKit, MarginTooLarge) {
    try {
        generate_kit(box(0.05), KitSpec{.margin = 0.03});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::spec_error);
    }
}

TEST(GenerateKit, NegativeMarginRejected) { EXPECT_THROW(generate_kit(box(0.04), KitSpec{.margin = -0.001}), Error); }

TEST(GenerateKit, InsertabilityAndConformity) {
    Rng rng(21);
    for (int t = 0; t < 12; ++t) {
        TriMesh obj = normalize_object(random_part(rng));
        KitSpec spec;
        GeneratedKit k = generate_kit(obj, spec);
        auto pts = interior_points(obj);
        // straight descent from +10 cm in 1 mm steps
        for (int s = 0; s <= 100; ++s) {
            Pose p = Pose::translation(Vec3(0, 0, 0.001 * s)) * k.cavity_pose;
            ASSERT_EQ(points_in_solid(pts, p, k.occupancy), 0u) << "part " << t << " step " << s;
        }
        // cavity contains the object and stays within margin + 1 voxel of the solid
        const GridSpec& g = k.cavity.grid();
        VoxelVolume on_grid = voxelize_mesh_clipped(transformed(obj, k.cavity_pose), g);
        for (std::size_t i = 0; i < on_grid.size(); ++i)
            if (on_grid.occupied(i)) {
                EXPECT_TRUE(k.cavity.occupied(i));
            }
        std::set<std::pair<long, long>> seen;
        std::vector<Eigen::Vector2d> footprint;
        for (const auto& p : pts) {
            Vec3 w = k.cavity_pose * p;
            if (seen.emplace(std::lround(w.x() / 0.0005), std::lround(w.y() / 0.0005)).second) footprint.emplace_back(w.x(), w.y());
        }
        for (const auto& col : cavity_columns(k.cavity)) {
            Vec3 c = g.center(col.x(), col.y(), 0);
            double best = 1e9;
            for (const auto& s : footprint) best = std::min(best, (Eigen::Vector2d(c.x(), c.y()) - s).norm());
            EXPECT_LE(best, spec.margin + g.voxel_size + 1e-9);
        }
    }
}

TEST(GenerateKit, DeterministicVolumeBytes) {
    Rng a(3), b(3);
    GeneratedKit ka = generate_kit(normalize_object(random_part(a)));
    GeneratedKit kb = generate_kit(normalize_object(random_part(b)));
    std::stringstream sa, sb;
    write_volume(sa, ka.occupancy);
    write_volume(sb, kb.occupancy);
    EXPECT_EQ(sa.str(), sb.str());
}

TEST(LinkKits, TwoKitsTenDegrees) {
    GeneratedKit k = generate_kit(box(0.04));
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
        KitAssembly a = link_kits({{k.kit, k.cavity_pose}, {k.kit, k.cavity_pose}}, {10.0}, seed);
        ASSERT_EQ(a.kits.size(), 2u);
        EXPECT_NEAR(tilt_deg(a.kits[0]), 0.0, 1e-9);
        EXPECT_NEAR(tilt_deg(a.kits[1]), 10.0, 1e-9);
    }
}

TEST(LinkKits, AnglesBelowFloorRejected) {
    GeneratedKit k = generate_kit(box(0.04));
    EXPECT_THROW(link_kits({{k.kit, k.cavity_pose}, {k.kit, k.cavity_pose}}, {0.0}, 1), Error);
    EXPECT_THROW(link_kits({{k.kit, k.cavity_pose}, {k.kit, k.cavity_pose}}, {50.0}, 1), Error);
    EXPECT_THROW(link_kits({{k.kit, k.cavity_pose}}, {}, 1), Error);
}

TEST(LinkKits, FiveKitsSteepBrackets) {
    GeneratedKit k = generate_kit(box(0.04));
    std::vector<std::pair<TriMesh, Pose>> kits(5, {k.kit, k.cavity_pose});
    KitAssembly a = link_kits(kits, {45.0, 45.0, 45.0, 45.0}, 2);
    // cumulative bound from composing k hinge rotations of at most 45 degrees
    for (std::size_t i = 0; i < a.kits.size(); ++i) {
        EXPECT_LE(tilt_deg(a.kits[i]), 45.0 * static_cast<double>(i) + 1e-9);
        EXPECT_GT(a.kits[i].insertion_axis().z(), 0.0);
    }
}

TEST(LinkKits, NoPairwiseSolidOverlap) {
    Rng rng(4);
    for (int t = 0; t < 5; ++t) {
        std::vector<std::pair<TriMesh, Pose>> kits;
        std::vector<double> angles;
        for (int i = 0; i < 3; ++i) {
            GeneratedKit k = generate_kit(normalize_object(random_part(rng)));
            kits.emplace_back(k.kit, k.cavity_pose);
            if (i > 0) angles.push_back(std::round(uniform(rng, 10, 45)));
        }
        KitAssembly a;
        try {
            a = link_kits(kits, angles, static_cast<std::uint64_t>(t));
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), ErrorCode::placement_error);
            continue;
        }
        GridSpec g = GridSpec::covering(a.world_aabb().inflated(0.002), 0.0005, Vec3::Constant(0.00025));
        std::vector<VoxelVolume> v;
        for (std::size_t i = 0; i < a.kits.size(); ++i) v.push_back(voxelize_mesh(transformed(a.kits[i].mesh, a.kit_world(i)), g));
        for (std::size_t i = 0; i < v.size(); ++i)
            for (std::size_t j = i + 1; j < v.size(); ++j) EXPECT_LE(intersection_count(v[i], v[j]), 20u);
    }
}
