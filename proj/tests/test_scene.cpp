#include <gtest/gtest.h>

#include "seat/bench.hpp"
#include "seat/io.hpp"
#include "seat/scene.hpp"
#include "seat/shapes.hpp"

using namespace seat;
using namespace seat::shapes;

namespace {

struct Kitted {
    std::vector<TriMesh> objects;
    KitAssembly assembly;
};

Kitted kitted(int n, std::uint64_t seed) {
    Rng rng(seed);
    Kitted out;
    std::vector<std::pair<TriMesh, Pose>> kits;
    for (int i = 0; i < n; ++i) {
        out.objects.push_back(normalize_object(random_part(rng)));
        GeneratedKit k = generate_kit(out.objects.back());
        kits.emplace_back(k.kit, k.cavity_pose);
    }
    if (n == 1) {
        out.assembly = single_kit_assembly(kits[0].first, kits[0].second);
    } else {
        std::vector<double> angles(static_cast<std::size_t>(n - 1), 15.0);
        out.assembly = link_kits(kits, angles, seed);
    }
    return out;
}

VoxelVolume world_occupancy(const TriMesh& m, const Pose& p, const GridSpec& g) { return voxelize_mesh_clipped(transformed(m, p), g); }

GridSpec workspace_grid(const Aabb& ws) { return GridSpec::covering(ws.inflated(0.01), 0.001, Vec3::Zero()); }

Scene cube_only_scene(const Vec3& at) {
    Scene s;
    s.workspace = SceneOptions{}.workspace;
    s.camera = default_camera(s.workspace);
    SceneObject o;
    o.id = 1;
    o.mesh = box(0.03);
    o.gt_start = Pose::translation(at + Vec3(0, 0, 0.015));
    s.objects.push_back(o);
    return s;
}

}  // namespace

TEST(SampleScene, SingleObjectInsideBoundsClearOfKit) {
    Kitted k = kitted(1, 1);
    Scene s = sample_scene(k.objects, k.assembly, 3);
    ASSERT_EQ(s.objects.size(), 1u);
    const auto& o = s.objects[0];
    Aabb b = transformed(o.mesh, o.gt_start).aabb();
    EXPECT_TRUE(s.workspace.inflated(1e-9).contains(b.lo));
    EXPECT_TRUE(s.workspace.inflated(1e-9).contains(b.hi));
    EXPECT_LE(b.hi.x(), SceneOptions{}.object_side_max_x + 1e-9);
    EXPECT_NEAR(b.lo.z(), 0.0, 1e-9);
    GridSpec g = workspace_grid(s.workspace);
    VoxelVolume ov = world_occupancy(o.mesh, o.gt_start, g);
    VoxelVolume kv = world_occupancy(s.assembly.kits[0].mesh, s.assembly.kit_world(0), g);
    EXPECT_EQ(intersection_count(ov, kv), 0u);
    Aabb kb = s.assembly.world_aabb();
    EXPECT_GE(kb.lo.x(), SceneOptions{}.kit_side_min_x - 1e-9);
}

TEST(SampleScene, DeterministicPerSeed) {
    Kitted k = kitted(3, 2);
    Scene a = sample_scene(k.objects, k.assembly, 77), b = sample_scene(k.objects, k.assembly, 77);
    EXPECT_EQ(scene_to_json(a).dump(), scene_to_json(b).dump());
    Scene c = sample_scene(k.objects, k.assembly, 78);
    EXPECT_NE(scene_to_json(a).dump(), scene_to_json(c).dump());
}

TEST(SampleScene, FourObjectsPairwiseDisjoint) {
    Kitted k = kitted(4, 3);
    Scene s = sample_scene(k.objects, k.assembly, 5);
    GridSpec g = workspace_grid(s.workspace);
    std::vector<VoxelVolume> v;
    for (const auto& o : s.objects) v.push_back(world_occupancy(o.mesh, o.gt_start, g));
    for (std::size_t i = 0; i < v.size(); ++i)
        for (std::size_t j = i + 1; j < v.size(); ++j) EXPECT_EQ(intersection_count(v[i], v[j]), 0u);
}

TEST(SampleScene, GtKitIsCavityPose) {
    Kitted k = kitted(3, 4);
    Scene s = sample_scene(k.objects, k.assembly, 9);
    for (std::size_t i = 0; i < s.objects.size(); ++i) {
        Pose expect = s.assembly.base_frame * s.assembly.kits[i].kit_pose * s.assembly.kits[i].cavity_pose;
        EXPECT_LT(position_error(s.objects[i].gt_kit, expect), 1e-12);
        EXPECT_LT(rotation_error(s.objects[i].gt_kit, expect), 1e-7);
        EXPECT_EQ(s.assembly.kits[i].object_id, s.objects[i].id);
    }
}

TEST(SampleScene, StartPosesUpright) {
    Kitted k = kitted(2, 6);
    Scene s = sample_scene(k.objects, k.assembly, 1);
    for (const auto& o : s.objects) EXPECT_NEAR(o.gt_start.rotate(Vec3::UnitZ()).z(), 1.0, 1e-12);
}

TEST(SampleScene, WorkspaceFull) {
    Kitted k = kitted(2, 7);
    SceneOptions opt;
    opt.workspace = Aabb{Vec3(-0.05, -0.12, 0.0), Vec3(0.51, 0.15, 0.12)};
    try {
        sample_scene(k.objects, k.assembly, 1, opt);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::workspace_full);
    }
}

TEST(SampleScene, CountMismatchRejected) {
    Kitted k = kitted(2, 8);
    k.objects.pop_back();
    EXPECT_THROW(sample_scene(k.objects, k.assembly, 1), Error);
}

TEST(Observe, CubeTopSurfaceZeroCrossing) {
    Scene s = cube_only_scene(Vec3(-0.1, 0.0, 0.0));
    Observation obs = observe(s);
    ASSERT_EQ(obs.object_volumes.count(1), 1u);
    const VoxelVolume& v = obs.object_volumes.at(1);
    EXPECT_EQ(v.dims(), Vec3i::Constant(128));
    EXPECT_DOUBLE_EQ(v.voxel_size(), kObsVoxel);
    const GridSpec& g = v.grid();
    // a pixel footprint at 0.8 m is ~1.5 mm, so the sign flip is pinned to within 2-3 mm of the face
    const double top = 0.03;
    int checked = 0;
    for (int j = 0; j < g.dims.y(); ++j)
        for (int i = 0; i < g.dims.x(); ++i) {
            Vec3 c = g.center(i, j, 0);
            if (std::abs(c.x() + 0.1) > 0.01 || std::abs(c.y()) > 0.01) continue;
            bool inside_below = false;
            for (int k = 0; k < g.dims.z(); ++k) {
                double z = g.center(i, j, k).z();
                float val = v.at(i, j, k);
                if (z > top - 0.003 && z < top && val < 0.0f) inside_below = true;
                if (z > top + 0.002) {
                    EXPECT_GT(val, 0.0f);
                }
                if (z < top - 0.01) {
                    EXPECT_EQ(val, 1.0f);
                }
            }
            EXPECT_TRUE(inside_below);
            ++checked;
        }
    EXPECT_GT(checked, 100);
}

TEST(Observe, OutOfFrustumIsNotFound) {
    Scene s = cube_only_scene(Vec3(3.0, 0.0, 0.0));
    try {
        observe(s);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::not_found);
    }
}

TEST(Observe, KitOnlyScene) {
    Kitted k = kitted(2, 9);
    Scene s = sample_scene(k.objects, k.assembly, 2);
    s.objects.clear();
    Observation obs = observe(s);
    EXPECT_TRUE(obs.object_volumes.empty());
    ASSERT_FALSE(obs.kit_volume.empty());
    EXPECT_GT(occupancy_from_tsdf(obs.kit_volume).count_occupied(), 0u);
    Aabb kb = s.assembly.world_aabb();
    Aabb vb{obs.kit_volume.origin(), obs.kit_volume.origin() + obs.kit_volume.grid().extent()};
    EXPECT_TRUE(vb.contains(kb.lo));
    EXPECT_TRUE(vb.contains(kb.hi));
}

TEST(Observe, EveryObjectHasVolume) {
    Kitted k = kitted(3, 10);
    Scene s = sample_scene(k.objects, k.assembly, 4);
    Observation obs = observe(s);
    for (const auto& o : s.objects) EXPECT_EQ(obs.object_volumes.count(o.id), 1u);
}

TEST(Observe, MaskVolumeConsistency) {
    Kitted k = kitted(2, 11);
    Scene s = sample_scene(k.objects, k.assembly, 6);
    Observation obs = observe(s);
    const Camera& cam = obs.depth.camera;
    for (const auto& [id, v] : obs.object_volumes) {
        const GridSpec& g = v.grid();
        int crossings = 0;
        for (int kz = 0; kz < g.dims.z(); ++kz)
            for (int j = 0; j < g.dims.y(); ++j)
                for (int i = 0; i + 1 < g.dims.x(); ++i) {
                    float a = v.at(i, j, kz), b = v.at(i + 1, j, kz);
                    if ((a > 0) == (b > 0) || std::abs(a) >= 1.0f || std::abs(b) >= 1.0f) continue;
                    ++crossings;
                    int px, py;
                    double d;
                    ASSERT_TRUE(cam.pixel_of(g.center(i, j, kz), px, py, d));
                    bool near = false;
                    for (int dv = -1; dv <= 1 && !near; ++dv)
                        for (int du = -1; du <= 1 && !near; ++du) {
                            int u = px + du, w = py + dv;
                            near = u >= 0 && w >= 0 && u < cam.width && w < cam.height && obs.masks.at(u, w) == id;
                        }
                    EXPECT_TRUE(near);
                }
        EXPECT_GT(crossings, 0);
    }
}

TEST(Observe, PureFunctionOfScene) {
    Kitted k = kitted(2, 12);
    SceneOptions opt;
    opt.depth_noise = 0.0005;
    Scene s = sample_scene(k.objects, k.assembly, 8, opt);
    Observation a = observe(s), b = observe(s);
    EXPECT_EQ(a.depth.data, b.depth.data);
    EXPECT_EQ(a.masks.labels, b.masks.labels);
    for (const auto& [id, v] : a.object_volumes) EXPECT_EQ(v.data(), b.object_volumes.at(id).data());
    EXPECT_EQ(a.kit_volume.data(), b.kit_volume.data());
}

TEST(Observe, DefaultCameraGeometry) {
    Aabb ws = SceneOptions{}.workspace;
    Camera c = default_camera(ws);
    EXPECT_EQ(c.width, 640);
    EXPECT_EQ(c.height, 480);
    Vec3 target(ws.center().x(), ws.center().y(), 0.0);
    EXPECT_NEAR((c.pose.p - target).norm(), 0.8, 1e-12);
    Vec3 dir = (c.pose.p - target).normalized();
    EXPECT_NEAR(rad2deg(std::asin(dir.z())), 45.0, 1e-9);
    // optical axis points at the target
    EXPECT_NEAR((c.pose.rotate(Vec3::UnitZ()) + dir).norm(), 0.0, 1e-9);
}

TEST(SceneFiles, RoundTrip) {
    Scene s = make_random_scene({}, 2, 0.0025, 31);
    fs::path d = fs::temp_directory_path() / "seat_scene_roundtrip";
    fs::remove_all(d);
    save_scene(d, s, 0.0025);
    Scene r = load_scene(d);
    ASSERT_EQ(r.objects.size(), s.objects.size());
    for (std::size_t i = 0; i < s.objects.size(); ++i) {
        EXPECT_LT(position_error(r.objects[i].gt_start, s.objects[i].gt_start), 1e-12);
        EXPECT_LT(position_error(r.objects[i].gt_kit, s.objects[i].gt_kit), 1e-12);
    }
    Observation a = observe(s), b = observe(r);
    EXPECT_EQ(a.masks.labels, b.masks.labels);
    std::size_t diff = 0;
    for (std::size_t i = 0; i < a.depth.data.size(); ++i) diff += std::abs(a.depth.data[i] - b.depth.data[i]) > 1e-6f;
    EXPECT_EQ(diff, 0u);
}
