#pragma once

// Simulated workspaces: objects scattered on the -x side of the table, the
// kit assembly on the +x side, observed by one depth camera.

#include <cstdint>
#include <map>
#include <random>
#include <vector>

#include "seat/error.hpp"
#include "seat/geom.hpp"
#include "seat/kitgen.hpp"
#include "seat/mesh.hpp"
#include "seat/render.hpp"
#include "seat/tsdf.hpp"
#include "seat/volume.hpp"

namespace seat {

inline constexpr double kObsVoxel = 0.00089;
inline constexpr int kObjectVolumeDim = 128;
inline constexpr std::int32_t kKitInstanceBase = 1000;

struct SceneObject {
    int id = 0;
    TriMesh mesh;   // model frame
    Pose gt_start;  // model frame in the world at rest
    Pose gt_kit;    // model frame in the world when kitted
};

struct Scene {
    std::vector<SceneObject> objects;
    KitAssembly assembly;
    Camera camera;
    Aabb workspace;
    double depth_noise = 0.0;  // Gaussian sigma (m)
    std::uint64_t seed = 0;

    const SceneObject& object(int id) const {
        for (const auto& o : objects)
            if (o.id == id) return o;
        fail(ErrorCode::not_found, "unknown object id " + std::to_string(id));
    }
    SceneObject& object(int id) {
        for (auto& o : objects)
            if (o.id == id) return o;
        fail(ErrorCode::not_found, "unknown object id " + std::to_string(id));
    }
};

struct SceneOptions {
    Aabb workspace{Vec3(-0.21, -0.12, 0.0), Vec3(0.51, 0.15, 0.12)};
    double object_side_max_x = 0.0;
    double kit_side_min_x = 0.03;
    double clearance = 0.005;
    double assembly_yaw_range = deg2rad(15.0);
    int max_rejections = 1000;
    double depth_noise = 0.0;
};

/// Pinhole 640x480 camera 0.8 m from the workspace center, 45 degrees above the table.
inline Camera default_camera(const Aabb& workspace) {
    Camera cam;
    cam.mode = CameraMode::pinhole;
    cam.width = 640;
    cam.height = 480;
    cam.fx = cam.fy = 550.0;
    cam.cx = 320.0;
    cam.cy = 240.0;
    Vec3 target = workspace.center();
    target.z() = 0.0;
    Vec3 eye = target + 0.8 * Vec3(0.0, -std::cos(deg2rad(45.0)), std::sin(deg2rad(45.0)));
    cam.pose = Camera::look_at(eye, target);
    return cam;
}

/// Places the assembly on the kit side and the objects upright (insertion
/// axis up, random yaw) on the object side without overlap.
inline Scene sample_scene(const std::vector<TriMesh>& objects, KitAssembly assembly, std::uint64_t seed,
                          const SceneOptions& opt = {}) {
    require(objects.size() == assembly.kits.size(), ErrorCode::invalid_argument,
            "need exactly one object per kit");
    Rng rng(seed);
    Scene s;
    s.workspace = opt.workspace;
    s.camera = default_camera(opt.workspace);
    s.depth_noise = opt.depth_noise;
    s.seed = seed;

    // Assembly: random yaw, resting on the table, flush with the kit side.
    if (!assembly.kits.empty()) {
        double yaw = uniform(rng, -opt.assembly_yaw_range, opt.assembly_yaw_range);
        assembly.base_frame = Pose::rotation(axis_angle(Vec3::UnitZ(), yaw));
        Aabb b = assembly.world_aabb();
        Vec3 shift(opt.kit_side_min_x - b.lo.x(), -b.center().y(), -b.lo.z());
        assembly.base_frame.p += shift;
        Aabb placed = assembly.world_aabb();
        if (placed.hi.x() > opt.workspace.hi.x() || placed.lo.y() < opt.workspace.lo.y() ||
            placed.hi.y() > opt.workspace.hi.y())
            fail(ErrorCode::workspace_full, "assembly does not fit on the kit side");
    }
    for (std::size_t i = 0; i < assembly.kits.size(); ++i) assembly.kits[i].object_id = static_cast<int>(i) + 1;

    struct Disk {
        double x, y, r;
    };
    std::vector<Disk> placed;
    for (std::size_t i = 0; i < objects.size(); ++i) {
        const TriMesh& m = objects[i];
        Aabb mb = m.aabb();
        double r = 0.5 * std::hypot(mb.extent().x(), mb.extent().y()) + std::hypot(mb.center().x(), mb.center().y()) +
                   opt.clearance;
        double xlo = opt.workspace.lo.x() + r, xhi = opt.object_side_max_x - r;
        double ylo = opt.workspace.lo.y() + r, yhi = opt.workspace.hi.y() - r;
        if (xlo > xhi || ylo > yhi) fail(ErrorCode::workspace_full, "object side too small");
        bool ok = false;
        Disk d{};
        for (int attempt = 0; attempt < opt.max_rejections && !ok; ++attempt) {
            d = {uniform(rng, xlo, xhi), uniform(rng, ylo, yhi), r};
            ok = std::all_of(placed.begin(), placed.end(), [&](const Disk& o) {
                return std::hypot(o.x - d.x, o.y - d.y) >= o.r + d.r;
            });
        }
        if (!ok) fail(ErrorCode::workspace_full, "could not place object after rejections");
        placed.push_back(d);
        double yaw = uniform(rng, -kPi, kPi);
        SceneObject so;
        so.id = static_cast<int>(i) + 1;
        so.mesh = m;
        so.gt_start = Pose(Vec3(d.x, d.y, -mb.lo.z()), axis_angle(Vec3::UnitZ(), yaw));
        so.gt_kit = assembly.cavity_world(i);
        s.objects.push_back(std::move(so));
    }
    s.assembly = std::move(assembly);
    return s;
}

struct Observation {
    DepthImage depth;
    InstanceMask masks;
    std::map<int, VoxelVolume> object_volumes;  // V_partial per object (TSDF)
    std::map<int, Pose> object_frames;          // twin frame of each object at observation time
    VoxelVolume kit_volume;                     // V_k_ws (TSDF)
    std::vector<std::int32_t> kit_ids;
};

inline std::vector<RenderItem> render_items(const Scene& s) {
    std::vector<RenderItem> items;
    for (const auto& o : s.objects) items.push_back({&o.mesh, o.gt_start, o.id});
    for (std::size_t i = 0; i < s.assembly.kits.size(); ++i)
        items.push_back({&s.assembly.kits[i].mesh, s.assembly.kit_world(i), kKitInstanceBase + static_cast<std::int32_t>(i)});
    return items;
}

/// Grid of the kit workspace volume: assembly bounds plus 2 cm, world lattice.
inline GridSpec kit_workspace_grid(const Scene& s, double pad = 0.02) {
    return GridSpec::covering(s.assembly.world_aabb().inflated(pad), kObsVoxel, Vec3::Zero());
}

/// 128^3 object volume centered on the visible extent of the object.
inline GridSpec object_grid_from_mask(const DepthImage& depth, const InstanceMask& mask, std::int32_t id) {
    Aabb b;
    for (int v = 0; v < depth.height; ++v)
        for (int u = 0; u < depth.width; ++u)
            if (mask.at(u, v) == id && depth.at(u, v) > 0.0f) b.extend(depth.camera.unproject(u, v, depth.at(u, v)));
    require(!b.empty(), ErrorCode::not_found, "instance " + std::to_string(id) + " not visible");
    return GridSpec::centered(b.center(), kObsVoxel, kObjectVolumeDim);
}

inline Observation observe(const Scene& s) {
    Observation obs;
    auto rendered = render_depth(render_items(s), s.camera);
    obs.depth = std::move(rendered.depth);
    obs.masks = std::move(rendered.mask);
    if (s.depth_noise > 0.0) {
        Rng rng(hash_seed(s.seed, 0xdeadbeefULL));
        std::normal_distribution<double> n(0.0, s.depth_noise);
        for (auto& d : obs.depth.data)
            if (d > 0.0f) d = static_cast<float>(std::max(1e-4, d + n(rng)));
    }
    for (const auto& o : s.objects) {
        GridSpec g = object_grid_from_mask(obs.depth, obs.masks, o.id);
        obs.object_volumes.emplace(o.id, tsdf_fuse(obs.depth, obs.masks, o.id, g));
        obs.object_frames.emplace(o.id, o.gt_start);
    }
    for (std::size_t i = 0; i < s.assembly.kits.size(); ++i)
        obs.kit_ids.push_back(kKitInstanceBase + static_cast<std::int32_t>(i));
    if (!s.assembly.kits.empty())
        obs.kit_volume = tsdf_fuse(obs.depth, obs.masks, obs.kit_ids, kit_workspace_grid(s));
    return obs;
}

/// Assembly kits as posed world meshes.
inline std::vector<std::pair<TriMesh, Pose>> kit_meshes_world(const Scene& s) {
    std::vector<std::pair<TriMesh, Pose>> out;
    for (std::size_t i = 0; i < s.assembly.kits.size(); ++i)
        out.emplace_back(s.assembly.kits[i].mesh, s.assembly.kit_world(i));
    return out;
}

}  // namespace seat
