#pragma once

// JSON encodings and on-disk layout of assemblies, scenes and observations.
//
// Pose wire format: {"p": [x, y, z], "q": [x, y, z, w]} (meters, w last).

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "seat/error.hpp"
#include "seat/geom.hpp"
#include "seat/kitgen.hpp"
#include "seat/mesh.hpp"
#include "seat/plan.hpp"
#include "seat/render.hpp"
#include "seat/scene.hpp"
#include "seat/snap.hpp"
#include "seat/volume.hpp"

namespace seat {

using json = nlohmann::json;
namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Values

inline json vec_to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

inline Vec3 vec_from_json(const json& j) {
    require(j.is_array() && j.size() == 3, ErrorCode::invalid_argument, "expected a 3-vector");
    Vec3 v;
    for (int i = 0; i < 3; ++i) {
        require(j[static_cast<std::size_t>(i)].is_number(), ErrorCode::invalid_argument, "vector entries must be numbers");
        v[i] = j[static_cast<std::size_t>(i)].get<double>();
        require(std::isfinite(v[i]), ErrorCode::invalid_argument, "vector entries must be finite");
    }
    return v;
}

inline json quat_to_json(const Quat& q) { return json::array({q.x(), q.y(), q.z(), q.w()}); }

inline Quat quat_from_json(const json& j) {
    require(j.is_array() && j.size() == 4, ErrorCode::invalid_argument, "expected a quaternion [x, y, z, w]");
    double c[4];
    for (int i = 0; i < 4; ++i) {
        require(j[static_cast<std::size_t>(i)].is_number(), ErrorCode::invalid_argument, "quaternion entries must be numbers");
        c[i] = j[static_cast<std::size_t>(i)].get<double>();
        require(std::isfinite(c[i]), ErrorCode::invalid_argument, "quaternion entries must be finite");
    }
    double n = std::sqrt(c[0] * c[0] + c[1] * c[1] + c[2] * c[2] + c[3] * c[3]);
    require(n > 1e-12, ErrorCode::invalid_argument, "zero quaternion");
    return quat_xyzw(c[0], c[1], c[2], c[3]);
}

inline json pose_to_json(const Pose& p) { return {{"p", vec_to_json(p.p)}, {"q", quat_to_json(p.q)}}; }

inline Pose pose_from_json(const json& j) {
    require(j.is_object() && j.contains("p") && j.contains("q"), ErrorCode::invalid_argument, "pose needs p and q");
    return {vec_from_json(j.at("p")), quat_from_json(j.at("q"))};
}

inline json camera_to_json(const Camera& c) {
    return {{"mode", c.mode == CameraMode::pinhole ? "pinhole" : "ortho"},
            {"width", c.width},
            {"height", c.height},
            {"fx", c.fx},
            {"fy", c.fy},
            {"cx", c.cx},
            {"cy", c.cy},
            {"pitch", c.pitch},
            {"pose", pose_to_json(c.pose)}};
}

inline Camera camera_from_json(const json& j) {
    Camera c;
    std::string mode = j.at("mode").get<std::string>();
    require(mode == "pinhole" || mode == "ortho", ErrorCode::invalid_argument, "camera mode must be pinhole or ortho");
    c.mode = mode == "pinhole" ? CameraMode::pinhole : CameraMode::ortho;
    c.width = j.at("width").get<int>();
    c.height = j.at("height").get<int>();
    c.fx = j.value("fx", 0.0);
    c.fy = j.value("fy", 0.0);
    c.cx = j.value("cx", 0.0);
    c.cy = j.value("cy", 0.0);
    c.pitch = j.value("pitch", 0.001);
    c.pose = pose_from_json(j.at("pose"));
    c.validate();
    return c;
}

inline json aabb_to_json(const Aabb& b) { return {{"min", vec_to_json(b.lo)}, {"max", vec_to_json(b.hi)}}; }
inline Aabb aabb_from_json(const json& j) { return {vec_from_json(j.at("min")), vec_from_json(j.at("max"))}; }

inline json snap_config_to_json(const SnapConfig& c) {
    return {{"delta_position", c.delta_position},
            {"delta_orientation", c.delta_orientation},
            {"n_rotations", c.n_rotations},
            {"uninformed", c.uninformed},
            {"roll_pitch_range", c.roll_pitch_range},
            {"yaw_range", c.yaw_range},
            {"scorer", c.scorer},
            {"encoder", c.encoder},
            {"rotation_sampling", c.rotation_sampling},
            {"n_object_points", c.n_object_points},
            {"n_kit_points", c.n_kit_points},
            {"rotation_crop_voxels", c.rotation_crop_voxels},
            {"contact_band", c.contact_band},
            {"kernel_band", c.kernel_band},
            {"refine_position", c.refine_position},
            {"local_rotation_fraction", c.local_rotation_fraction},
            {"local_rotation_radius", c.local_rotation_radius},
            {"seed", c.seed}};
}

/// Overlays the keys present in `j` onto `c`.
inline SnapConfig snap_config_from_json(const json& j, SnapConfig c = {}) {
    require(j.is_object(), ErrorCode::invalid_argument, "snap config must be an object");
    c.delta_position = j.value("delta_position", c.delta_position);
    c.delta_orientation = j.value("delta_orientation", c.delta_orientation);
    c.n_rotations = j.value("n_rotations", c.n_rotations);
    c.uninformed = j.value("uninformed", c.uninformed);
    c.roll_pitch_range = j.value("roll_pitch_range", c.roll_pitch_range);
    c.yaw_range = j.value("yaw_range", c.yaw_range);
    c.scorer = j.value("scorer", c.scorer);
    c.encoder = j.value("encoder", c.encoder);
    c.rotation_sampling = j.value("rotation_sampling", c.rotation_sampling);
    c.n_object_points = j.value("n_object_points", c.n_object_points);
    c.n_kit_points = j.value("n_kit_points", c.n_kit_points);
    c.rotation_crop_voxels = j.value("rotation_crop_voxels", c.rotation_crop_voxels);
    c.contact_band = j.value("contact_band", c.contact_band);
    c.kernel_band = j.value("kernel_band", c.kernel_band);
    c.refine_position = j.value("refine_position", c.refine_position);
    c.local_rotation_fraction = j.value("local_rotation_fraction", c.local_rotation_fraction);
    c.local_rotation_radius = j.value("local_rotation_radius", c.local_rotation_radius);
    c.seed = j.value("seed", c.seed);
    c.validate();
    return c;
}

inline json snap_result_to_json(const SnapResult& r) {
    return {{"pose", pose_to_json(r.pose)},
            {"position_score", r.position_score},
            {"n_candidates",
             {{"n_positions", r.candidates_evaluated.n_positions},
              {"n_refine_positions", r.candidates_evaluated.n_refine_positions},
              {"n_rotations", r.candidates_evaluated.n_rotations}}},
            {"timing_ms", r.timing_ms}};
}

inline json plan_to_json(const ActionPlan& p) {
    json segs = json::array();
    for (const auto& s : p.segments)
        segs.push_back({{"name", s.name}, {"frame", to_string(s.frame)}, {"from", pose_to_json(s.from)}, {"to", pose_to_json(s.to)}});
    return {{"object_id", p.object_id},
            {"grasp", pose_to_json(p.grasp)},
            {"hover", pose_to_json(p.hover)},
            {"place", pose_to_json(p.place)},
            {"segments", segs},
            {"feasible", p.feasible},
            {"reason", p.reason}};
}

// ---------------------------------------------------------------------------
// Files

inline std::string read_text(const fs::path& p) {
    std::ifstream is(p);
    if (!is) fail(ErrorCode::io_error, "cannot open " + p.string());
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

inline void write_text(const fs::path& p, const std::string& s) {
    std::ofstream os(p, std::ios::binary);
    if (!os) fail(ErrorCode::io_error, "cannot write " + p.string());
    os << s;
}

inline json load_json(const fs::path& p) {
    try {
        return json::parse(read_text(p));
    } catch (const json::exception& e) {
        fail(ErrorCode::io_error, "bad JSON in " + p.string() + ": " + e.what());
    }
}

inline void save_json(const fs::path& p, const json& j) { write_text(p, j.dump(2) + "\n"); }

inline fs::path camera_sidecar(const fs::path& depth_path) {
    fs::path s = depth_path;
    s.replace_extension(".cam.json");
    return s;
}

/// Depth file plus its camera sidecar "<name>.cam.json".
inline void save_depth_with_camera(const fs::path& path, const DepthImage& d) {
    save_depth(path.string(), d);
    save_json(camera_sidecar(path), camera_to_json(d.camera));
}

inline DepthImage load_depth_with_camera(const fs::path& path) {
    DepthImage d = load_depth(path.string());
    d.camera = camera_from_json(load_json(camera_sidecar(path)));
    return d;
}

// "SEATMSK1" | u32 w | u32 h | i32 labels[w*h] row-major.
inline void save_mask(const fs::path& path, const InstanceMask& m) {
    std::ofstream os(path, std::ios::binary);
    if (!os) fail(ErrorCode::io_error, "cannot open " + path.string());
    os.write("SEATMSK1", 8);
    detail::put<std::uint32_t>(os, static_cast<std::uint32_t>(m.width));
    detail::put<std::uint32_t>(os, static_cast<std::uint32_t>(m.height));
    os.write(reinterpret_cast<const char*>(m.labels.data()), static_cast<std::streamsize>(m.labels.size() * sizeof(std::int32_t)));
}

inline InstanceMask load_mask(const fs::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) fail(ErrorCode::io_error, "cannot open " + path.string());
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, "SEATMSK1", 8) != 0) fail(ErrorCode::io_error, "not a SEATMSK1 file");
    InstanceMask m;
    m.width = static_cast<int>(detail::get<std::uint32_t>(is));
    m.height = static_cast<int>(detail::get<std::uint32_t>(is));
    m.labels.resize(static_cast<std::size_t>(m.width) * static_cast<std::size_t>(m.height));
    is.read(reinterpret_cast<char*>(m.labels.data()), static_cast<std::streamsize>(m.labels.size() * sizeof(std::int32_t)));
    if (!is) fail(ErrorCode::io_error, "truncated mask payload");
    return m;
}

// ---------------------------------------------------------------------------
// Assemblies: assembly.json + kit_<i>.obj + object_<i>.obj

inline void save_assembly(const fs::path& dir, const KitAssembly& a, const std::vector<TriMesh>& objects,
                          double margin) {
    fs::create_directories(dir);
    json kits = json::array();
    for (std::size_t i = 0; i < a.kits.size(); ++i) {
        std::string kit_name = "kit_" + std::to_string(i) + ".obj";
        save_obj((dir / kit_name).string(), a.kits[i].mesh);
        json k = {{"mesh", kit_name},
                  {"kit_pose", pose_to_json(a.kits[i].kit_pose)},
                  {"cavity_pose", pose_to_json(a.kits[i].cavity_pose)},
                  {"object_id", a.kits[i].object_id}};
        if (i < objects.size()) {
            std::string obj_name = "object_" + std::to_string(i) + ".obj";
            save_obj((dir / obj_name).string(), objects[i]);
            k["object_mesh"] = obj_name;
        }
        kits.push_back(k);
    }
    save_json(dir / "assembly.json",
              {{"kits", kits}, {"bracket_angles", a.bracket_angles}, {"base_frame", pose_to_json(a.base_frame)}, {"margin", margin}});
}

struct LoadedAssembly {
    KitAssembly assembly;
    std::vector<TriMesh> objects;
    double margin = 0.0;
};

inline LoadedAssembly load_assembly(const fs::path& dir) {
    json j = load_json(dir / "assembly.json");
    LoadedAssembly out;
    out.margin = j.value("margin", 0.0);
    for (const auto& k : j.at("kits")) {
        KitEntry e;
        e.mesh = load_obj((dir / k.at("mesh").get<std::string>()).string());
        e.kit_pose = pose_from_json(k.at("kit_pose"));
        e.cavity_pose = pose_from_json(k.at("cavity_pose"));
        e.object_id = k.value("object_id", 0);
        out.assembly.kits.push_back(std::move(e));
        if (k.contains("object_mesh")) out.objects.push_back(load_obj((dir / k.at("object_mesh").get<std::string>()).string()));
    }
    out.assembly.bracket_angles = j.value("bracket_angles", std::vector<double>{});
    out.assembly.base_frame = pose_from_json(j.at("base_frame"));
    return out;
}

// ---------------------------------------------------------------------------
// Scenes: scene.json next to an assembly directory's meshes

inline json scene_to_json(const Scene& s) {
    json objs = json::array();
    for (std::size_t i = 0; i < s.objects.size(); ++i) {
        const auto& o = s.objects[i];
        objs.push_back({{"id", o.id},
                        {"mesh", "object_" + std::to_string(i) + ".obj"},
                        {"gt_start", pose_to_json(o.gt_start)},
                        {"gt_kit", pose_to_json(o.gt_kit)}});
    }
    return {{"objects", objs},
            {"assembly_base_frame", pose_to_json(s.assembly.base_frame)},
            {"camera", camera_to_json(s.camera)},
            {"workspace", aabb_to_json(s.workspace)},
            {"depth_noise", s.depth_noise},
            {"seed", s.seed}};
}

/// Writes assembly.json, meshes and scene.json into `dir`.
inline void save_scene(const fs::path& dir, const Scene& s, double margin) {
    std::vector<TriMesh> objects;
    for (const auto& o : s.objects) objects.push_back(o.mesh);
    save_assembly(dir, s.assembly, objects, margin);
    save_json(dir / "scene.json", scene_to_json(s));
}

inline Scene load_scene(const fs::path& dir) {
    LoadedAssembly la = load_assembly(dir);
    json j = load_json(dir / "scene.json");
    Scene s;
    s.assembly = std::move(la.assembly);
    s.assembly.base_frame = pose_from_json(j.at("assembly_base_frame"));
    s.camera = camera_from_json(j.at("camera"));
    s.workspace = aabb_from_json(j.at("workspace"));
    s.depth_noise = j.value("depth_noise", 0.0);
    s.seed = j.value("seed", std::uint64_t{0});
    for (const auto& o : j.at("objects")) {
        SceneObject so;
        so.id = o.at("id").get<int>();
        so.mesh = load_obj((dir / o.at("mesh").get<std::string>()).string());
        so.gt_start = pose_from_json(o.at("gt_start"));
        so.gt_kit = pose_from_json(o.at("gt_kit"));
        s.objects.push_back(std::move(so));
    }
    return s;
}

/// Depth, mask and fused volumes of an observation.
inline void save_observation(const fs::path& dir, const Observation& obs) {
    fs::create_directories(dir);
    save_depth_with_camera(dir / "depth.seatdpt", obs.depth);
    save_mask(dir / "mask.seatmsk", obs.masks);
    for (const auto& [id, v] : obs.object_volumes) save_volume((dir / ("object_" + std::to_string(id) + ".seatvol")).string(), v);
    if (!obs.kit_volume.empty()) save_volume((dir / "kit.seatvol").string(), obs.kit_volume);
}

}  // namespace seat
