#pragma once

// Pick, hover, insert: top-down suction grasps from a heightmap, the
// waypoint plan, a swept straight-line insertion check and a kinematic
// executor for simulated scenes.

#include <algorithm>
#include <cmath>
#include <optional>
#include <queue>
#include <string>
#include <vector>

#include "seat/error.hpp"
#include "seat/geom.hpp"
#include "seat/scene.hpp"
#include "seat/snap.hpp"
#include "seat/volume.hpp"

namespace seat {

inline constexpr double kHoverOffset = 0.1;

struct GraspParams {
    double cup_diameter = 0.01;
    double normal_tolerance = deg2rad(10.0);
};

/// Tool frame: +z along the approach direction (pointing down for top-down grasps).
inline Quat topdown_orientation(double yaw = 0.0) {
    return canonical(axis_angle(Vec3::UnitZ(), yaw) * axis_angle(Vec3::UnitX(), kPi));
}

/// Suction grasp at the centroid of the largest flat top-surface patch of a
/// world-aligned object occupancy. A patch is a 4-connected set of heightmap
/// columns whose tops lie within max(voxel, cup_radius * tan(tol)) of the
/// patch level; it must contain a disc of the cup's diameter.
inline Pose grasp_pose_topdown(const VoxelVolume& completed, const Pose& start_pose, const GraspParams& gp = {}) {
    require(completed.count_occupied() > 0, ErrorCode::empty_input, "empty object volume");
    const GridSpec& g = completed.grid();
    const int nx = g.dims.x(), ny = g.dims.y();
    const double vs = g.voxel_size;
    std::vector<int> top(static_cast<std::size_t>(nx) * ny, -1);
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i)
            for (int k = g.dims.z() - 1; k >= 0; --k)
                if (completed.at(i, j, k) > 0.5f) {
                    top[static_cast<std::size_t>(i) + static_cast<std::size_t>(nx) * j] = k;
                    break;
                }
    const double band = std::max(vs, 0.5 * gp.cup_diameter * std::tan(gp.normal_tolerance));
    const int b = std::max(0, static_cast<int>(std::floor(band / vs + 1e-9)));
    const double need = 0.5 * gp.cup_diameter / vs;  // inscribed radius in voxels

    std::vector<int> levels(top.begin(), top.end());
    std::sort(levels.begin(), levels.end(), std::greater<>());
    levels.erase(std::unique(levels.begin(), levels.end()), levels.end());

    struct Patch {
        std::size_t area = 0;
        int level = -1;
        Eigen::Vector2d centroid;
    };
    std::optional<Patch> best;
    std::vector<int> comp(top.size());
    for (int level : levels) {
        if (level < 0) break;
        std::vector<std::uint8_t> in(top.size(), 0);
        for (std::size_t c = 0; c < top.size(); ++c) in[c] = top[c] >= 0 && top[c] <= level && top[c] >= level - b;
        // inscribed radius: distance from each member to the nearest non-member column
        std::vector<std::uint8_t> outside(top.size());
        for (std::size_t c = 0; c < top.size(); ++c) outside[c] = !in[c];
        // pad by one column so the grid border counts as outside
        GridSpec pg;
        pg.dims = Vec3i(nx + 2, ny + 2, 1);
        std::vector<std::uint8_t> padded(static_cast<std::size_t>(nx + 2) * (ny + 2), 1);
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i)
                padded[static_cast<std::size_t>(i + 1) + static_cast<std::size_t>(nx + 2) * (j + 1)] =
                    outside[static_cast<std::size_t>(i) + static_cast<std::size_t>(nx) * j];
        auto d2 = edt_squared(padded, pg.dims);

        std::fill(comp.begin(), comp.end(), -1);
        int ncomp = 0;
        for (std::size_t seed = 0; seed < top.size(); ++seed) {
            if (!in[seed] || comp[seed] >= 0) continue;
            std::vector<std::size_t> members;
            std::queue<std::size_t> q;
            q.push(seed);
            comp[seed] = ncomp;
            double max_r2 = 0.0;
            while (!q.empty()) {
                std::size_t c = q.front();
                q.pop();
                members.push_back(c);
                int i = static_cast<int>(c % static_cast<std::size_t>(nx)), j = static_cast<int>(c / static_cast<std::size_t>(nx));
                max_r2 = std::max(max_r2, d2[static_cast<std::size_t>(i + 1) + static_cast<std::size_t>(nx + 2) * (j + 1)]);
                const int di[4] = {1, -1, 0, 0}, dj[4] = {0, 0, 1, -1};
                for (int n = 0; n < 4; ++n) {
                    int a = i + di[n], bb = j + dj[n];
                    if (a < 0 || bb < 0 || a >= nx || bb >= ny) continue;
                    std::size_t nc = static_cast<std::size_t>(a) + static_cast<std::size_t>(nx) * bb;
                    if (in[nc] && comp[nc] < 0) {
                        comp[nc] = ncomp;
                        q.push(nc);
                    }
                }
            }
            ++ncomp;
            // distance to the nearest outside column center minus half a column
            if (std::sqrt(max_r2) - 0.5 + 1e-9 < need) continue;
            if (best && members.size() <= best->area) continue;
            Eigen::Vector2d acc = Eigen::Vector2d::Zero();
            for (std::size_t c : members) {
                Vec3 w = g.center(static_cast<int>(c % static_cast<std::size_t>(nx)), static_cast<int>(c / static_cast<std::size_t>(nx)), 0);
                acc += Eigen::Vector2d(w.x(), w.y());
            }
            best = Patch{members.size(), level, acc / static_cast<double>(members.size())};
        }
    }
    if (!best) fail(ErrorCode::not_graspable, "no flat top patch fits the suction cup");
    double z = g.origin.z() + (best->level + 1) * vs;
    Vec3 ax = start_pose.rotate(Vec3::UnitX());
    double yaw = std::atan2(ax.y(), ax.x());
    return {Vec3(best->centroid.x(), best->centroid.y(), z), topdown_orientation(yaw)};
}

enum class SegmentFrame { tool, object };

inline const char* to_string(SegmentFrame f) { return f == SegmentFrame::tool ? "tool" : "object"; }

struct Segment {
    Pose from;
    Pose to;
    SegmentFrame frame = SegmentFrame::tool;
    std::string name;
};

struct ActionPlan {
    int object_id = 0;
    Pose grasp;  // tool, world
    Pose hover;  // object, world
    Pose place;  // object, world (T_snap)
    std::vector<Segment> segments;
    bool feasible = false;
    std::string reason;
};

inline Pose hover_pose(const Pose& place) { return place * Pose::translation(Vec3(0.0, 0.0, kHoverOffset)); }

inline Pose home_pose() { return {Vec3(0.0, 0.0, 0.4), topdown_orientation()}; }

/// Waypoints: home -> above grasp -> grasp -> above grasp (tool frame), then
/// lifted object -> hover -> place (object frame). The object reaches its
/// final orientation at hover, so the insertion is a pure translation.
inline ActionPlan make_plan(const Pose& grasp, const Pose& place, const Pose& object_start, int object_id = 0) {
    ActionPlan plan;
    plan.object_id = object_id;
    plan.grasp = grasp;
    plan.place = place;
    plan.hover = hover_pose(place);
    const Vec3 up(0.0, 0.0, kHoverOffset);
    Pose above{grasp.p + up, grasp.q};
    Pose lifted{object_start.p + up, object_start.q};
    plan.segments = {
        {home_pose(), above, SegmentFrame::tool, "approach"},
        {above, grasp, SegmentFrame::tool, "descend"},
        {grasp, above, SegmentFrame::tool, "lift"},
        {lifted, plan.hover, SegmentFrame::object, "transit"},
        {plan.hover, place, SegmentFrame::object, "insert"},
    };
    return plan;
}

inline ActionPlan make_plan(const Pose& grasp, const Pose& place) { return make_plan(grasp, place, grasp); }

/// Poses from a to b with at most `step` of travel between consecutive poses (endpoints included).
inline std::vector<Pose> sweep_poses(const Pose& a, const Pose& b, double step) {
    require(step > 0.0, ErrorCode::invalid_argument, "step must be > 0");
    double len = (b.p - a.p).norm();
    int n = std::max(1, static_cast<int>(std::ceil(len / step - 1e-12)));
    std::vector<Pose> out;
    out.reserve(static_cast<std::size_t>(n) + 1);
    for (int i = 0; i <= n; ++i) out.push_back(interpolate(a, b, static_cast<double>(i) / n));
    return out;
}

/// Occupied cell whose 6 neighbors are occupied too.
inline bool interior_cell(const VoxelVolume& v, const Vec3i& c) {
    static const int d[6][3] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
    if (!v.occupied(c)) return false;
    for (const auto& o : d)
        if (!v.occupied(Vec3i(c.x() + o[0], c.y() + o[1], c.z() + o[2]))) return false;
    return true;
}

/// Number of occupied kit cells whose center lies inside the object placed
/// at `pose`. `object` is an occupancy volume expressed at `object_frame`.
/// With `contact_tolerance` only interior object cells count, so flush
/// contacts at the voxel scale are not reported.
inline std::size_t overlap_at(const VoxelVolume& object, const Pose& object_frame, const VoxelVolume& kit,
                              const Pose& pose, bool contact_tolerance = true) {
    if (kit.empty() || object.empty()) return 0;
    Aabb ob = object.occupied_aabb();
    if (ob.empty()) return 0;
    const Pose model_from_frame = object_frame.inverse();
    const Pose to_world = pose * model_from_frame;
    Aabb wb;
    for (int c = 0; c < 8; ++c)
        wb.extend(to_world * Vec3((c & 1) ? ob.hi.x() : ob.lo.x(), (c & 2) ? ob.hi.y() : ob.lo.y(), (c & 4) ? ob.hi.z() : ob.lo.z()));
    const GridSpec& kg = kit.grid();
    Vec3i lo = kg.cell_of(wb.lo).cwiseMax(Vec3i::Zero());
    Vec3i hi = kg.cell_of(wb.hi).cwiseMin(kg.dims - Vec3i::Ones());
    const Pose back = to_world.inverse();  // world -> object volume coordinates
    std::size_t n = 0;
    for (int k = lo.z(); k <= hi.z(); ++k)
        for (int j = lo.y(); j <= hi.y(); ++j)
            for (int i = lo.x(); i <= hi.x(); ++i) {
                if (kit.at(i, j, k) <= 0.5f) continue;
                Vec3i c = object.grid().cell_of(back * kg.center(i, j, k));
                if (contact_tolerance ? interior_cell(object, c) : object.occupied(c)) ++n;
            }
    return n;
}

/// True iff the object never overlaps kit solid along hover -> place.
inline bool check_straight_insertion(const VoxelVolume& object, const Pose& object_frame, const VoxelVolume& kit,
                                     const ActionPlan& plan, double step = 0.001) {
    if (kit.empty() || kit.count_occupied() == 0) return true;
    for (const Pose& p : sweep_poses(plan.hover, plan.place, step))
        if (overlap_at(object, object_frame, kit, p) > 0) return false;
    return true;
}

/// Ground truth the simulator checks plans against.
struct SimWorld {
    std::map<int, VoxelVolume> objects;  // true occupancy at the object's current pose
    std::map<int, Pose> frames;
    VoxelVolume kit;                     // true kit occupancy, world
};

inline SimWorld make_sim_world(const Scene& s, double voxel_size = kObsVoxel) {
    SimWorld w;
    for (const auto& o : s.objects) {
        TriMesh m = transformed(o.mesh, o.gt_start);
        GridSpec g = GridSpec::covering(m.aabb().inflated(2 * voxel_size), voxel_size, Vec3::Zero());
        w.objects.emplace(o.id, voxelize_mesh(m, g));
        w.frames.emplace(o.id, o.gt_start);
    }
    if (!s.assembly.kits.empty()) {
        GridSpec g = kit_workspace_grid(s);
        w.kit = VoxelVolume(g, VolumeKind::occupancy, 0.0f);
        for (std::size_t i = 0; i < s.assembly.kits.size(); ++i) {
            VoxelVolume v = voxelize_mesh_clipped(transformed(s.assembly.kits[i].mesh, s.assembly.kit_world(i)), g);
            for (std::size_t c = 0; c < v.size(); ++c)
                if (v[c] > 0.5f) w.kit[c] = 1.0f;
        }
    }
    return w;
}

struct ExecutionResult {
    Scene scene;
    bool success = false;
    std::string reason;
};

/// Kinematic execution: the object jumps to plan.place when the grasp is set
/// and the straight insertion is collision free; otherwise the scene is unchanged.
inline ExecutionResult execute_plan_sim(const Scene& scene, const ActionPlan& plan, const SimWorld& world) {
    scene.object(plan.object_id);  // throws not_found
    ExecutionResult r{scene, false, ""};
    if (plan.segments.empty()) {
        r.reason = "not-graspable";
        return r;
    }
    const auto& occ = world.objects.at(plan.object_id);
    if (!check_straight_insertion(occ, world.frames.at(plan.object_id), world.kit, plan)) {
        r.reason = "collision-on-insert";
        return r;
    }
    r.scene.object(plan.object_id).gt_start = plan.place;
    r.success = true;
    r.reason = "ok";
    return r;
}

inline ExecutionResult execute_plan_sim(const Scene& scene, const ActionPlan& plan) {
    return execute_plan_sim(scene, plan, make_sim_world(scene));
}

}  // namespace seat
