#pragma once

// Shape completion providers, registered by name. Every provider maps a
// partial TSDF observation to an occupancy volume on the same grid.

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "seat/error.hpp"
#include "seat/geom.hpp"
#include "seat/mesh.hpp"
#include "seat/render.hpp"
#include "seat/volume.hpp"

namespace seat {

struct CompletionRequest {
    VoxelVolume partial;  // TSDF
    std::string mode = "extrude_ground";
    std::vector<std::pair<const TriMesh*, Pose>> gt;  // oracle only
    double ground_z = 0.0;
    // visual_hull only: the view the partial was fused from
    const DepthImage* depth = nullptr;
    const InstanceMask* mask = nullptr;
    std::vector<std::int32_t> ids;
};

using CompletionProvider = std::function<VoxelVolume(const CompletionRequest&)>;

namespace detail {

/// Observed surface voxels: TSDF at or behind the surface (tsdf <= 0).
inline VoxelVolume observed_surface(const VoxelVolume& partial) { return occupancy_from_tsdf(partial); }

inline void require_partial(const CompletionRequest& req) {
    require(req.partial.kind() == VolumeKind::tsdf, ErrorCode::invalid_argument, "partial must be a TSDF volume");
    require(!req.partial.empty() && occupancy_from_tsdf(req.partial).count_occupied() > 0, ErrorCode::empty_input,
            "partial volume has no observed surface");
}

inline VoxelVolume complete_partial(const CompletionRequest& req) {
    require_partial(req);
    return observed_surface(req.partial);
}

inline VoxelVolume complete_extrude_ground(const CompletionRequest& req) {
    require_partial(req);
    VoxelVolume occ = observed_surface(req.partial);
    const GridSpec& g = occ.grid();
    for (int j = 0; j < g.dims.y(); ++j)
        for (int i = 0; i < g.dims.x(); ++i) {
            int top = -1;
            for (int k = g.dims.z() - 1; k >= 0; --k)
                if (occ.at(i, j, k) > 0.5f) {
                    top = k;
                    break;
                }
            for (int k = top; k >= 0; --k) {
                if (g.center(i, j, k).z() < req.ground_z) break;
                occ.at(i, j, k) = 1.0f;
            }
        }
    return occ;
}

/// Voxels above the ground that the instance's rays do not prove empty:
/// the voxel projects onto a pixel of the instance and lies at or behind
/// the observed depth. Observed surface voxels are always kept.
inline VoxelVolume complete_visual_hull(const CompletionRequest& req) {
    require_partial(req);
    require(req.depth && req.mask && !req.ids.empty(), ErrorCode::invalid_argument,
            "visual_hull needs the depth view, mask and instance ids");
    VoxelVolume occ = observed_surface(req.partial);
    const GridSpec& g = occ.grid();
    const Camera& cam = req.depth->camera;
    const Pose w2c = cam.pose.inverse();
    auto selected = [&](std::int32_t l) { return std::find(req.ids.begin(), req.ids.end(), l) != req.ids.end(); };
    for (int k = 0; k < g.dims.z(); ++k)
        for (int j = 0; j < g.dims.y(); ++j)
            for (int i = 0; i < g.dims.x(); ++i) {
                Vec3 w = g.center(i, j, k);
                if (w.z() < req.ground_z) continue;
                Vec3 xc = w2c * w;
                double u, v;
                if (!cam.project_camera(xc, u, v)) continue;
                int px = static_cast<int>(std::floor(u)), py = static_cast<int>(std::floor(v));
                if (px < 0 || py < 0 || px >= req.depth->width || py >= req.depth->height) continue;
                if (!selected(req.mask->at(px, py))) continue;
                double d = req.depth->at(px, py);
                if (d > 0.0 && xc.z() >= d) occ.at(i, j, k) = 1.0f;
            }
    return occ;
}

inline VoxelVolume complete_oracle(const CompletionRequest& req) {
    require(!req.gt.empty(), ErrorCode::invalid_argument, "oracle completion requires ground-truth geometry");
    VoxelVolume out(req.partial.grid(), VolumeKind::occupancy, 0.0f);
    for (const auto& [mesh, pose] : req.gt) {
        require(mesh != nullptr, ErrorCode::invalid_argument, "null ground-truth mesh");
        VoxelVolume v = voxelize_mesh_clipped(transformed(*mesh, pose), req.partial.grid());
        for (std::size_t i = 0; i < v.size(); ++i)
            if (v[i] > 0.5f) out[i] = 1.0f;
    }
    return out;
}

}  // namespace detail

inline std::map<std::string, CompletionProvider>& completion_registry() {
    static std::map<std::string, CompletionProvider> reg = {
        {"partial", detail::complete_partial},
        {"extrude_ground", detail::complete_extrude_ground},
        {"visual_hull", detail::complete_visual_hull},
        {"oracle", detail::complete_oracle},
    };
    return reg;
}

inline void register_completion(const std::string& name, CompletionProvider p) {
    completion_registry()[name] = std::move(p);
}

inline bool has_completion(const std::string& name) { return completion_registry().count(name) > 0; }

inline VoxelVolume complete(const CompletionRequest& req) {
    auto& reg = completion_registry();
    auto it = reg.find(req.mode);
    require(it != reg.end(), ErrorCode::not_found, "unknown completion mode '" + req.mode + "'");
    VoxelVolume out = it->second(req);
    out.set_kind(VolumeKind::occupancy);
    return out;
}

}  // namespace seat
