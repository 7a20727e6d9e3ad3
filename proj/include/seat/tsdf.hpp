#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "seat/error.hpp"
#include "seat/render.hpp"
#include "seat/volume.hpp"

namespace seat {

struct TsdfParams {
    double truncation_voxels = 5.0;
};

/// Single-view truncated signed distance fusion of the masked depth image.
///
/// Per voxel: sdf = observed depth - voxel depth along the camera z axis,
/// normalized by the truncation distance and clamped to [-1, 1]. Voxels
/// that project outside the image, onto pixels of other instances, or more
/// than one truncation distance behind the surface are unseen and read +1.
inline VoxelVolume tsdf_fuse(const DepthImage& depth, const InstanceMask& mask, const std::vector<std::int32_t>& ids,
                             const GridSpec& grid, const TsdfParams& params = {}) {
    require(depth.width == mask.width && depth.height == mask.height, ErrorCode::invalid_argument,
            "depth/mask size mismatch");
    bool present = std::any_of(ids.begin(), ids.end(), [&](std::int32_t id) { return id != 0 && mask.contains(id); });
    require(present, ErrorCode::not_found, "instance not present in mask");

    const Camera& cam = depth.camera;
    const double tau = params.truncation_voxels * grid.voxel_size;
    const Pose world_to_cam = cam.pose.inverse();
    auto is_selected = [&](std::int32_t label) {
        return label != 0 && std::find(ids.begin(), ids.end(), label) != ids.end();
    };

    VoxelVolume vol(grid, VolumeKind::tsdf, 1.0f);
    for (int k = 0; k < grid.dims.z(); ++k)
        for (int j = 0; j < grid.dims.y(); ++j)
            for (int i = 0; i < grid.dims.x(); ++i) {
                Vec3 xc = world_to_cam * grid.center(i, j, k);
                double u, v;
                if (!cam.project_camera(xc, u, v)) continue;
                int px = static_cast<int>(std::floor(u)), py = static_cast<int>(std::floor(v));
                if (px < 0 || py < 0 || px >= depth.width || py >= depth.height) continue;
                if (!is_selected(mask.at(px, py))) continue;
                double d = depth.at(px, py);
                if (d <= 0.0) continue;
                double sdf = d - xc.z();
                if (sdf < -tau) continue;
                vol.at(i, j, k) = static_cast<float>(std::min(1.0, sdf / tau));
            }
    return vol;
}

inline VoxelVolume tsdf_fuse(const DepthImage& depth, const InstanceMask& mask, std::int32_t instance,
                             const GridSpec& grid, const TsdfParams& params = {}) {
    return tsdf_fuse(depth, mask, std::vector<std::int32_t>{instance}, grid, params);
}

}  // namespace seat
