#pragma once

// Observation -> completed twins -> snapped pose, shared by bench and service.

#include <map>
#include <optional>
#include <string>

#include "seat/completion.hpp"
#include "seat/scene.hpp"
#include "seat/snap.hpp"

namespace seat {

struct CompletedScene {
    std::map<int, VoxelVolume> objects;  // occupancy, world, at the observation poses
    VoxelVolume kit;                     // occupancy over V_k_ws
    std::string object_mode;
    std::string kit_mode;
};

inline VoxelVolume complete_object(const Scene& s, const Observation& obs, int id, const std::string& mode) {
    const SceneObject& o = s.object(id);
    auto it = obs.object_volumes.find(id);
    require(it != obs.object_volumes.end(), ErrorCode::not_found, "no observed volume for object " + std::to_string(id));
    CompletionRequest req;
    req.partial = it->second;
    req.mode = mode;
    req.gt = {{&o.mesh, obs.object_frames.at(id)}};
    req.depth = &obs.depth;
    req.mask = &obs.masks;
    req.ids = {id};
    return complete(req);
}

inline VoxelVolume complete_kit(const Scene& s, const Observation& obs, const std::string& mode) {
    require(!s.assembly.kits.empty(), ErrorCode::empty_input, "scene has no kits");
    CompletionRequest req;
    req.partial = obs.kit_volume;
    req.mode = mode;
    for (std::size_t i = 0; i < s.assembly.kits.size(); ++i)
        req.gt.emplace_back(&s.assembly.kits[i].mesh, s.assembly.kit_world(i));
    req.depth = &obs.depth;
    req.mask = &obs.masks;
    req.ids = obs.kit_ids;
    return complete(req);
}

inline CompletedScene complete_scene(const Scene& s, const Observation& obs, const std::string& object_mode,
                                     const std::string& kit_mode) {
    CompletedScene c;
    c.object_mode = object_mode;
    c.kit_mode = kit_mode;
    for (const auto& o : s.objects) c.objects.emplace(o.id, complete_object(s, obs, o.id, object_mode));
    if (!s.assembly.kits.empty()) c.kit = complete_kit(s, obs, kit_mode);
    return c;
}

inline SnapResult snap_object(const Observation& obs, const CompletedScene& c, int object_id,
                              const std::optional<Pose>& hint, const SnapConfig& cfg) {
    auto it = c.objects.find(object_id);
    require(it != c.objects.end(), ErrorCode::not_found, "unknown object id " + std::to_string(object_id));
    return snap_pose(it->second, obs.object_frames.at(object_id), c.kit, hint, cfg);
}

}  // namespace seat
