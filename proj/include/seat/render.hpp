#pragma once

// Software depth rendering with per-pixel instance ids.
//
// Camera frame convention: +z looks into the scene, +x right, +y down.
// Pixel (u, v) samples the ray through its center (u + 0.5, v + 0.5).
// Stored depth is the camera-frame z of the nearest surface; 0 = no return.

#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "seat/error.hpp"
#include "seat/geom.hpp"
#include "seat/mesh.hpp"

namespace seat {

enum class CameraMode { ortho, pinhole };

struct Camera {
    CameraMode mode = CameraMode::pinhole;
    int width = 0;
    int height = 0;
    double fx = 0, fy = 0, cx = 0, cy = 0;  // pinhole intrinsics (px)
    double pitch = 0.001;                   // ortho pixel pitch (m/px)
    Pose pose;                              // camera-to-world

    void validate() const {
        require(width > 0 && height > 0, ErrorCode::invalid_argument, "camera resolution must be positive");
        if (mode == CameraMode::pinhole)
            require(fx > 0 && fy > 0, ErrorCode::invalid_argument, "pinhole focal lengths must be positive");
        else
            require(pitch > 0, ErrorCode::invalid_argument, "ortho pixel pitch must be positive");
    }

    /// Continuous pixel coordinates and camera-frame depth of a camera-frame point.
    bool project_camera(const Vec3& xc, double& u, double& v) const {
        if (mode == CameraMode::pinhole) {
            if (xc.z() <= 1e-9) return false;
            u = fx * xc.x() / xc.z() + cx;
            v = fy * xc.y() / xc.z() + cy;
        } else {
            u = xc.x() / pitch + 0.5 * width;
            v = xc.y() / pitch + 0.5 * height;
        }
        return true;
    }

    /// Pixel containing the projection of world point x; false if off-image.
    bool pixel_of(const Vec3& xw, int& px, int& py, double& depth) const {
        Vec3 xc = pose.inverse() * xw;
        double u, v;
        if (!project_camera(xc, u, v)) return false;
        px = static_cast<int>(std::floor(u));
        py = static_cast<int>(std::floor(v));
        depth = xc.z();
        return px >= 0 && py >= 0 && px < width && py < height;
    }

    /// World-space point at pixel center (u, v) with depth d.
    Vec3 unproject(int u, int v, double d) const {
        Vec3 xc;
        if (mode == CameraMode::pinhole)
            xc = Vec3((u + 0.5 - cx) / fx * d, (v + 0.5 - cy) / fy * d, d);
        else
            xc = Vec3((u + 0.5 - 0.5 * width) * pitch, (v + 0.5 - 0.5 * height) * pitch, d);
        return pose * xc;
    }

    /// Camera at `eye` looking at `target`, image "up" as close to `up` as possible.
    static Pose look_at(const Vec3& eye, const Vec3& target, const Vec3& up = Vec3::UnitZ()) {
        Vec3 z = (target - eye).normalized();
        Vec3 x = z.cross(up);
        if (x.norm() < 1e-9) x = z.cross(Vec3::UnitY());
        x.normalize();
        Vec3 y = z.cross(x);
        Mat3 r;
        r.col(0) = x;
        r.col(1) = y;
        r.col(2) = z;
        return {eye, Quat(r)};
    }
};

struct DepthImage {
    int width = 0;
    int height = 0;
    std::vector<float> data;
    Camera camera;

    float at(int u, int v) const { return data[static_cast<std::size_t>(v) * static_cast<std::size_t>(width) + static_cast<std::size_t>(u)]; }
    float& at(int u, int v) { return data[static_cast<std::size_t>(v) * static_cast<std::size_t>(width) + static_cast<std::size_t>(u)]; }
};

struct InstanceMask {
    int width = 0;
    int height = 0;
    std::vector<std::int32_t> labels;

    std::int32_t at(int u, int v) const { return labels[static_cast<std::size_t>(v) * static_cast<std::size_t>(width) + static_cast<std::size_t>(u)]; }
    std::int32_t& at(int u, int v) { return labels[static_cast<std::size_t>(v) * static_cast<std::size_t>(width) + static_cast<std::size_t>(u)]; }
    bool contains(std::int32_t id) const { return std::find(labels.begin(), labels.end(), id) != labels.end(); }
};

struct RenderItem {
    const TriMesh* mesh = nullptr;
    Pose pose;
    std::int32_t id = 0;
};

struct RenderResult {
    DepthImage depth;
    InstanceMask mask;
};

/// Nearest-surface depth and instance id per pixel.
inline RenderResult render_depth(const std::vector<RenderItem>& items, const Camera& cam) {
    cam.validate();
    const int w = cam.width, h = cam.height;
    std::vector<double> zbuf(static_cast<std::size_t>(w) * static_cast<std::size_t>(h),
                             std::numeric_limits<double>::infinity());
    RenderResult out;
    out.depth.width = out.mask.width = w;
    out.depth.height = out.mask.height = h;
    out.depth.camera = cam;
    out.depth.data.assign(zbuf.size(), 0.0f);
    out.mask.labels.assign(zbuf.size(), 0);
    const Pose world_to_cam = cam.pose.inverse();
    const bool pinhole = cam.mode == CameraMode::pinhole;

    for (const auto& item : items) {
        if (item.mesh == nullptr) continue;
        const Pose to_cam = world_to_cam * item.pose;
        std::vector<Vec3> vc(item.mesh->vertices.size());
        std::vector<raster::P2> uv(vc.size());
        std::vector<std::uint8_t> ok(vc.size(), 0);
        for (std::size_t i = 0; i < vc.size(); ++i) {
            vc[i] = to_cam * item.mesh->vertices[i];
            double u = 0, v = 0;
            ok[i] = cam.project_camera(vc[i], u, v) && (!pinhole || vc[i].z() > 1e-4);
            uv[i] = {u, v};
        }
        for (const auto& t : item.mesh->triangles) {
            auto a = static_cast<std::size_t>(t[0]), b = static_cast<std::size_t>(t[1]),
                 c = static_cast<std::size_t>(t[2]);
            if (!ok[a] || !ok[b] || !ok[c]) continue;
            double za = vc[a].z(), zb = vc[b].z(), zc = vc[c].z();
            raster::scan_triangle(uv[a], uv[b], uv[c], 0.0, 0.0, 1.0, w, h,
                                  [&](int i, int j, double w0, double w1, double w2) {
                                      double z = pinhole ? 1.0 / (w0 / za + w1 / zb + w2 / zc)
                                                         : w0 * za + w1 * zb + w2 * zc;
                                      if (z <= 0.0) return;
                                      std::size_t idx = static_cast<std::size_t>(j) * static_cast<std::size_t>(w) +
                                                        static_cast<std::size_t>(i);
                                      if (z < zbuf[idx]) {
                                          zbuf[idx] = z;
                                          out.depth.data[idx] = static_cast<float>(z);
                                          out.mask.labels[idx] = item.id;
                                      }
                                  });
        }
    }
    return out;
}

// "SEATDPT1" | u32 w | u32 h | f32 depth[w*h] row-major (meters).
inline void save_depth(const std::string& path, const DepthImage& d) {
    std::ofstream os(path, std::ios::binary);
    if (!os) fail(ErrorCode::io_error, "cannot open " + path);
    os.write("SEATDPT1", 8);
    detail::put<std::uint32_t>(os, static_cast<std::uint32_t>(d.width));
    detail::put<std::uint32_t>(os, static_cast<std::uint32_t>(d.height));
    os.write(reinterpret_cast<const char*>(d.data.data()), static_cast<std::streamsize>(d.data.size() * sizeof(float)));
}

inline DepthImage load_depth(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) fail(ErrorCode::io_error, "cannot open " + path);
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, "SEATDPT1", 8) != 0) fail(ErrorCode::io_error, "not a SEATDPT1 file");
    DepthImage d;
    d.width = static_cast<int>(detail::get<std::uint32_t>(is));
    d.height = static_cast<int>(detail::get<std::uint32_t>(is));
    d.data.resize(static_cast<std::size_t>(d.width) * static_cast<std::size_t>(d.height));
    is.read(reinterpret_cast<char*>(d.data.data()), static_cast<std::streamsize>(d.data.size() * sizeof(float)));
    if (!is) fail(ErrorCode::io_error, "truncated depth payload");
    return d;
}

}  // namespace seat
