#pragma once

// Axis-aligned scalar voxel grids.
//
// `origin` is the world position of the minimum corner of voxel (0,0,0);
// voxel (i,j,k) covers [origin + (i,j,k) * s, origin + (i+1,j+1,k+1) * s)
// and its center sits at origin + (i + 0.5, j + 0.5, k + 0.5) * s.
// Linear index is x-fastest: i + nx * (j + ny * k).

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "seat/error.hpp"
#include "seat/geom.hpp"

namespace seat {

enum class VolumeKind : std::uint8_t { tsdf = 0, occupancy = 1, feature = 2 };

struct GridSpec {
    Vec3 origin = Vec3::Zero();
    double voxel_size = 0.001;
    Vec3i dims = Vec3i::Zero();

    std::size_t count() const {
        return static_cast<std::size_t>(dims.x()) * static_cast<std::size_t>(dims.y()) *
               static_cast<std::size_t>(dims.z());
    }
    Vec3 extent() const { return dims.cast<double>() * voxel_size; }
    Aabb bounds() const { return {origin, origin + extent()}; }

    Vec3 center(int i, int j, int k) const {
        return origin + Vec3(i + 0.5, j + 0.5, k + 0.5) * voxel_size;
    }
    Vec3 center(const Vec3i& v) const { return center(v.x(), v.y(), v.z()); }

    /// Voxel whose cell contains the world point (may be out of range).
    Vec3i cell_of(const Vec3& x) const {
        Vec3 f = (x - origin) / voxel_size;
        return {static_cast<int>(std::floor(f.x())), static_cast<int>(std::floor(f.y())),
                static_cast<int>(std::floor(f.z()))};
    }
    bool in_range(const Vec3i& v) const {
        return v.x() >= 0 && v.y() >= 0 && v.z() >= 0 && v.x() < dims.x() && v.y() < dims.y() && v.z() < dims.z();
    }
    std::size_t index(int i, int j, int k) const {
        return static_cast<std::size_t>(i) +
               static_cast<std::size_t>(dims.x()) *
                   (static_cast<std::size_t>(j) + static_cast<std::size_t>(dims.y()) * static_cast<std::size_t>(k));
    }
    std::size_t index(const Vec3i& v) const { return index(v.x(), v.y(), v.z()); }
    Vec3i coords(std::size_t idx) const {
        auto nx = static_cast<std::size_t>(dims.x());
        auto ny = static_cast<std::size_t>(dims.y());
        return {static_cast<int>(idx % nx), static_cast<int>((idx / nx) % ny), static_cast<int>(idx / (nx * ny))};
    }

    /// Grid covering `box` with voxels snapped to the lattice through `anchor`.
    static GridSpec covering(const Aabb& box, double voxel_size, const Vec3& anchor = Vec3::Zero()) {
        GridSpec g;
        g.voxel_size = voxel_size;
        Vec3 lo = ((box.lo - anchor) / voxel_size).array().floor().matrix();
        Vec3 hi = ((box.hi - anchor) / voxel_size).array().ceil().matrix();
        g.origin = anchor + lo * voxel_size;
        g.dims = (hi - lo).cast<int>().cwiseMax(1);
        return g;
    }

    /// Cubic grid of `n` voxels per side centered on `c`.
    static GridSpec centered(const Vec3& c, double voxel_size, int n) {
        GridSpec g;
        g.voxel_size = voxel_size;
        g.dims = Vec3i::Constant(n);
        g.origin = c - Vec3::Constant(0.5 * n * voxel_size);
        return g;
    }
};

inline bool same_lattice(const GridSpec& a, const GridSpec& b, double tol = 1e-9) {
    if (std::abs(a.voxel_size - b.voxel_size) > tol) return false;
    Vec3 f = (a.origin - b.origin) / a.voxel_size;
    return (f - f.array().round().matrix()).cwiseAbs().maxCoeff() < 1e-6;
}

class VoxelVolume {
public:
    VoxelVolume() = default;
    VoxelVolume(const GridSpec& grid, VolumeKind kind, float fill = 0.0f)
        : grid_(grid), kind_(kind), data_(grid.count(), fill) {
        require(grid.voxel_size > 0.0, ErrorCode::invalid_argument, "voxel size must be positive");
        require((grid.dims.array() >= 0).all(), ErrorCode::invalid_argument, "negative dims");
    }

    const GridSpec& grid() const { return grid_; }
    VolumeKind kind() const { return kind_; }
    void set_kind(VolumeKind k) { kind_ = k; }
    const Vec3i& dims() const { return grid_.dims; }
    double voxel_size() const { return grid_.voxel_size; }
    const Vec3& origin() const { return grid_.origin; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    std::vector<float>& data() { return data_; }
    const std::vector<float>& data() const { return data_; }

    float& operator[](std::size_t i) { return data_[i]; }
    float operator[](std::size_t i) const { return data_[i]; }
    float& at(int i, int j, int k) { return data_[grid_.index(i, j, k)]; }
    float at(int i, int j, int k) const { return data_[grid_.index(i, j, k)]; }
    float& at(const Vec3i& v) { return data_[grid_.index(v)]; }
    float at(const Vec3i& v) const { return data_[grid_.index(v)]; }

    /// Value at voxel v, or `outside` when v is out of range.
    float get(const Vec3i& v, float outside) const { return grid_.in_range(v) ? at(v) : outside; }
    /// Value of the cell containing world point x.
    float sample(const Vec3& x, float outside) const { return get(grid_.cell_of(x), outside); }

    bool occupied(std::size_t i) const { return data_[i] > 0.5f; }
    bool occupied(const Vec3i& v) const { return grid_.in_range(v) && at(v) > 0.5f; }

    std::size_t count_occupied() const {
        std::size_t n = 0;
        for (float v : data_) n += v > 0.5f ? 1 : 0;
        return n;
    }

    /// Index-space bounding box of occupied voxels; empty() if none.
    bool occupied_bounds(Vec3i& lo, Vec3i& hi) const {
        lo = Vec3i::Constant(std::numeric_limits<int>::max());
        hi = Vec3i::Constant(std::numeric_limits<int>::min());
        bool any = false;
        for (int k = 0; k < dims().z(); ++k)
            for (int j = 0; j < dims().y(); ++j)
                for (int i = 0; i < dims().x(); ++i)
                    if (at(i, j, k) > 0.5f) {
                        any = true;
                        lo = lo.cwiseMin(Vec3i(i, j, k));
                        hi = hi.cwiseMax(Vec3i(i, j, k));
                    }
        return any;
    }

    /// World-space box around the occupied voxel cells.
    Aabb occupied_aabb() const {
        Vec3i lo, hi;
        if (!occupied_bounds(lo, hi)) return {};
        return {grid_.origin + lo.cast<double>() * voxel_size(),
                grid_.origin + (hi + Vec3i::Ones()).cast<double>() * voxel_size()};
    }

    /// Mean world position of occupied voxel centers.
    Vec3 occupied_centroid() const {
        Vec3 sum = Vec3::Zero();
        std::size_t n = 0;
        for (std::size_t idx = 0; idx < data_.size(); ++idx)
            if (data_[idx] > 0.5f) {
                sum += grid_.center(grid_.coords(idx));
                ++n;
            }
        require(n > 0, ErrorCode::empty_input, "volume has no occupied voxels");
        return sum / static_cast<double>(n);
    }

    friend bool operator==(const VoxelVolume& a, const VoxelVolume& b) {
        return a.kind_ == b.kind_ && a.grid_.dims == b.grid_.dims && a.grid_.origin == b.grid_.origin &&
               a.grid_.voxel_size == b.grid_.voxel_size && a.data_ == b.data_;
    }

private:
    GridSpec grid_;
    VolumeKind kind_ = VolumeKind::occupancy;
    std::vector<float> data_;
};

/// Occupancy from a TSDF (or any signed field): value <= 0 becomes occupied.
inline VoxelVolume occupancy_from_tsdf(const VoxelVolume& tsdf) {
    VoxelVolume out(tsdf.grid(), VolumeKind::occupancy);
    for (std::size_t i = 0; i < tsdf.size(); ++i) out[i] = tsdf[i] <= 0.0f ? 1.0f : 0.0f;
    return out;
}

/// Number of voxels occupied in both volumes; both must share a grid.
inline std::size_t intersection_count(const VoxelVolume& a, const VoxelVolume& b) {
    require(a.dims() == b.dims(), ErrorCode::invalid_argument, "intersection_count: grid mismatch");
    std::size_t n = 0;
    for (std::size_t i = 0; i < a.size(); ++i) n += (a[i] > 0.5f && b[i] > 0.5f) ? 1 : 0;
    return n;
}

inline double iou(const VoxelVolume& a, const VoxelVolume& b) {
    require(a.dims() == b.dims(), ErrorCode::invalid_argument, "iou: grid mismatch");
    std::size_t inter = 0, uni = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        bool x = a[i] > 0.5f, y = b[i] > 0.5f;
        inter += (x && y) ? 1 : 0;
        uni += (x || y) ? 1 : 0;
    }
    return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

// ---------------------------------------------------------------------------
// Binary file format "SEATVOL1" (little-endian):
//   magic[8] | u32 nx ny nz | f32 voxel_size | f32 origin[3] | u8 kind | f32 data[nx*ny*nz]

namespace detail {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

template <typename T>
void put(std::ostream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) fail(ErrorCode::io_error, "unexpected end of file");
    return v;
}

}  // namespace detail

inline void write_volume(std::ostream& os, const VoxelVolume& v) {
    os.write("SEATVOL1", 8);
    for (int d = 0; d < 3; ++d) detail::put<std::uint32_t>(os, static_cast<std::uint32_t>(v.dims()[d]));
    detail::put<float>(os, static_cast<float>(v.voxel_size()));
    for (int d = 0; d < 3; ++d) detail::put<float>(os, static_cast<float>(v.origin()[d]));
    detail::put<std::uint8_t>(os, static_cast<std::uint8_t>(v.kind()));
    os.write(reinterpret_cast<const char*>(v.data().data()), static_cast<std::streamsize>(v.size() * sizeof(float)));
}

inline VoxelVolume read_volume(std::istream& is) {
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, "SEATVOL1", 8) != 0) fail(ErrorCode::io_error, "not a SEATVOL1 file");
    GridSpec g;
    for (int d = 0; d < 3; ++d) g.dims[d] = static_cast<int>(detail::get<std::uint32_t>(is));
    g.voxel_size = detail::get<float>(is);
    for (int d = 0; d < 3; ++d) g.origin[d] = detail::get<float>(is);
    auto kind = detail::get<std::uint8_t>(is);
    if (kind > 2) fail(ErrorCode::io_error, "unknown volume kind");
    VoxelVolume v(g, static_cast<VolumeKind>(kind));
    is.read(reinterpret_cast<char*>(v.data().data()), static_cast<std::streamsize>(v.size() * sizeof(float)));
    if (!is) fail(ErrorCode::io_error, "truncated volume payload");
    return v;
}

inline void save_volume(const std::string& path, const VoxelVolume& v) {
    std::ofstream os(path, std::ios::binary);
    if (!os) fail(ErrorCode::io_error, "cannot open " + path);
    write_volume(os, v);
}

inline VoxelVolume load_volume(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) fail(ErrorCode::io_error, "cannot open " + path);
    return read_volume(is);
}

}  // namespace seat
