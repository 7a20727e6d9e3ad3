#pragma once

// Two-stage 6DoF snapping: translation by volumetric cross-correlation of the
// object against the kit around the hint, then orientation by scoring
// sampled rotations on labeled point clouds at the snapped position.

#include <fftw3.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "seat/error.hpp"
#include "seat/geom.hpp"
#include "seat/sampling.hpp"
#include "seat/volume.hpp"

namespace seat {

struct SnapConfig {
    double delta_position = 0.028;
    double delta_orientation = deg2rad(27.5);
    int n_rotations = 391;
    bool uninformed = false;
    double roll_pitch_range = deg2rad(15.0);
    double yaw_range = kPi;
    std::string scorer = "clearance";
    std::string encoder = "clearance";
    std::string rotation_sampling = "haar";  // or "uniform_angle"
    int n_object_points = 2048;
    int n_kit_points = 4096;
    int rotation_crop_voxels = 128;
    double contact_band = 0.005;
    double kernel_band = 0.01;   // free-space support around the object kernel
    bool refine_position = true;
    double local_rotation_fraction = 0.5;  // share of n_rotations spent around the first-round best
    double local_rotation_radius = deg2rad(8.0);
    std::uint64_t seed = 0;

    void validate() const {
        require(n_rotations >= 1, ErrorCode::invalid_argument, "n_rotations must be >= 1");
        require(delta_position > 0.0 && delta_orientation > 0.0, ErrorCode::invalid_argument, "deltas must be > 0");
        require(n_object_points > 0 && n_kit_points > 0, ErrorCode::invalid_argument, "point counts must be > 0");
        require(rotation_sampling == "haar" || rotation_sampling == "uniform_angle", ErrorCode::invalid_argument,
                "unknown rotation sampling '" + rotation_sampling + "'");
        require(local_rotation_fraction >= 0.0 && local_rotation_fraction < 1.0, ErrorCode::invalid_argument,
                "local_rotation_fraction must lie in [0, 1)");
        require(local_rotation_radius > 0.0, ErrorCode::invalid_argument, "local_rotation_radius must be > 0");
    }
};

struct SnapCounters {
    std::size_t n_positions = 0;         // correlation outputs of the primary pass
    std::size_t n_refine_positions = 0;  // correlation outputs of the refinement passes
    std::size_t n_rotations = 0;         // scorer invocations
};

struct SnapResult {
    Pose pose;
    double position_score = 0.0;
    std::vector<std::pair<Quat, double>> rotation_scores;
    SnapCounters candidates_evaluated;
    Vec3 p_position_stage = Vec3::Zero();  // p_snap before rotation refinement
    double timing_ms = 0.0;
};

// ---------------------------------------------------------------------------
// Crops

/// Crop lattice of `n` voxels per axis whose center voxel contains `center`.
inline GridSpec crop_grid(const GridSpec& src, const Vec3& center, const Vec3i& n) {
    Vec3i c = src.cell_of(center);
    require(src.in_range(c), ErrorCode::out_of_bounds, "crop center outside the volume");
    GridSpec g;
    g.voxel_size = src.voxel_size;
    g.dims = n;
    g.origin = src.origin + (c - n / 2).cast<double>() * src.voxel_size;
    return g;
}

/// Odd voxel count covering a side of `2 * delta`.
inline int odd_voxels(double delta, double voxel_size) {
    int n = static_cast<int>(std::ceil(2.0 * delta / voxel_size - 1e-9));
    return n % 2 == 0 ? n + 1 : n;
}

/// Copy of `v` on a lattice-aligned grid; cells outside `v` read `fill`.
inline VoxelVolume resample_aligned(const VoxelVolume& v, const GridSpec& g, float fill = 0.0f) {
    require(same_lattice(v.grid(), g), ErrorCode::invalid_argument, "grids are not on the same lattice");
    VoxelVolume out(g, v.kind(), fill);
    Vec3i off = ((g.origin - v.origin()) / v.voxel_size()).array().round().matrix().cast<int>();
    for (int k = 0; k < g.dims.z(); ++k)
        for (int j = 0; j < g.dims.y(); ++j)
            for (int i = 0; i < g.dims.x(); ++i) {
                Vec3i s = Vec3i(i, j, k) + off;
                if (v.grid().in_range(s)) out.at(i, j, k) = v.at(s);
            }
    return out;
}

/// Cube of side 2*delta (odd voxel count) around `center`, zero outside `v`.
inline VoxelVolume crop_kit_volume(const VoxelVolume& v, const Vec3& center, double delta) {
    require(delta > 0.0, ErrorCode::invalid_argument, "crop delta must be > 0");
    int n = odd_voxels(delta, v.voxel_size());
    return resample_aligned(v, crop_grid(v.grid(), center, Vec3i::Constant(n)));
}

inline VoxelVolume crop_kit_volume_voxels(const VoxelVolume& v, const Vec3& center, int n) {
    if (n % 2 == 0) ++n;
    return resample_aligned(v, crop_grid(v.grid(), center, Vec3i::Constant(n)));
}

// ---------------------------------------------------------------------------
// Encoders: per-voxel feature maps for object (kernel) and kit (image).

/// Kernel cells hold 1 (object), -d for free cells within the support band
/// (d = distance to the object in voxels, rounded up) and 0 outside it.
struct Encoder {
    std::function<float(float)> object;  // kernel cell -> feature
    std::function<float(float)> kit;     // occupancy -> feature
    bool integral = true;                // correlation values are integers
};

/// Object cell weight of the clearance encoder; large enough that pushing
/// object cells into solid never pays off against band cells leaving free space.
inline constexpr float kClearanceObjectWeight = 32.0f;

inline std::map<std::string, Encoder>& encoder_registry() {
    static std::map<std::string, Encoder> reg = [] {
        std::map<std::string, Encoder> r;
        r["signed_occupancy"] = {[](float o) { return o > 0.5f ? 1.0f : (o < -0.5f ? -1.0f : 0.0f); },
                                 [](float o) { return o > 0.5f ? -1.0f : 1.0f; }, true};
        // free band cells weighted by their distance to the object (voxels)
        r["clearance"] = {[](float o) { return o > 0.5f ? kClearanceObjectWeight : (o < -0.5f ? o : 0.0f); },
                          [](float o) { return o > 0.5f ? -1.0f : 1.0f; }, true};
        r["penetration"] = {[](float o) { return o > 0.5f ? 1.0f : 0.0f; },
                            [](float o) { return o > 0.5f ? -1.0f : 0.0f; }, true};
        return r;
    }();
    return reg;
}

inline const Encoder& get_encoder(const std::string& name) {
    auto& reg = encoder_registry();
    auto it = reg.find(name);
    require(it != reg.end(), ErrorCode::not_found, "unknown encoder '" + name + "'");
    return it->second;
}

// ---------------------------------------------------------------------------
// Correlation

namespace detail {

inline int fft_size(int n) {
    for (int m = std::max(n, 1);; ++m) {
        int r = m;
        for (int p : {2, 3, 5, 7})
            while (r % p == 0) r /= p;
        if (r == 1) return m;
    }
}

inline std::mutex& fftw_mutex() {
    static std::mutex m;
    return m;
}

struct FftwFree {
    void operator()(void* p) const { fftw_free(p); }
};

}  // namespace detail

/// Valid cross-correlation out[s] = sum_x kernel[x] * image[x + s], x-fastest
/// buffers; output dims = image dims - kernel dims + 1. FFT based.
inline std::vector<double> correlate_valid(const std::vector<float>& image, const Vec3i& idims,
                                           const std::vector<float>& kernel, const Vec3i& kdims, Vec3i& odims) {
    require((kdims.array() >= 1).all() && (kdims.array() <= idims.array()).all(), ErrorCode::invalid_argument,
            "kernel larger than image");
    odims = idims - kdims + Vec3i::Ones();
    const int nx = detail::fft_size(idims.x()), ny = detail::fft_size(idims.y()), nz = detail::fft_size(idims.z());
    const std::size_t nreal = static_cast<std::size_t>(nx) * ny * nz;
    const std::size_t ncplx = static_cast<std::size_t>(nx / 2 + 1) * ny * nz;
    std::unique_ptr<double, detail::FftwFree> a(fftw_alloc_real(nreal)), b(fftw_alloc_real(nreal));
    std::unique_ptr<fftw_complex, detail::FftwFree> A(fftw_alloc_complex(ncplx)), B(fftw_alloc_complex(ncplx));
    require(a && b && A && B, ErrorCode::invalid_argument, "fft allocation failed");

    fftw_plan fwd_a, fwd_b, inv;
    {
        std::lock_guard<std::mutex> lock(detail::fftw_mutex());
        fwd_a = fftw_plan_dft_r2c_3d(nz, ny, nx, a.get(), A.get(), FFTW_ESTIMATE);
        fwd_b = fftw_plan_dft_r2c_3d(nz, ny, nx, b.get(), B.get(), FFTW_ESTIMATE);
        inv = fftw_plan_dft_c2r_3d(nz, ny, nx, A.get(), a.get(), FFTW_ESTIMATE);
    }
    auto fill = [&](double* dst, const std::vector<float>& src, const Vec3i& d) {
        std::fill(dst, dst + nreal, 0.0);
        for (int k = 0; k < d.z(); ++k)
            for (int j = 0; j < d.y(); ++j)
                for (int i = 0; i < d.x(); ++i)
                    dst[static_cast<std::size_t>(i) + static_cast<std::size_t>(nx) * (j + static_cast<std::size_t>(ny) * k)] =
                        src[static_cast<std::size_t>(i) + static_cast<std::size_t>(d.x()) * (j + static_cast<std::size_t>(d.y()) * k)];
    };
    fill(a.get(), image, idims);
    fill(b.get(), kernel, kdims);
    fftw_execute(fwd_a);
    fftw_execute(fwd_b);
    for (std::size_t i = 0; i < ncplx; ++i) {
        double ar = A.get()[i][0], ai = A.get()[i][1];
        double br = B.get()[i][0], bi = -B.get()[i][1];
        A.get()[i][0] = ar * br - ai * bi;
        A.get()[i][1] = ar * bi + ai * br;
    }
    fftw_execute(inv);
    {
        std::lock_guard<std::mutex> lock(detail::fftw_mutex());
        fftw_destroy_plan(fwd_a);
        fftw_destroy_plan(fwd_b);
        fftw_destroy_plan(inv);
    }
    std::vector<double> out(static_cast<std::size_t>(odims.x()) * odims.y() * odims.z());
    const double norm = 1.0 / static_cast<double>(nreal);
    for (int k = 0; k < odims.z(); ++k)
        for (int j = 0; j < odims.y(); ++j)
            for (int i = 0; i < odims.x(); ++i)
                out[static_cast<std::size_t>(i) + static_cast<std::size_t>(odims.x()) * (j + static_cast<std::size_t>(odims.y()) * k)] =
                    a.get()[static_cast<std::size_t>(i) + static_cast<std::size_t>(nx) * (j + static_cast<std::size_t>(ny) * k)] * norm;
    return out;
}

/// Direct evaluation of correlate_valid.
inline std::vector<double> correlate_brute(const std::vector<float>& image, const Vec3i& idims,
                                           const std::vector<float>& kernel, const Vec3i& kdims, Vec3i& odims) {
    odims = idims - kdims + Vec3i::Ones();
    std::vector<double> out(static_cast<std::size_t>(odims.x()) * odims.y() * odims.z(), 0.0);
    auto at = [](const std::vector<float>& v, const Vec3i& d, int i, int j, int k) {
        return static_cast<double>(v[static_cast<std::size_t>(i) + static_cast<std::size_t>(d.x()) * (j + static_cast<std::size_t>(d.y()) * k)]);
    };
    for (int sz = 0; sz < odims.z(); ++sz)
        for (int sy = 0; sy < odims.y(); ++sy)
            for (int sx = 0; sx < odims.x(); ++sx) {
                double acc = 0.0;
                for (int k = 0; k < kdims.z(); ++k)
                    for (int j = 0; j < kdims.y(); ++j)
                        for (int i = 0; i < kdims.x(); ++i)
                            acc += at(kernel, kdims, i, j, k) * at(image, idims, i + sx, j + sy, k + sz);
                out[static_cast<std::size_t>(sx) + static_cast<std::size_t>(odims.x()) * (sy + static_cast<std::size_t>(odims.y()) * sz)] = acc;
            }
    return out;
}

/// Index of the maximum; ties go to the smallest distance to `tie_point`
/// (when given), then to the smallest linear index.
inline std::size_t select_argmax(const std::vector<double>& values, const GridSpec& grid,
                                 const std::optional<Vec3>& tie_point) {
    require(!values.empty(), ErrorCode::empty_input, "no values");
    double best = *std::max_element(values.begin(), values.end());
    std::size_t arg = values.size();
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (values[i] != best) continue;
        if (!tie_point) return i;
        double d = (grid.center(grid.coords(i)) - *tie_point).squaredNorm();
        if (d < best_d) {
            best_d = d;
            arg = i;
        }
    }
    return arg;
}

// ---------------------------------------------------------------------------
// Distance transforms

namespace detail {

/// 1D squared distance transform of sampled function f (Felzenszwalb-Huttenlocher).
inline void dt1d(const double* f, int n, double* d, int* v, double* z) {
    int k = 0;
    v[0] = 0;
    z[0] = -std::numeric_limits<double>::infinity();
    z[1] = std::numeric_limits<double>::infinity();
    for (int q = 1; q < n; ++q) {
        double s = ((f[q] + double(q) * q) - (f[v[k]] + double(v[k]) * v[k])) / (2.0 * q - 2.0 * v[k]);
        while (s <= z[k]) {
            --k;
            s = ((f[q] + double(q) * q) - (f[v[k]] + double(v[k]) * v[k])) / (2.0 * q - 2.0 * v[k]);
        }
        ++k;
        v[k] = q;
        z[k] = s;
        z[k + 1] = std::numeric_limits<double>::infinity();
    }
    k = 0;
    for (int q = 0; q < n; ++q) {
        while (z[k + 1] < q) ++k;
        d[q] = (q - v[k]) * double(q - v[k]) + f[v[k]];
    }
}

}  // namespace detail

inline constexpr double kEdtInf = 1e20;

/// Squared Euclidean distance (voxel units) from every voxel center to the
/// nearest voxel with feature[i] != 0.
inline std::vector<double> edt_squared(const std::vector<std::uint8_t>& feature, const Vec3i& dims) {
    const std::size_t n = feature.size();
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i) g[i] = feature[i] ? 0.0 : kEdtInf;
    int m = dims.maxCoeff();
    std::vector<double> f(static_cast<std::size_t>(m)), d(static_cast<std::size_t>(m)), z(static_cast<std::size_t>(m) + 1);
    std::vector<int> v(static_cast<std::size_t>(m));
    const std::size_t sx = 1, sy = static_cast<std::size_t>(dims.x()), sz = sy * static_cast<std::size_t>(dims.y());
    auto pass = [&](int len, std::size_t stride, int na, int nb, std::size_t sa, std::size_t sb) {
        for (int b = 0; b < nb; ++b)
            for (int a = 0; a < na; ++a) {
                std::size_t base = a * sa + b * sb;
                for (int i = 0; i < len; ++i) f[static_cast<std::size_t>(i)] = g[base + i * stride];
                detail::dt1d(f.data(), len, d.data(), v.data(), z.data());
                for (int i = 0; i < len; ++i) g[base + i * stride] = std::min(d[static_cast<std::size_t>(i)], kEdtInf);
            }
    };
    pass(dims.x(), sx, dims.y(), dims.z(), sy, sz);
    pass(dims.y(), sy, dims.x(), dims.z(), sx, sz);
    pass(dims.z(), sz, dims.x(), dims.y(), sx, sy);
    return g;
}

// ---------------------------------------------------------------------------
// Position stage

/// Object occupancy resampled on the kit lattice spacing in orientation `q`.
/// Odd dims; the center voxel holds the object model origin. Cells read 1
/// inside the object, -d in free space within `band` of it (d = distance in
/// voxels, rounded up) and 0 beyond (outside the kernel support).
inline VoxelVolume build_kernel(const VoxelVolume& object, const Pose& object_frame, const Quat& q, double voxel_size,
                                double band = 0.005) {
    require(object.count_occupied() > 0, ErrorCode::empty_input, "empty object volume");
    const Quat to_offset = q * object_frame.q.conjugate();  // world (start) -> hint-oriented offsets
    Aabb box = object.occupied_aabb();
    Vec3 reach = Vec3::Zero();
    for (int c = 0; c < 8; ++c) {
        Vec3 w((c & 1) ? box.hi.x() : box.lo.x(), (c & 2) ? box.hi.y() : box.lo.y(), (c & 4) ? box.hi.z() : box.lo.z());
        reach = reach.cwiseMax((to_offset * (w - object_frame.p)).cwiseAbs());
    }
    Vec3i h = (((reach.array() + band) / voxel_size).ceil().matrix()).cast<int>() + Vec3i::Ones();
    GridSpec g;
    g.voxel_size = voxel_size;
    g.dims = 2 * h + Vec3i::Ones();
    g.origin = -(h.cast<double>() + Vec3::Constant(0.5)) * voxel_size;
    VoxelVolume k(g, VolumeKind::occupancy, 0.0f);
    const Mat3 R = (object_frame.q * q.conjugate()).toRotationMatrix();
    std::vector<std::uint8_t> inside(k.size(), 0);
    for (int z = 0; z < g.dims.z(); ++z)
        for (int y = 0; y < g.dims.y(); ++y)
            for (int x = 0; x < g.dims.x(); ++x) {
                Vec3 w = object_frame.p + R * g.center(x, y, z);
                if (object.occupied(object.grid().cell_of(w))) {
                    k.at(x, y, z) = 1.0f;
                    inside[g.index(x, y, z)] = 1;
                }
            }
    auto d2 = edt_squared(inside, g.dims);
    const double band_vox2 = (band / voxel_size) * (band / voxel_size);
    for (std::size_t i = 0; i < k.size(); ++i)
        if (!inside[i] && d2[i] <= band_vox2 + 1e-9) k[i] = -static_cast<float>(std::ceil(std::sqrt(d2[i]) - 1e-9));
    return k;
}

struct PositionSnap {
    Vec3 p = Vec3::Zero();
    Vec3i cell = Vec3i::Zero();
    double best = 0.0;
    VoxelVolume score;  // feature volume on the crop grid
    std::size_t n_positions = 0;
};

/// Correlates `kernel` (odd dims, centered) over the kit occupancy for every
/// kernel-center position on `crop`. Kit values are read from `kit`
/// (zero occupancy outside it) so the kernel sees real geometry beyond the crop.
inline PositionSnap position_snap(const VoxelVolume& kernel, const VoxelVolume& kit, const GridSpec& crop,
                                  const std::string& encoder = "signed_occupancy",
                                  const std::optional<Vec3>& tie_point = std::nullopt) {
    require(std::abs(kernel.voxel_size() - kit.voxel_size()) <= 1e-9 * kit.voxel_size(), ErrorCode::invalid_argument,
            "kernel and kit voxel sizes differ");
    require(kernel.dims().x() % 2 == 1 && kernel.dims().y() % 2 == 1 && kernel.dims().z() % 2 == 1, ErrorCode::invalid_argument, "kernel dims must be odd");
    require(kernel.count_occupied() > 0, ErrorCode::empty_input, "empty object kernel");
    const Encoder& enc = get_encoder(encoder);
    const Vec3i h = kernel.dims() / 2;

    GridSpec padded = crop;
    padded.dims = crop.dims + 2 * h;
    padded.origin = crop.origin - h.cast<double>() * crop.voxel_size;
    VoxelVolume img = resample_aligned(kit, padded, 0.0f);

    std::vector<float> ifeat(img.size()), kfeat(kernel.size());
    for (std::size_t i = 0; i < img.size(); ++i) ifeat[i] = enc.kit(img[i]);
    for (std::size_t i = 0; i < kernel.size(); ++i) kfeat[i] = enc.object(kernel[i]);

    Vec3i odims;
    auto corr = correlate_valid(ifeat, padded.dims, kfeat, kernel.dims(), odims);
    if (enc.integral)
        for (auto& c : corr) c = std::round(c);

    PositionSnap out;
    out.score = VoxelVolume(crop, VolumeKind::feature, 0.0f);
    for (std::size_t i = 0; i < corr.size(); ++i) out.score[i] = static_cast<float>(corr[i]);
    std::size_t arg = select_argmax(corr, crop, tie_point);
    out.cell = crop.coords(arg);
    out.p = crop.center(out.cell);
    out.best = corr[arg];
    out.n_positions = corr.size();
    return out;
}

/// Convenience form on a prepared kit crop (zero-padded beyond it).
inline PositionSnap position_snap(const VoxelVolume& kernel, const VoxelVolume& kit_crop,
                                  const std::string& encoder = "signed_occupancy",
                                  const std::optional<Vec3>& tie_point = std::nullopt) {
    return position_snap(kernel, kit_crop, kit_crop.grid(), encoder, tie_point);
}

// ---------------------------------------------------------------------------
// Rotation candidates

inline std::vector<Quat> sample_rotations(const Quat& q_ref, const SnapConfig& cfg,
                                          const std::optional<Quat>& include, std::uint64_t seed) {
    cfg.validate();
    Rng rng(seed);
    std::vector<Quat> out;
    out.reserve(static_cast<std::size_t>(cfg.n_rotations));
    if (include) out.push_back(canonical(*include));
    if (cfg.uninformed) {
        while (static_cast<int>(out.size()) < cfg.n_rotations) {
            double yaw = uniform(rng, -cfg.yaw_range, cfg.yaw_range);
            double pitch = uniform(rng, -cfg.roll_pitch_range, cfg.roll_pitch_range);
            double roll = uniform(rng, -cfg.roll_pitch_range, cfg.roll_pitch_range);
            out.push_back(canonical(from_ypr(yaw, pitch, roll) * q_ref));
        }
        return out;
    }
    if (!include) out.push_back(canonical(q_ref));
    const bool haar = cfg.rotation_sampling == "haar";
    while (static_cast<int>(out.size()) < cfg.n_rotations) {
        Quat d = haar ? random_rotation_in_ball(rng, cfg.delta_orientation)
                      : random_rotation_within(rng, cfg.delta_orientation);
        out.push_back(canonical(d * q_ref));
    }
    return out;
}

/// n rotations Haar-uniform within `radius` of `center`, the first being
/// `center` itself. With `bound_center` every sample also stays within
/// `bound` of it.
inline std::vector<Quat> sample_local_rotations(const Quat& center, int n, double radius,
                                                const std::optional<Quat>& bound_center, double bound,
                                                std::uint64_t seed) {
    Rng rng(seed);
    std::vector<Quat> out;
    if (n <= 0) return out;
    out.push_back(canonical(center));
    while (static_cast<int>(out.size()) < n) {
        Quat q = canonical(random_rotation_in_ball(rng, radius) * center);
        if (bound_center && quat_geodesic(q, *bound_center) > bound) continue;
        out.push_back(q);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Kit signed distance for rotation scoring

/// Signed distance (m) to the kit surface, positive in free space, negative
/// inside solid. Surfaces sit half a voxel from the solid voxel centers.
inline VoxelVolume kit_sdf(const VoxelVolume& kit_occ, double far = 1.0) {
    const std::size_t n = kit_occ.size();
    std::vector<std::uint8_t> solid(n), free(n);
    for (std::size_t i = 0; i < n; ++i) {
        solid[i] = kit_occ.occupied(i) ? 1 : 0;
        free[i] = 1 - solid[i];
    }
    auto ds = edt_squared(solid, kit_occ.dims());
    auto df = edt_squared(free, kit_occ.dims());
    const double s = kit_occ.voxel_size();
    VoxelVolume out(kit_occ.grid(), VolumeKind::feature, static_cast<float>(far));
    for (std::size_t i = 0; i < n; ++i) {
        double v = solid[i] ? -(std::sqrt(df[i]) - 0.5) * s : (std::sqrt(ds[i]) - 0.5) * s;
        out[i] = static_cast<float>(std::clamp(v, -far, far));
    }
    return out;
}

/// Trilinear interpolation of voxel-center samples; `outside` beyond the grid.
inline double sample_trilinear(const VoxelVolume& v, const Vec3& x, double outside) {
    const GridSpec& g = v.grid();
    Vec3 f = (x - g.origin) / g.voxel_size - Vec3::Constant(0.5);
    Vec3 fl = f.array().floor().matrix();
    Vec3i c = fl.cast<int>();
    if ((c.array() < 0).any() || (c.array() + 1 >= g.dims.array()).any()) {
        Vec3i nearest = g.cell_of(x);
        return g.in_range(nearest) ? v.at(nearest) : outside;
    }
    Vec3 t = f - fl;
    double acc = 0.0;
    for (int corner = 0; corner < 8; ++corner) {
        int dx = corner & 1, dy = (corner >> 1) & 1, dz = (corner >> 2) & 1;
        double w = (dx ? t.x() : 1 - t.x()) * (dy ? t.y() : 1 - t.y()) * (dz ? t.z() : 1 - t.z());
        acc += w * v.at(c.x() + dx, c.y() + dy, c.z() + dz);
    }
    return acc;
}

// ---------------------------------------------------------------------------
// Scorers: labeled cloud (object +1 already posed, kit -1) -> score.

struct ScoreContext {
    const VoxelVolume* sdf = nullptr;  // kit signed distance on the rotation crop
    double voxel_size = 0.0;
    double contact_band = 0.005;
};

using Scorer = std::function<double(const LabeledPointCloud&, const ScoreContext&)>;

inline std::map<std::string, Scorer>& scorer_registry() {
    static std::map<std::string, Scorer> reg = [] {
        std::map<std::string, Scorer> r;
        r["fit"] = [](const LabeledPointCloud& pc, const ScoreContext& ctx) {
            std::size_t n = 0, contact = 0, pen = 0;
            for (std::size_t i = 0; i < pc.size(); ++i) {
                if (pc.labels[i] != 1.0f) continue;
                ++n;
                double s = sample_trilinear(*ctx.sdf, pc.points[i], 1.0);
                if (s < -ctx.voxel_size)
                    ++pen;
                else if (s <= ctx.contact_band)
                    ++contact;
            }
            if (n == 0) return 0.0;
            return (static_cast<double>(contact) - 4.0 * static_cast<double>(pen)) / static_cast<double>(n);
        };
        // concave in the clearance, so balanced gaps beat one-sided contact
        r["clearance"] = [](const LabeledPointCloud& pc, const ScoreContext& ctx) {
            std::size_t n = 0;
            double total = 0.0;
            const double cap = ctx.contact_band;
            for (std::size_t i = 0; i < pc.size(); ++i) {
                if (pc.labels[i] != 1.0f) continue;
                ++n;
                double s = sample_trilinear(*ctx.sdf, pc.points[i], 1.0);
                double u = (std::min(s, cap) - cap) / cap;
                total -= u * u;
                if (s < -ctx.voxel_size) total -= 4.0;
            }
            return n == 0 ? 0.0 : total / static_cast<double>(n);
        };
        r["penetration"] = [](const LabeledPointCloud& pc, const ScoreContext& ctx) {
            std::size_t n = 0, pen = 0;
            for (std::size_t i = 0; i < pc.size(); ++i) {
                if (pc.labels[i] != 1.0f) continue;
                ++n;
                if (sample_trilinear(*ctx.sdf, pc.points[i], 1.0) < -ctx.voxel_size) ++pen;
            }
            return n == 0 ? 0.0 : -static_cast<double>(pen) / static_cast<double>(n);
        };
        return r;
    }();
    return reg;
}

inline const Scorer& get_scorer(const std::string& name) {
    auto& reg = scorer_registry();
    auto it = reg.find(name);
    require(it != reg.end(), ErrorCode::not_found, "unknown scorer '" + name + "'");
    return it->second;
}

// ---------------------------------------------------------------------------
// Rotation stage

struct ObjectModel {
    LabeledPointCloud points;  // surface samples in the model frame, label +1
    Vec3 centroid = Vec3::Zero();  // model frame
};

/// Surface samples and centroid of a completed (world, start pose) object in its model frame.
inline ObjectModel object_model(const VoxelVolume& object, const Pose& object_frame, int n_points, std::uint64_t seed) {
    require(object.count_occupied() > 0, ErrorCode::empty_input, "empty object volume");
    ObjectModel m;
    m.points = sample_surface_points(object, static_cast<std::size_t>(n_points), 1.0f, seed);
    const Pose inv = object_frame.inverse();
    for (auto& p : m.points.points) p = inv * p;
    m.centroid = inv * object.occupied_centroid();
    return m;
}

/// Model pose that keeps the centroid at its location under `reference` but
/// takes orientation `q`.
inline Pose pivot_about_centroid(const Pose& reference, const Vec3& centroid, const Quat& q) {
    return {reference.p + reference.q * centroid - q * centroid, q};
}

struct RotationSnap {
    Quat q = Quat::Identity();
    Pose pose;
    std::vector<std::pair<Quat, double>> scores;
    std::size_t n_calls = 0;
};

/// Scores every candidate orientation at the reference position (pivot =
/// object centroid). Best score wins; ties go to the candidate closest to
/// reference.q, then to the lowest index.
inline RotationSnap rotation_snap(const ObjectModel& model, const VoxelVolume& kit_crop, const Pose& reference,
                                  const std::vector<Quat>& candidates, const SnapConfig& cfg, std::uint64_t seed) {
    require(!candidates.empty(), ErrorCode::invalid_argument, "no rotation candidates");
    const Scorer& scorer = get_scorer(cfg.scorer);
    VoxelVolume sdf = kit_sdf(kit_crop);
    ScoreContext ctx{&sdf, kit_crop.voxel_size(), cfg.contact_band};

    LabeledPointCloud kit_pts;
    try {
        kit_pts = sample_surface_points(kit_crop, static_cast<std::size_t>(cfg.n_kit_points), -1.0f, hash_seed(seed, 2));
    } catch (const Error& e) {
        if (e.code() != ErrorCode::empty_surface) throw;
    }

    RotationSnap out;
    out.scores.reserve(candidates.size());
    LabeledPointCloud joined;
    joined.points.resize(model.points.size());
    joined.labels.assign(model.points.size(), 1.0f);
    joined.append(kit_pts);
    std::size_t best = 0;
    double best_d = 0.0;
    for (std::size_t c = 0; c < candidates.size(); ++c) {
        Pose pose = pivot_about_centroid(reference, model.centroid, candidates[c]);
        for (std::size_t i = 0; i < model.points.size(); ++i) joined.points[i] = pose * model.points.points[i];
        double s = scorer(joined, ctx);
        ++out.n_calls;
        out.scores.emplace_back(candidates[c], s);
        double d = quat_geodesic(candidates[c], reference.q);
        if (c == 0 || s > out.scores[best].second || (s == out.scores[best].second && d < best_d)) {
            best = c;
            best_d = d;
        }
    }
    out.q = candidates[best];
    out.pose = pivot_about_centroid(reference, model.centroid, out.q);
    return out;
}

// ---------------------------------------------------------------------------
// Full pipeline

/// Snaps an object (completed occupancy in the world at `object_frame`)
/// into the completed kit occupancy. With a hint the search is confined to
/// the hint's (delta_position, delta_orientation) neighbourhood; without one
/// the whole kit volume and the uninformed rotation ranges are searched.
inline SnapResult snap_pose(const VoxelVolume& object, const Pose& object_frame, const VoxelVolume& kit,
                            const std::optional<Pose>& hint, SnapConfig cfg) {
    auto t0 = std::chrono::steady_clock::now();
    cfg.validate();
    if (!hint) cfg.uninformed = true;
    require(object.count_occupied() > 0, ErrorCode::empty_input, "empty object volume");
    const double vs = kit.voxel_size();
    const int n_crop = odd_voxels(cfg.delta_position, vs);
    const Quat q_ref = hint ? hint->q : object_frame.q;

    SnapResult res;
    GridSpec crop = hint ? crop_grid(kit.grid(), hint->p, Vec3i::Constant(n_crop)) : kit.grid();
    VoxelVolume kernel = build_kernel(object, object_frame, q_ref, vs, cfg.kernel_band);
    std::optional<Vec3> tie = hint ? std::optional<Vec3>(hint->p) : std::nullopt;
    PositionSnap ps = position_snap(kernel, kit, crop, cfg.encoder, tie);
    res.candidates_evaluated.n_positions = ps.n_positions;
    res.p_position_stage = ps.p;
    res.position_score = ps.best;

    const int n_local = cfg.n_rotations > 1 ? static_cast<int>(std::lround(cfg.n_rotations * cfg.local_rotation_fraction)) : 0;
    SnapConfig global_cfg = cfg;
    global_cfg.n_rotations = cfg.n_rotations - n_local;
    auto cands = sample_rotations(q_ref, global_cfg, std::nullopt, hash_seed(cfg.seed, 1));
    ObjectModel model = object_model(object, object_frame, cfg.n_object_points, hash_seed(cfg.seed, 3));
    VoxelVolume rcrop = crop_kit_volume_voxels(kit, ps.p, cfg.rotation_crop_voxels);
    RotationSnap rs = rotation_snap(model, rcrop, Pose(ps.p, q_ref), cands, cfg, hash_seed(cfg.seed, 4));
    res.candidates_evaluated.n_rotations = rs.n_calls;
    res.rotation_scores = std::move(rs.scores);
    res.pose = rs.pose;

    auto refine = [&](const Quat& q) {
        GridSpec g = hint ? crop : crop_grid(kit.grid(), res.pose.p, Vec3i::Constant(n_crop));
        VoxelVolume k2 = build_kernel(object, object_frame, q, vs, cfg.kernel_band);
        PositionSnap ps2 = position_snap(k2, kit, g, cfg.encoder, res.pose.p);
        res.candidates_evaluated.n_refine_positions += ps2.n_positions;
        res.pose = Pose(ps2.p, q);
        res.position_score = ps2.best;
    };
    if (cfg.refine_position) refine(rs.q);

    if (n_local > 0) {
        auto local = sample_local_rotations(rs.q, n_local, cfg.local_rotation_radius,
                                            hint ? std::optional<Quat>(q_ref) : std::nullopt, cfg.delta_orientation,
                                            hash_seed(cfg.seed, 5));
        VoxelVolume rcrop2 = crop_kit_volume_voxels(kit, res.pose.p, cfg.rotation_crop_voxels);
        RotationSnap rs2 = rotation_snap(model, rcrop2, res.pose, local, cfg, hash_seed(cfg.seed, 6));
        res.candidates_evaluated.n_rotations += rs2.n_calls;
        for (auto& sc : rs2.scores) res.rotation_scores.push_back(sc);
        res.pose = rs2.pose;
        if (cfg.refine_position) refine(rs2.q);
    }
    if (hint) {
        Vec3 lo = hint->p - Vec3::Constant(cfg.delta_position), hi = hint->p + Vec3::Constant(cfg.delta_position);
        res.pose.p = res.pose.p.cwiseMax(lo).cwiseMin(hi);
    }
    res.timing_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return res;
}

}  // namespace seat
