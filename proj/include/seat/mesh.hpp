#pragma once

// Triangle meshes, OBJ I/O and scan-conversion to occupancy grids.

#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "seat/error.hpp"
#include "seat/geom.hpp"
#include "seat/volume.hpp"

namespace seat {

struct TriMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> triangles;

    bool empty() const { return triangles.empty(); }

    Aabb aabb() const {
        Aabb b;
        for (const auto& t : triangles)
            for (int i : t) b.extend(vertices[static_cast<std::size_t>(i)]);
        return b;
    }

    /// Drops triangles with repeated indices or zero area. Throws on out-of-range indices.
    void cleanup(double area_eps = 1e-18) {
        std::vector<std::array<int, 3>> kept;
        kept.reserve(triangles.size());
        const int n = static_cast<int>(vertices.size());
        for (const auto& t : triangles) {
            for (int i : t)
                require(i >= 0 && i < n, ErrorCode::invalid_argument, "triangle index out of range");
            if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2]) continue;
            const Vec3& a = vertices[static_cast<std::size_t>(t[0])];
            Vec3 c = (vertices[static_cast<std::size_t>(t[1])] - a).cross(vertices[static_cast<std::size_t>(t[2])] - a);
            if (c.squaredNorm() <= area_eps * area_eps) continue;
            kept.push_back(t);
        }
        triangles = std::move(kept);
    }

    void append(const TriMesh& o) {
        int base = static_cast<int>(vertices.size());
        vertices.insert(vertices.end(), o.vertices.begin(), o.vertices.end());
        for (auto t : o.triangles) triangles.push_back({t[0] + base, t[1] + base, t[2] + base});
    }

    /// Signed volume (positive for outward-oriented closed meshes).
    double volume() const {
        double v = 0.0;
        for (const auto& t : triangles)
            v += vertices[static_cast<std::size_t>(t[0])].dot(
                     vertices[static_cast<std::size_t>(t[1])].cross(vertices[static_cast<std::size_t>(t[2])])) /
                 6.0;
        return v;
    }
};

inline TriMesh transformed(const TriMesh& m, const Pose& pose) {
    TriMesh out = m;
    for (auto& v : out.vertices) v = pose * v;
    return out;
}

inline TriMesh scaled(const TriMesh& m, double s, const Vec3& about = Vec3::Zero()) {
    TriMesh out = m;
    for (auto& v : out.vertices) v = about + (v - about) * s;
    return out;
}

/// Every directed edge (a,b) is matched by an opposite edge (b,a). This holds
/// for closed surfaces, including voxel-boundary meshes with non-manifold edges.
inline bool is_watertight(const TriMesh& m) {
    if (m.triangles.empty()) return false;
    std::map<std::pair<int, int>, int> balance;
    for (const auto& t : m.triangles)
        for (int e = 0; e < 3; ++e) {
            int a = t[static_cast<std::size_t>(e)], b = t[static_cast<std::size_t>((e + 1) % 3)];
            if (a < b)
                ++balance[{a, b}];
            else
                --balance[{b, a}];
        }
    return std::all_of(balance.begin(), balance.end(), [](const auto& kv) { return kv.second == 0; });
}

// ---------------------------------------------------------------------------
// Wavefront OBJ subset: `v x y z` and `f i j k ...` (1-based, fan-triangulated).

inline TriMesh read_obj(std::istream& is) {
    TriMesh m;
    std::string line;
    while (std::getline(is, line)) {
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        if (tag == "v") {
            Vec3 v;
            ls >> v.x() >> v.y() >> v.z();
            if (!ls) fail(ErrorCode::io_error, "bad vertex line: " + line);
            m.vertices.push_back(v);
        } else if (tag == "f") {
            std::vector<int> idx;
            std::string tok;
            while (ls >> tok) {
                int i = std::stoi(tok.substr(0, tok.find('/')));
                if (i < 1) fail(ErrorCode::io_error, "only positive 1-based indices are supported");
                idx.push_back(i - 1);
            }
            for (std::size_t k = 2; k < idx.size(); ++k) m.triangles.push_back({idx[0], idx[k - 1], idx[k]});
        }
    }
    m.cleanup();
    return m;
}

inline void write_obj(std::ostream& os, const TriMesh& m) {
    char buf[128];
    for (const auto& v : m.vertices) {
        std::snprintf(buf, sizeof buf, "v %.9g %.9g %.9g\n", v.x(), v.y(), v.z());
        os << buf;
    }
    for (const auto& t : m.triangles) os << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
}

inline std::string to_obj_string(const TriMesh& m) {
    std::ostringstream os;
    write_obj(os, m);
    return os.str();
}

inline TriMesh load_obj(const std::string& path) {
    std::ifstream is(path);
    if (!is) fail(ErrorCode::io_error, "cannot open " + path);
    return read_obj(is);
}

inline void save_obj(const std::string& path, const TriMesh& m) {
    std::ofstream os(path);
    if (!os) fail(ErrorCode::io_error, "cannot open " + path);
    write_obj(os, m);
}

// ---------------------------------------------------------------------------
// 2D scan conversion with a consistent fill convention. Shared edges are
// owned by exactly one of the two triangles of a surface sheet, so ray parity
// and first-hit queries agree between the voxelizer and the renderers.

namespace raster {

struct P2 {
    double x, y;
};

/// Edge function with canonical operand order so that e(a,b,p) == -e(b,a,p) bitwise.
inline double edge(const P2& a, const P2& b, const P2& p) {
    bool swap = (b.x < a.x) || (b.x == a.x && b.y < a.y);
    const P2& u = swap ? b : a;
    const P2& v = swap ? a : b;
    double e = (v.x - u.x) * (p.y - u.y) - (v.y - u.y) * (p.x - u.x);
    return swap ? -e : e;
}

inline bool top_left(const P2& a, const P2& b) {
    double dx = b.x - a.x, dy = b.y - a.y;
    return dy < 0.0 || (dy == 0.0 && dx < 0.0);
}

/// Visits sample points (x0 + (i + 0.5) * step, y0 + (j + 0.5) * step),
/// 0 <= i < nx, 0 <= j < ny, covered by the projected triangle. The callback
/// receives (i, j, w0, w1, w2) with normalized barycentric weights.
template <typename F>
void scan_triangle(P2 a, P2 b, P2 c, double x0, double y0, double step, int nx, int ny, F&& visit) {
    double area = edge(a, b, c);
    if (area == 0.0 || !std::isfinite(area)) return;
    bool flipped = area < 0.0;
    if (flipped) {
        std::swap(b, c);
        area = -area;
    }
    double xmin = std::min({a.x, b.x, c.x}), xmax = std::max({a.x, b.x, c.x});
    double ymin = std::min({a.y, b.y, c.y}), ymax = std::max({a.y, b.y, c.y});
    int i0 = std::max(0, static_cast<int>(std::floor((xmin - x0) / step - 0.5)));
    int i1 = std::min(nx - 1, static_cast<int>(std::ceil((xmax - x0) / step - 0.5)));
    int j0 = std::max(0, static_cast<int>(std::floor((ymin - y0) / step - 0.5)));
    int j1 = std::min(ny - 1, static_cast<int>(std::ceil((ymax - y0) / step - 0.5)));
    bool tl_ab = top_left(a, b), tl_bc = top_left(b, c), tl_ca = top_left(c, a);
    for (int j = j0; j <= j1; ++j) {
        double py = y0 + (j + 0.5) * step;
        for (int i = i0; i <= i1; ++i) {
            P2 p{x0 + (i + 0.5) * step, py};
            double w2 = edge(a, b, p);
            double w0 = edge(b, c, p);
            double w1 = edge(c, a, p);
            bool in = (w0 > 0.0 || (w0 == 0.0 && tl_bc)) && (w1 > 0.0 || (w1 == 0.0 && tl_ca)) &&
                      (w2 > 0.0 || (w2 == 0.0 && tl_ab));
            if (!in) continue;
            w0 /= area;
            w1 /= area;
            w2 /= area;
            if (flipped)
                visit(i, j, w0, w2, w1);  // undo the b<->c swap
            else
                visit(i, j, w0, w1, w2);
        }
    }
}

}  // namespace raster

/// For each (x, y) column of `grid`, the sorted z values where the mesh
/// surface crosses the vertical line through the column center.
inline std::vector<std::vector<double>> column_crossings(const TriMesh& mesh, const GridSpec& grid) {
    const int nx = grid.dims.x(), ny = grid.dims.y();
    std::vector<std::vector<double>> cols(static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny));
    for (const auto& t : mesh.triangles) {
        const Vec3& a = mesh.vertices[static_cast<std::size_t>(t[0])];
        const Vec3& b = mesh.vertices[static_cast<std::size_t>(t[1])];
        const Vec3& c = mesh.vertices[static_cast<std::size_t>(t[2])];
        raster::scan_triangle({a.x(), a.y()}, {b.x(), b.y()}, {c.x(), c.y()}, grid.origin.x(), grid.origin.y(),
                              grid.voxel_size, nx, ny, [&](int i, int j, double w0, double w1, double w2) {
                                  cols[static_cast<std::size_t>(i) + static_cast<std::size_t>(nx) *
                                                                         static_cast<std::size_t>(j)]
                                      .push_back(w0 * a.z() + w1 * b.z() + w2 * c.z());
                              });
    }
    for (auto& c : cols) std::sort(c.begin(), c.end());
    return cols;
}

namespace detail {

inline void check_mesh_in_grid(const TriMesh& mesh, const GridSpec& grid) {
    Aabb mb = mesh.aabb();
    Aabb gb = grid.bounds();
    Vec3 under = (gb.lo - mb.lo).cwiseMax(0.0);
    Vec3 over = (mb.hi - gb.hi).cwiseMax(0.0);
    if (under.maxCoeff() > 1e-12 || over.maxCoeff() > 1e-12) {
        std::ostringstream os;
        os << "mesh exceeds grid bounds; overflow below [" << under.transpose() << "] m, above [" << over.transpose()
           << "] m";
        fail(ErrorCode::out_of_bounds, os.str());
    }
}

inline void voxelize_parity(const TriMesh& mesh, VoxelVolume& vol) {
    const GridSpec& g = vol.grid();
    auto cols = column_crossings(mesh, g);
    for (int j = 0; j < g.dims.y(); ++j)
        for (int i = 0; i < g.dims.x(); ++i) {
            const auto& c = cols[static_cast<std::size_t>(i) + static_cast<std::size_t>(g.dims.x()) *
                                                                   static_cast<std::size_t>(j)];
            for (std::size_t s = 0; s + 1 < c.size(); s += 2) {
                double z_in = c[s], z_out = c[s + 1];
                int k0 = std::max(0, static_cast<int>(std::floor((z_in - g.origin.z()) / g.voxel_size - 0.5)));
                int k1 = std::min(g.dims.z() - 1,
                                  static_cast<int>(std::ceil((z_out - g.origin.z()) / g.voxel_size - 0.5)));
                for (int k = k0; k <= k1; ++k) {
                    double zc = g.origin.z() + (k + 0.5) * g.voxel_size;
                    if (zc > z_in && zc < z_out) vol.at(i, j, k) = 1.0f;
                }
            }
        }
}

/// Shell rasterization followed by an exterior flood fill from the grid boundary.
inline void voxelize_shell_fill(const TriMesh& mesh, VoxelVolume& vol) {
    const GridSpec& g = vol.grid();
    std::vector<std::uint8_t> shell(g.count(), 0);
    double step = 0.5 * g.voxel_size;
    for (const auto& t : mesh.triangles) {
        const Vec3& a = mesh.vertices[static_cast<std::size_t>(t[0])];
        const Vec3& b = mesh.vertices[static_cast<std::size_t>(t[1])];
        const Vec3& c = mesh.vertices[static_cast<std::size_t>(t[2])];
        double len = std::max({(b - a).norm(), (c - a).norm(), (c - b).norm()});
        int n = std::max(1, static_cast<int>(std::ceil(len / step)));
        for (int u = 0; u <= n; ++u)
            for (int v = 0; v <= n - u; ++v) {
                Vec3 x = a + (b - a) * (static_cast<double>(u) / n) + (c - a) * (static_cast<double>(v) / n);
                Vec3i cell = g.cell_of(x);
                if (g.in_range(cell)) shell[g.index(cell)] = 1;
            }
    }
    std::vector<std::uint8_t> outside(g.count(), 0);
    std::vector<Vec3i> stack;
    auto seed = [&](int i, int j, int k) {
        std::size_t idx = g.index(i, j, k);
        if (!shell[idx] && !outside[idx]) {
            outside[idx] = 1;
            stack.emplace_back(i, j, k);
        }
    };
    const Vec3i& d = g.dims;
    for (int k = 0; k < d.z(); ++k)
        for (int j = 0; j < d.y(); ++j)
            for (int i = 0; i < d.x(); ++i)
                if (i == 0 || j == 0 || k == 0 || i == d.x() - 1 || j == d.y() - 1 || k == d.z() - 1) seed(i, j, k);
    static const int nb[6][3] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
    while (!stack.empty()) {
        Vec3i v = stack.back();
        stack.pop_back();
        for (const auto& o : nb) {
            Vec3i w(v.x() + o[0], v.y() + o[1], v.z() + o[2]);
            if (g.in_range(w)) seed(w.x(), w.y(), w.z());
        }
    }
    for (std::size_t i = 0; i < g.count(); ++i) vol[i] = outside[i] ? 0.0f : 1.0f;
}

}  // namespace detail

/// Occupancy grid: voxel = 1 iff its center lies inside the solid bounded by
/// `mesh`. Closed meshes use exact ray parity; leaky meshes fall back to a
/// shell fill with the exterior flooded from the grid boundary.
inline VoxelVolume voxelize_mesh(const TriMesh& mesh, const GridSpec& grid) {
    VoxelVolume vol(grid, VolumeKind::occupancy, 0.0f);
    if (mesh.empty()) return vol;
    detail::check_mesh_in_grid(mesh, grid);
    if (is_watertight(mesh))
        detail::voxelize_parity(mesh, vol);
    else
        detail::voxelize_shell_fill(mesh, vol);
    return vol;
}

/// Same as voxelize_mesh but silently clips geometry outside the grid.
inline VoxelVolume voxelize_mesh_clipped(const TriMesh& mesh, const GridSpec& grid) {
    VoxelVolume vol(grid, VolumeKind::occupancy, 0.0f);
    if (mesh.empty()) return vol;
    if (is_watertight(mesh))
        detail::voxelize_parity(mesh, vol);
    else
        detail::voxelize_shell_fill(mesh, vol);
    return vol;
}

/// Boundary surface of an occupancy grid: one quad (two triangles) per
/// occupied/free voxel face, outward oriented, vertices shared on the lattice.
inline TriMesh occupancy_to_mesh(const VoxelVolume& vol) {
    TriMesh m;
    const GridSpec& g = vol.grid();
    std::unordered_map<std::uint64_t, int> ids;
    auto vid = [&](int i, int j, int k) {
        std::uint64_t key = (static_cast<std::uint64_t>(i) << 42) | (static_cast<std::uint64_t>(j) << 21) |
                            static_cast<std::uint64_t>(k);
        auto it = ids.find(key);
        if (it != ids.end()) return it->second;
        int id = static_cast<int>(m.vertices.size());
        m.vertices.push_back(g.origin + Vec3(i, j, k) * g.voxel_size);
        ids.emplace(key, id);
        return id;
    };
    auto quad = [&](const std::array<Vec3i, 4>& c) {
        int a = vid(c[0].x(), c[0].y(), c[0].z()), b = vid(c[1].x(), c[1].y(), c[1].z());
        int cc = vid(c[2].x(), c[2].y(), c[2].z()), d = vid(c[3].x(), c[3].y(), c[3].z());
        m.triangles.push_back({a, b, cc});
        m.triangles.push_back({a, cc, d});
    };
    for (int k = 0; k < g.dims.z(); ++k)
        for (int j = 0; j < g.dims.y(); ++j)
            for (int i = 0; i < g.dims.x(); ++i) {
                if (!vol.occupied(Vec3i(i, j, k))) continue;
                if (!vol.occupied(Vec3i(i - 1, j, k)))
                    quad({Vec3i(i, j, k), Vec3i(i, j, k + 1), Vec3i(i, j + 1, k + 1), Vec3i(i, j + 1, k)});
                if (!vol.occupied(Vec3i(i + 1, j, k)))
                    quad({Vec3i(i + 1, j, k), Vec3i(i + 1, j + 1, k), Vec3i(i + 1, j + 1, k + 1),
                          Vec3i(i + 1, j, k + 1)});
                if (!vol.occupied(Vec3i(i, j - 1, k)))
                    quad({Vec3i(i, j, k), Vec3i(i + 1, j, k), Vec3i(i + 1, j, k + 1), Vec3i(i, j, k + 1)});
                if (!vol.occupied(Vec3i(i, j + 1, k)))
                    quad({Vec3i(i, j + 1, k), Vec3i(i, j + 1, k + 1), Vec3i(i + 1, j + 1, k + 1),
                          Vec3i(i + 1, j + 1, k)});
                if (!vol.occupied(Vec3i(i, j, k - 1)))
                    quad({Vec3i(i, j, k), Vec3i(i, j + 1, k), Vec3i(i + 1, j + 1, k), Vec3i(i + 1, j, k)});
                if (!vol.occupied(Vec3i(i, j, k + 1)))
                    quad({Vec3i(i, j, k + 1), Vec3i(i + 1, j, k + 1), Vec3i(i + 1, j + 1, k + 1),
                          Vec3i(i, j + 1, k + 1)});
            }
    return m;
}

}  // namespace seat
