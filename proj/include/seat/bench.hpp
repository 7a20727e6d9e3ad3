#pragma once

// Dataset generation, user-error injection, evaluation runs and reports.
//
// Dataset layout:
//   <root>/manifest.json
//   <root>/a0000/{assembly.json, kit_<i>.obj, object_<i>.obj, scene.json}
//   <root>/a0000/obs/...   (only with save_observations)

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "seat/io.hpp"
#include "seat/kitgen.hpp"
#include "seat/pipeline.hpp"
#include "seat/plan.hpp"
#include "seat/scene.hpp"
#include "seat/shapes.hpp"
#include "seat/snap.hpp"

namespace seat {

// ---------------------------------------------------------------------------
// User hints

/// gt perturbed by a per-axis uniform offset in [-eps_pos, eps_pos] and a
/// rotation about a uniform axis by an angle uniform in [0, eps_rot].
inline Pose sample_user_hint(const Pose& gt, double eps_pos, double eps_rot, std::uint64_t seed,
                             const SnapConfig& bounds = {}) {
    require(eps_pos >= 0.0 && eps_rot >= 0.0, ErrorCode::invalid_argument, "hint errors must be >= 0");
    require(eps_pos <= bounds.delta_position + 1e-12, ErrorCode::invalid_argument, "eps_pos exceeds delta_position");
    require(eps_rot <= bounds.delta_orientation + 1e-12, ErrorCode::invalid_argument,
            "eps_rot exceeds delta_orientation");
    Rng rng(seed);
    Vec3 off(uniform(rng, -eps_pos, eps_pos), uniform(rng, -eps_pos, eps_pos), uniform(rng, -eps_pos, eps_pos));
    Quat dq = random_rotation_within(rng, eps_rot);
    return {gt.p + off, canonical(dq * gt.q)};
}

/// Hint at exactly `pos_err` meters and `rot_err` radians from gt, random directions.
inline Pose fixed_error_hint(const Pose& gt, double pos_err, double rot_err, std::uint64_t seed) {
    Rng rng(seed);
    Vec3 dir = random_unit_vector(rng);
    Vec3 axis = random_unit_vector(rng);
    return {gt.p + pos_err * dir, canonical(axis_angle(axis, rot_err) * gt.q)};
}

// ---------------------------------------------------------------------------
// Statistics

/// Nearest-rank percentile, p in [0, 100].
inline double percentile(std::vector<double> v, double p) {
    require(!v.empty(), ErrorCode::empty_input, "percentile of an empty sample");
    require(p >= 0.0 && p <= 100.0, ErrorCode::invalid_argument, "percentile must lie in [0, 100]");
    std::sort(v.begin(), v.end());
    auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(v.size())));
    return v[rank == 0 ? 0 : rank - 1];
}

inline double median(const std::vector<double>& v) { return percentile(v, 50.0); }

inline json distribution_json(const std::vector<double>& v) {
    if (v.empty()) return {{"n", 0}};
    return {{"n", v.size()},
            {"median", median(v)},
            {"p20", percentile(v, 20.0)},
            {"p80", percentile(v, 80.0)},
            {"p90", percentile(v, 90.0)},
            {"max", percentile(v, 100.0)}};
}

// ---------------------------------------------------------------------------
// Datasets

struct DatasetSpec {
    int n_assemblies = 10;
    int kits_min = 2;
    int kits_max = 5;
    double margin = 0.0025;
    std::uint64_t seed = 0;
    std::string objects_dir;  // empty: procedural parts
    double depth_noise = 0.0;
    int max_retries = 20;
    bool save_observations = false;

    void validate() const {
        require(n_assemblies >= 0, ErrorCode::invalid_argument, "n_assemblies must be >= 0");
        require(kits_min >= 1 && kits_max <= 5 && kits_min <= kits_max, ErrorCode::invalid_argument,
                "kits per assembly must satisfy 1 <= min <= max <= 5");
        require(margin >= 0.0, ErrorCode::invalid_argument, "margin must be >= 0");
        require(max_retries >= 1, ErrorCode::invalid_argument, "max_retries must be >= 1");
    }
};

/// Parses "2..5" or "3".
inline std::pair<int, int> parse_range(const std::string& s) {
    auto dots = s.find("..");
    try {
        if (dots == std::string::npos) {
            int v = std::stoi(s);
            return {v, v};
        }
        return {std::stoi(s.substr(0, dots)), std::stoi(s.substr(dots + 2))};
    } catch (const std::exception&) {
        fail(ErrorCode::invalid_argument, "bad range '" + s + "'");
    }
}

inline std::vector<TriMesh> load_object_library(const std::string& dir) {
    std::vector<TriMesh> out;
    if (dir.empty()) return out;
    require(fs::is_directory(dir), ErrorCode::io_error, "objects dir not found: " + dir);
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".obj") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) out.push_back(normalize_object(load_obj(f.string())));
    require(!out.empty(), ErrorCode::empty_input, "no .obj files in " + dir);
    return out;
}

inline std::string assembly_name(int i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "a%04d", i);
    return buf;
}

/// One scene: kits for randomly chosen objects, linked and placed.
inline Scene make_random_scene(const std::vector<TriMesh>& library, int n_kits, double margin, std::uint64_t seed,
                               double depth_noise = 0.0) {
    Rng rng(seed);
    std::vector<TriMesh> objects;
    std::vector<std::pair<TriMesh, Pose>> kits;
    KitSpec ks;
    ks.margin = margin;
    for (int i = 0; i < n_kits; ++i) {
        TriMesh obj;
        if (library.empty()) {
            obj = normalize_object(shapes::random_part(rng));
        } else {
            auto k = std::uniform_int_distribution<std::size_t>(0, library.size() - 1)(rng);
            obj = library[k];
        }
        GeneratedKit gk = generate_kit(obj, ks);
        kits.emplace_back(std::move(gk.kit), gk.cavity_pose);
        objects.push_back(std::move(obj));
    }
    KitAssembly a;
    if (n_kits == 1) {
        a = single_kit_assembly(kits[0].first, kits[0].second);
    } else {
        std::vector<double> angles;
        for (int i = 0; i + 1 < n_kits; ++i) angles.push_back(std::round(uniform(rng, 10.0, 45.0)));
        a = link_kits(kits, angles, hash_seed(seed, 11));
    }
    SceneOptions opt;
    opt.depth_noise = depth_noise;
    return sample_scene(objects, std::move(a), hash_seed(seed, 12), opt);
}

/// Writes (or completes) a dataset under `root` and returns its manifest.
/// Assemblies already marked complete are kept as they are.
inline json generate_dataset(const fs::path& root, const DatasetSpec& spec) {
    spec.validate();
    fs::create_directories(root);
    std::vector<TriMesh> library = load_object_library(spec.objects_dir);
    json entries = json::array();
    for (int i = 0; i < spec.n_assemblies; ++i) {
        const std::string name = assembly_name(i);
        const fs::path dir = root / name;
        const fs::path done = dir / ".complete";
        if (!fs::exists(done)) {
            fs::remove_all(dir);
            std::optional<Scene> scene;
            std::string last_error;
            Rng pick(hash_seed(spec.seed, static_cast<std::uint64_t>(i)));
            int n_kits = std::uniform_int_distribution<int>(spec.kits_min, spec.kits_max)(pick);
            for (int attempt = 0; attempt < spec.max_retries && !scene; ++attempt) {
                try {
                    scene = make_random_scene(library, n_kits, spec.margin,
                                              hash_seed(spec.seed, static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(attempt)),
                                              spec.depth_noise);
                } catch (const Error& e) {
                    if (e.code() != ErrorCode::placement_error && e.code() != ErrorCode::workspace_full) throw;
                    last_error = e.what();
                }
            }
            if (!scene) fail(ErrorCode::placement_error, name + ": retry budget exhausted: " + last_error);
            save_scene(dir, *scene, spec.margin);
            if (spec.save_observations) save_observation(dir / "obs", observe(*scene));
            write_text(done, "");
        }
        json sj = load_json(dir / "scene.json");
        entries.push_back({{"id", name}, {"n_kits", sj.at("objects").size()}, {"seed", sj.at("seed")}});
    }
    json manifest = {{"format", "seat-dataset-1"},
                     {"seed", spec.seed},
                     {"n_assemblies", spec.n_assemblies},
                     {"kits_per_assembly", {spec.kits_min, spec.kits_max}},
                     {"margin", spec.margin},
                     {"objects", spec.objects_dir.empty() ? "procedural" : fs::path(spec.objects_dir).filename().string()},
                     {"depth_noise", spec.depth_noise},
                     {"assemblies", entries}};
    save_json(root / "manifest.json", manifest);
    return manifest;
}

/// Keys: n_assemblies, kits_per_assembly ("2..5"), margin, seed, objects,
/// depth_noise, max_retries, save_observations.
inline DatasetSpec dataset_spec_from_json(const json& j, DatasetSpec d = {}) {
    require(j.is_object(), ErrorCode::invalid_argument, "dataset spec must be a JSON object");
    d.n_assemblies = j.value("n_assemblies", d.n_assemblies);
    if (j.contains("kits_per_assembly")) {
        const json& k = j.at("kits_per_assembly");
        if (k.is_string()) {
            std::tie(d.kits_min, d.kits_max) = parse_range(k.get<std::string>());
        } else {
            d.kits_min = d.kits_max = k.get<int>();
        }
    }
    d.margin = j.value("margin", d.margin);
    d.seed = j.value("seed", d.seed);
    d.objects_dir = j.value("objects", d.objects_dir);
    d.depth_noise = j.value("depth_noise", d.depth_noise);
    d.max_retries = j.value("max_retries", d.max_retries);
    d.save_observations = j.value("save_observations", d.save_observations);
    d.validate();
    return d;
}

struct DatasetEntry {
    std::string id;
    fs::path dir;
};

inline std::vector<DatasetEntry> list_dataset(const fs::path& root) {
    const fs::path mf = root / "manifest.json";
    if (!fs::exists(mf)) fail(ErrorCode::io_error, "no manifest.json in " + root.string());
    json m = load_json(mf);
    std::vector<DatasetEntry> out;
    try {
        for (const auto& a : m.at("assemblies")) {
            std::string id = a.at("id").get<std::string>();
            out.push_back({id, root / id});
        }
    } catch (const json::exception& e) {
        fail(ErrorCode::io_error, std::string("malformed manifest: ") + e.what());
    }
    return out;
}

inline double dataset_margin(const fs::path& scene_dir) { return load_json(scene_dir / "assembly.json").value("margin", 0.0); }

// ---------------------------------------------------------------------------
// Evaluation

struct BenchConfig {
    SnapConfig snap;
    std::string completion = "oracle";
    std::string kit_completion = "visual_hull";
    bool informed = true;
    double eps_pos = 0.028;
    double eps_rot = deg2rad(27.5);
    std::uint64_t seed = 0;
    int max_scenes = -1;  // -1: all
    int workers = 1;

    void validate() const {
        snap.validate();
        require(has_completion(completion) && has_completion(kit_completion), ErrorCode::invalid_argument,
                "unknown completion mode");
        require(workers >= 1, ErrorCode::invalid_argument, "workers must be >= 1");
    }
};

inline BenchConfig bench_config_from_json(const json& j) {
    require(j.is_object(), ErrorCode::invalid_argument, "bench config must be a JSON object");
    BenchConfig c;
    if (j.contains("snap")) c.snap = snap_config_from_json(j.at("snap"));
    c.completion = j.value("completion", c.completion);
    c.kit_completion = j.value("kit_completion", c.kit_completion);
    c.informed = j.value("informed", c.informed);
    c.eps_pos = j.value("eps_pos", c.eps_pos);
    if (j.contains("eps_rot_deg")) c.eps_rot = deg2rad(j.at("eps_rot_deg").get<double>());
    c.seed = j.value("seed", c.seed);
    c.max_scenes = j.value("max_scenes", c.max_scenes);
    c.workers = j.value("workers", c.workers);
    c.snap.uninformed = !c.informed;
    c.validate();
    return c;
}

struct StageTimings {
    double observe_ms = 0.0;
    double complete_ms = 0.0;
    double snap_ms = 0.0;
    double plan_ms = 0.0;
};

struct EvalRecord {
    std::string scene_id;
    int object_id = 0;
    std::string completion;
    bool informed = true;
    double bin = 0.0;  // sweep bin value, 0 outside sweeps
    Pose gt, hint, snap;
    double eps_pos = 0.0;  // realized hint error (m)
    double eps_rot = 0.0;  // realized hint error (rad)
    double delta_pos = 0.0;
    double delta_rot = 0.0;
    int nearest_object = 0;  // object id of the cavity nearest to the snapped position
    bool feasible = false;
    bool success = false;
    std::string reason;
    StageTimings timings;
};

inline std::uint64_t record_seed(std::uint64_t master, std::size_t scene_index, int object_id) {
    return hash_seed(master, static_cast<std::uint64_t>(scene_index), static_cast<std::uint64_t>(object_id));
}

namespace detail {

using Clock = std::chrono::steady_clock;

inline double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

/// Everything a scene's records share.
struct PreparedScene {
    Scene scene;
    Observation obs;
    CompletedScene completed;
    SimWorld world;
    double margin = 0.0;
    double observe_ms = 0.0;
    double complete_ms = 0.0;
};

inline PreparedScene prepare_scene(const DatasetEntry& e, const BenchConfig& cfg) {
    PreparedScene p;
    p.scene = load_scene(e.dir);
    p.margin = dataset_margin(e.dir);
    auto t0 = Clock::now();
    p.obs = observe(p.scene);
    p.observe_ms = ms_since(t0);
    t0 = Clock::now();
    p.completed = complete_scene(p.scene, p.obs, cfg.completion, cfg.kit_completion);
    p.complete_ms = ms_since(t0);
    p.world = make_sim_world(p.scene);
    return p;
}

inline int nearest_cavity(const Scene& s, const Vec3& p) {
    int best = 0;
    double bd = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < s.assembly.kits.size(); ++i) {
        double d = (s.assembly.cavity_world(i).p - p).norm();
        if (d < bd) {
            bd = d;
            best = s.assembly.kits[i].object_id;
        }
    }
    return best;
}

/// Snap, plan and simulated insertion for one object given its hint.
inline EvalRecord evaluate(const PreparedScene& ps, const std::string& scene_id, int object_id, const Pose& hint,
                           const BenchConfig& cfg, std::uint64_t seed) {
    const SceneObject& o = ps.scene.object(object_id);
    EvalRecord r;
    r.scene_id = scene_id;
    r.object_id = object_id;
    r.completion = cfg.completion;
    r.informed = cfg.informed;
    r.gt = o.gt_kit;
    r.hint = hint;
    r.eps_pos = position_error(hint, r.gt);
    r.eps_rot = rotation_error(hint, r.gt);
    r.timings.observe_ms = ps.observe_ms;
    r.timings.complete_ms = ps.complete_ms;

    SnapConfig sc = cfg.snap;
    sc.uninformed = !cfg.informed;
    sc.seed = seed;
    auto t0 = Clock::now();
    SnapResult res = snap_object(ps.obs, ps.completed, object_id,
                                 cfg.informed ? std::optional<Pose>(hint) : std::nullopt, sc);
    r.timings.snap_ms = ms_since(t0);
    r.snap = res.pose;
    r.delta_pos = position_error(r.snap, r.gt);
    r.delta_rot = rotation_error(r.snap, r.gt);
    r.nearest_object = nearest_cavity(ps.scene, r.snap.p);

    t0 = Clock::now();
    const VoxelVolume& occ = ps.completed.objects.at(object_id);
    try {
        Pose grasp = grasp_pose_topdown(occ, o.gt_start);
        ActionPlan plan = make_plan(grasp, r.snap, o.gt_start, object_id);
        ExecutionResult ex = execute_plan_sim(ps.scene, plan, ps.world);
        r.feasible = ex.success;
        r.reason = ex.reason;
    } catch (const Error& e) {
        if (e.code() != ErrorCode::not_graspable) throw;
        r.feasible = false;
        r.reason = "not-graspable";
    }
    r.timings.plan_ms = ms_since(t0);
    r.success = r.feasible && r.delta_pos <= ps.margin;
    return r;
}

/// Runs `work(index)` for every scene index on `workers` threads.
template <class F>
void parallel_for(std::size_t n, int workers, F work) {
    if (workers <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) work(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr err;
    std::mutex m;
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    work(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lk(m);
                    if (!err) err = std::current_exception();
                }
            }
        });
    for (auto& t : pool) t.join();
    if (err) std::rethrow_exception(err);
}

inline std::vector<DatasetEntry> selected_scenes(const fs::path& dataset, int max_scenes) {
    auto entries = list_dataset(dataset);
    if (max_scenes >= 0 && static_cast<std::size_t>(max_scenes) < entries.size()) entries.resize(static_cast<std::size_t>(max_scenes));
    return entries;
}

}  // namespace detail

/// observe -> complete -> hint -> snap -> plan check for every scene object.
/// Records come back ordered by (scene, object) regardless of worker count.
inline std::vector<EvalRecord> run_benchmark(const fs::path& dataset, const BenchConfig& cfg) {
    cfg.validate();
    auto entries = detail::selected_scenes(dataset, cfg.max_scenes);
    std::vector<std::vector<EvalRecord>> per_scene(entries.size());
    detail::parallel_for(entries.size(), cfg.workers, [&](std::size_t si) {
        detail::PreparedScene ps = detail::prepare_scene(entries[si], cfg);
        for (const auto& o : ps.scene.objects) {
            std::uint64_t seed = record_seed(cfg.seed, si, o.id);
            Pose hint = sample_user_hint(o.gt_kit, cfg.eps_pos, cfg.eps_rot, seed, cfg.snap);
            per_scene[si].push_back(detail::evaluate(ps, entries[si].id, o.id, hint, cfg, seed));
        }
    });
    std::vector<EvalRecord> out;
    for (auto& v : per_scene)
        for (auto& r : v) out.push_back(std::move(r));
    return out;
}

enum class SweepAxis { position, rotation };

struct SweepConfig {
    SweepAxis axis = SweepAxis::position;
    std::vector<double> bins{0.005, 0.015, 0.025};  // meters or radians
    double fixed_other = deg2rad(10.0);              // radians or meters
};

/// Fixed-magnitude hint errors per bin; the other error is held at fixed_other.
inline std::vector<EvalRecord> robustness_sweep(const fs::path& dataset, const SweepConfig& sw, const BenchConfig& cfg) {
    cfg.validate();
    require(!sw.bins.empty(), ErrorCode::invalid_argument, "sweep needs at least one bin");
    require(cfg.informed, ErrorCode::invalid_argument, "sweeps perturb the hint and need informed snapping");
    for (double b : sw.bins) {
        double pos = sw.axis == SweepAxis::position ? b : sw.fixed_other;
        double rot = sw.axis == SweepAxis::position ? sw.fixed_other : b;
        require(b >= 0.0 && pos <= cfg.snap.delta_position && rot <= cfg.snap.delta_orientation,
                ErrorCode::invalid_argument, "sweep bins must lie within the snap deltas");
    }
    auto entries = detail::selected_scenes(dataset, cfg.max_scenes);
    std::vector<std::vector<EvalRecord>> per_scene(entries.size());
    detail::parallel_for(entries.size(), cfg.workers, [&](std::size_t si) {
        detail::PreparedScene ps = detail::prepare_scene(entries[si], cfg);
        for (std::size_t bi = 0; bi < sw.bins.size(); ++bi)
            for (const auto& o : ps.scene.objects) {
                std::uint64_t seed = hash_seed(record_seed(cfg.seed, si, o.id), bi);
                double b = sw.bins[bi];
                Pose hint = sw.axis == SweepAxis::position ? fixed_error_hint(o.gt_kit, b, sw.fixed_other, seed)
                                                           : fixed_error_hint(o.gt_kit, sw.fixed_other, b, seed);
                EvalRecord r = detail::evaluate(ps, entries[si].id, o.id, hint, cfg, seed);
                r.bin = b;
                per_scene[si].push_back(std::move(r));
            }
    });
    std::vector<EvalRecord> out;
    for (auto& v : per_scene)
        for (auto& r : v) out.push_back(std::move(r));
    std::stable_sort(out.begin(), out.end(), [](const EvalRecord& a, const EvalRecord& b) { return a.bin < b.bin; });
    return out;
}

/// {"axis": "position"|"rotation", "bins": [...], "fixed_other": x}.
/// Position errors in meters, rotation errors in degrees.
inline SweepConfig sweep_config_from_json(const json& j) {
    require(j.is_object(), ErrorCode::invalid_argument, "sweep config must be a JSON object");
    SweepConfig sw;
    std::string axis = j.value("axis", std::string("position"));
    require(axis == "position" || axis == "rotation", ErrorCode::invalid_argument, "sweep axis must be position or rotation");
    sw.axis = axis == "position" ? SweepAxis::position : SweepAxis::rotation;
    if (sw.axis == SweepAxis::rotation) sw.bins = {deg2rad(5.0), deg2rad(15.0), deg2rad(25.0)};
    if (j.contains("bins")) {
        sw.bins.clear();
        for (const auto& b : j.at("bins")) sw.bins.push_back(sw.axis == SweepAxis::position ? b.get<double>() : deg2rad(b.get<double>()));
    }
    if (sw.axis == SweepAxis::rotation) sw.fixed_other = 0.01;
    if (j.contains("fixed_other"))
        sw.fixed_other = sw.axis == SweepAxis::position ? deg2rad(j.at("fixed_other").get<double>()) : j.at("fixed_other").get<double>();
    return sw;
}

// ---------------------------------------------------------------------------
// Reports

inline std::string fmt_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string pose_csv(const Pose& p) {
    std::string s;
    for (double v : {p.p.x(), p.p.y(), p.p.z(), p.q.x(), p.q.y(), p.q.z(), p.q.w()}) {
        if (!s.empty()) s += ',';
        s += fmt_g17(v);
    }
    return s;
}

inline const char* kRecordsHeader =
    "scene_id,object_id,completion,informed,bin,eps_pos,eps_rot,"
    "gt_px,gt_py,gt_pz,gt_qx,gt_qy,gt_qz,gt_qw,"
    "hint_px,hint_py,hint_pz,hint_qx,hint_qy,hint_qz,hint_qw,"
    "snap_px,snap_py,snap_pz,snap_qx,snap_qy,snap_qz,snap_qw,"
    "delta_pos,delta_rot,nearest_object,feasible,success,reason";

/// Deterministic per-record results; timings live in timings.csv.
inline std::string records_csv(const std::vector<EvalRecord>& rs) {
    std::string out = std::string("# success = insertion feasible (execute_plan_sim) and delta_pos <= kit margin\n") +
                      kRecordsHeader + "\n";
    for (const auto& r : rs) {
        out += r.scene_id + ',' + std::to_string(r.object_id) + ',' + r.completion + ',' + (r.informed ? "1" : "0") + ',' +
               fmt_g17(r.bin) + ',' + fmt_g17(r.eps_pos) + ',' + fmt_g17(r.eps_rot) + ',' + pose_csv(r.gt) + ',' +
               pose_csv(r.hint) + ',' + pose_csv(r.snap) + ',' + fmt_g17(r.delta_pos) + ',' + fmt_g17(r.delta_rot) + ',' +
               std::to_string(r.nearest_object) + ',' + (r.feasible ? "1" : "0") + ',' + (r.success ? "1" : "0") + ',' +
               r.reason + "\n";
    }
    return out;
}

inline std::string timings_csv(const std::vector<EvalRecord>& rs) {
    std::string out = "scene_id,object_id,bin,observe_ms,complete_ms,snap_ms,plan_ms\n";
    char buf[160];
    for (const auto& r : rs) {
        std::snprintf(buf, sizeof buf, ",%d,%g,%.3f,%.3f,%.3f,%.3f\n", r.object_id, r.bin, r.timings.observe_ms,
                      r.timings.complete_ms, r.timings.snap_ms, r.timings.plan_ms);
        out += r.scene_id + buf;
    }
    return out;
}

inline json condition_summary(const std::vector<EvalRecord>& rs) {
    std::vector<double> dp, dr;
    std::size_t n_success = 0, n_feasible = 0, n_wrong = 0;
    for (const auto& r : rs) {
        dp.push_back(r.delta_pos);
        dr.push_back(r.delta_rot);
        n_success += r.success;
        n_feasible += r.feasible;
        n_wrong += r.nearest_object != r.object_id;
    }
    double n = rs.empty() ? 1.0 : static_cast<double>(rs.size());
    return {{"n_records", rs.size()},
            {"delta_pos", distribution_json(dp)},
            {"delta_rot", distribution_json(dr)},
            {"success_rate", rs.empty() ? 0.0 : n_success / n},
            {"feasible_rate", rs.empty() ? 0.0 : n_feasible / n},
            {"wrong_cavity_rate", rs.empty() ? 0.0 : n_wrong / n}};
}

/// Median and [20, 80] nearest-rank percentiles per (completion, informed) condition.
inline json summarize(const std::vector<EvalRecord>& rs) {
    std::map<std::pair<std::string, bool>, std::vector<EvalRecord>> groups;
    for (const auto& r : rs) groups[{r.completion, r.informed}].push_back(r);
    json conds = json::array();
    for (const auto& [key, v] : groups) {
        json c = condition_summary(v);
        c["completion"] = key.first;
        c["informed"] = key.second;
        conds.push_back(c);
    }
    return {{"success_criterion", "insertion feasible in simulation and delta_pos <= kit margin"},
            {"percentiles", "nearest-rank"},
            {"units", {{"delta_pos", "m"}, {"delta_rot", "rad"}}},
            {"n_records", rs.size()},
            {"conditions", conds}};
}

struct SweepRow {
    double bin = 0.0;
    std::size_t n = 0;
    double median = 0.0, p20 = 0.0, p80 = 0.0;
};

inline std::vector<SweepRow> sweep_table(const std::vector<EvalRecord>& rs, const SweepConfig& sw) {
    std::vector<SweepRow> rows;
    for (double b : sw.bins) {
        std::vector<double> v;
        for (const auto& r : rs)
            if (r.bin == b) v.push_back(sw.axis == SweepAxis::position ? r.delta_pos : r.delta_rot);
        SweepRow row{b, v.size()};
        if (!v.empty()) {
            row.median = median(v);
            row.p20 = percentile(v, 20.0);
            row.p80 = percentile(v, 80.0);
        }
        rows.push_back(row);
    }
    return rows;
}

/// Whitespace separated, gnuplot-ready.
inline std::string sweep_dat(const std::vector<SweepRow>& rows, const SweepConfig& sw) {
    std::string out = sw.axis == SweepAxis::position ? "# bin_m n median_delta_pos_m p20 p80\n"
                                                     : "# bin_rad n median_delta_rot_rad p20 p80\n";
    char buf[160];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%.6g %zu %.9g %.9g %.9g\n", r.bin, r.n, r.median, r.p20, r.p80);
        out += buf;
    }
    return out;
}

inline void write_reports(const fs::path& out, const std::vector<EvalRecord>& rs, const json& extra = json::object()) {
    fs::create_directories(out);
    write_text(out / "records.csv", records_csv(rs));
    write_text(out / "timings.csv", timings_csv(rs));
    json s = summarize(rs);
    for (auto it = extra.begin(); it != extra.end(); ++it) s[it.key()] = it.value();
    save_json(out / "summary.json", s);
}

}  // namespace seat
