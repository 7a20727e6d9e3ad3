#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "seat/bench.hpp"

using namespace seat;

namespace {

fs::path temp_dir(const std::string& name) {
    fs::path d = fs::temp_directory_path() / ("seat_bench_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

std::optional<ErrorCode> code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    return std::nullopt;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) out.push_back(f);
    return out;
}

BenchConfig fast_config() {
    BenchConfig c;
    c.completion = "oracle";
    c.kit_completion = "oracle";
    c.snap.n_rotations = 41;
    c.snap.n_object_points = 512;
    c.snap.n_kit_points = 1024;
    c.seed = 5;
    return c;
}

// Small shared dataset: 3 assemblies of 1..2 kits.
const fs::path& small_dataset() {
    static fs::path d = [] {
        fs::path p = temp_dir("small");
        DatasetSpec s;
        s.n_assemblies = 3;
        s.kits_min = 1;
        s.kits_max = 2;
        s.seed = 77;
        generate_dataset(p, s);
        return p;
    }();
    return d;
}

}  // namespace

TEST(UserHint, ZeroErrorIsGroundTruth) {
    Pose gt{Vec3(0.1, -0.02, 0.03), canonical(axis_angle(Vec3(1, 1, 0).normalized(), 0.4))};
    Pose h = sample_user_hint(gt, 0.0, 0.0, 3);
    EXPECT_EQ(h.p, gt.p);
    EXPECT_LT(quat_geodesic(h.q, gt.q), 1e-12);
}

TEST(UserHint, BoundsAndRejection) {
    Pose gt = Pose::identity();
    for (std::uint64_t s = 0; s < 2000; ++s) {
        Pose h = sample_user_hint(gt, 0.028, deg2rad(27.5), s);
        ASSERT_LE(h.p.cwiseAbs().maxCoeff(), 0.028);
        ASSERT_LE(quat_geodesic(h.q, gt.q), deg2rad(27.5) + 1e-12);
    }
    EXPECT_EQ(code_of([&] { sample_user_hint(gt, 0.03, 0.1, 1); }), ErrorCode::invalid_argument);
    EXPECT_EQ(code_of([&] { sample_user_hint(gt, 0.01, deg2rad(30.0), 1); }), ErrorCode::invalid_argument);
}

TEST(UserHint, PerAxisOffsetUniform) {
    const int n = 10000, bins = 10;
    std::vector<std::vector<int>> hist(3, std::vector<int>(bins, 0));
    for (int s = 0; s < n; ++s) {
        Pose h = sample_user_hint(Pose::identity(), 0.02, 0.1, static_cast<std::uint64_t>(s));
        for (int a = 0; a < 3; ++a) {
            int b = std::min(bins - 1, static_cast<int>((h.p[a] + 0.02) / 0.04 * bins));
            ++hist[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)];
        }
    }
    const double p = 1.0 / bins, mean = n * p, sigma = std::sqrt(n * p * (1 - p));
    for (const auto& axis : hist)
        for (int c : axis) EXPECT_LE(std::abs(c - mean), 3 * sigma);
}

TEST(Statistics, NearestRankPercentile) {
    std::vector<double> v = {15, 20, 35, 40, 50};
    EXPECT_EQ(percentile(v, 5), 15);
    EXPECT_EQ(percentile(v, 30), 20);
    EXPECT_EQ(percentile(v, 40), 20);
    EXPECT_EQ(percentile(v, 50), 35);
    EXPECT_EQ(percentile(v, 100), 50);
    EXPECT_EQ(percentile(v, 0), 15);
    EXPECT_EQ(code_of([] { percentile({}, 50); }), ErrorCode::empty_input);
    EXPECT_EQ(code_of([&] { percentile(v, 101); }), ErrorCode::invalid_argument);
}

TEST(Dataset, TenAssembliesFromOneObject) {
    fs::path objs = temp_dir("objs");
    Rng rng(4);
    save_obj((objs / "part.obj").string(), normalize_object(shapes::random_part(rng)));
    fs::path out = temp_dir("ten");
    DatasetSpec s;
    s.n_assemblies = 10;
    s.kits_min = 1;
    s.kits_max = 2;
    s.objects_dir = objs.string();
    json m = generate_dataset(out, s);
    EXPECT_EQ(m.at("assemblies").size(), 10u);
    EXPECT_EQ(list_dataset(out).size(), 10u);
    for (const auto& e : list_dataset(out)) EXPECT_TRUE(fs::exists(e.dir / "scene.json"));
}

TEST(Dataset, SameSeedBitIdenticalAndResumable) {
    DatasetSpec s;
    s.n_assemblies = 2;
    s.kits_min = 2;
    s.kits_max = 3;
    s.seed = 9;
    s.save_observations = true;
    fs::path a = temp_dir("det_a"), b = temp_dir("det_b");
    generate_dataset(a, s);
    generate_dataset(b, s);
    std::size_t files = 0;
    for (const auto& f : fs::recursive_directory_iterator(a)) {
        if (!f.is_regular_file()) continue;
        fs::path rel = fs::relative(f.path(), a);
        ASSERT_TRUE(fs::exists(b / rel)) << rel;
        EXPECT_EQ(slurp(f.path()), slurp(b / rel)) << rel;
        ++files;
    }
    EXPECT_GT(files, 10u);
    // drop one assembly and regenerate: only it is rebuilt, bytes unchanged
    std::string before = slurp(a / "a0001" / "scene.json");
    fs::remove(a / "a0001" / ".complete");
    generate_dataset(a, s);
    EXPECT_EQ(slurp(a / "a0001" / "scene.json"), before);
    EXPECT_EQ(slurp(a / "manifest.json"), slurp(b / "manifest.json"));
}

TEST(Dataset, SpecFromJson) {
    DatasetSpec s = dataset_spec_from_json(json{{"n_assemblies", 4}, {"kits_per_assembly", "2..3"}, {"margin", 0.01}});
    EXPECT_EQ(s.n_assemblies, 4);
    EXPECT_EQ(s.kits_min, 2);
    EXPECT_EQ(s.kits_max, 3);
    EXPECT_EQ(s.margin, 0.01);
    EXPECT_EQ(code_of([] { dataset_spec_from_json(json{{"kits_per_assembly", "0..7"}}); }), ErrorCode::invalid_argument);
    EXPECT_EQ(code_of([] { dataset_spec_from_json(json{{"kits_per_assembly", "x"}}); }), ErrorCode::invalid_argument);
}

TEST(Benchmark, EmptyDatasetEmptyReport) {
    fs::path d = temp_dir("empty");
    DatasetSpec s;
    s.n_assemblies = 0;
    generate_dataset(d, s);
    auto rs = run_benchmark(d, fast_config());
    EXPECT_TRUE(rs.empty());
    fs::path out = temp_dir("empty_out");
    write_reports(out, rs);
    json sum = load_json(out / "summary.json");
    EXPECT_EQ(sum.at("n_records"), 0);
    EXPECT_TRUE(sum.at("conditions").empty());
}

TEST(Benchmark, UnreadableDatasetIsIoError) {
    EXPECT_EQ(code_of([] { run_benchmark("/nonexistent/dataset", fast_config()); }), ErrorCode::io_error);
}

TEST(Benchmark, DeterministicRecords) {
    BenchConfig c = fast_config();
    auto a = run_benchmark(small_dataset(), c), b = run_benchmark(small_dataset(), c);
    ASSERT_FALSE(a.empty());
    EXPECT_EQ(records_csv(a), records_csv(b));
    c.workers = 2;
    EXPECT_EQ(records_csv(run_benchmark(small_dataset(), c)), records_csv(a));
}

TEST(Benchmark, RecordInvariantsAndMetricRederivation) {
    auto rs = run_benchmark(small_dataset(), fast_config());
    fs::path out = temp_dir("rederive");
    write_reports(out, rs);
    std::stringstream csv(slurp(out / "records.csv"));
    std::string line;
    std::getline(csv, line);  // comment
    std::getline(csv, line);
    auto header = split(line);
    auto col = [&](const std::string& name) {
        return static_cast<std::size_t>(std::find(header.begin(), header.end(), name) - header.begin());
    };
    auto pose_at = [&](const std::vector<std::string>& f, const std::string& prefix) {
        auto d = [&](const std::string& k) { return std::strtod(f[col(prefix + k)].c_str(), nullptr); };
        return Pose{Vec3(d("_px"), d("_py"), d("_pz")), Quat(d("_qw"), d("_qx"), d("_qy"), d("_qz"))};
    };
    std::size_t n = 0;
    while (std::getline(csv, line)) {
        auto f = split(line);
        ASSERT_EQ(f.size(), header.size());
        Pose gt = pose_at(f, "gt"), snap = pose_at(f, "snap");
        EXPECT_EQ(f[col("delta_pos")], fmt_g17(position_error(snap, gt)));
        EXPECT_EQ(f[col("delta_rot")], fmt_g17(rotation_error(snap, gt)));
        // independent formulas
        double dp = std::sqrt((snap.p - gt.p).squaredNorm());
        double dot = snap.q.dot(gt.q);
        double dr = std::acos(std::clamp(2 * dot * dot - 1, -1.0, 1.0));
        EXPECT_NEAR(std::strtod(f[col("delta_pos")].c_str(), nullptr), dp, 1e-15);
        EXPECT_NEAR(std::strtod(f[col("delta_rot")].c_str(), nullptr), dr, 1e-6);
        double drot = std::strtod(f[col("delta_rot")].c_str(), nullptr);
        EXPECT_GE(drot, 0.0);
        EXPECT_LE(drot, kPi);
        ++n;
    }
    EXPECT_EQ(n, rs.size());
    for (const auto& r : rs) {
        EXPECT_GE(r.timings.snap_ms, 0.0);
        EXPECT_GE(r.timings.plan_ms, 0.0);
        EXPECT_EQ(r.success, r.feasible && r.delta_pos <= 0.0025);
    }
    json sum = load_json(out / "summary.json");
    EXPECT_EQ(sum.at("percentiles"), "nearest-rank");
    ASSERT_EQ(sum.at("conditions").size(), 1u);
    std::vector<double> dps;
    for (const auto& r : rs) dps.push_back(r.delta_pos);
    EXPECT_EQ(sum.at("conditions")[0].at("delta_pos").at("median").get<double>(), median(dps));
}

TEST(Sweep, RowsPerBin) {
    BenchConfig c = fast_config();
    c.max_scenes = 1;
    SweepConfig sw;
    sw.axis = SweepAxis::position;
    sw.bins = {0.01};
    auto rs = robustness_sweep(small_dataset(), sw, c);
    auto rows = sweep_table(rs, sw);
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_EQ(rows[0].n, rs.size());
    for (const auto& r : rs) EXPECT_NEAR(r.eps_pos, 0.01, 1e-12);
    sw.bins = {0.005, 0.015, 0.025};
    rs = robustness_sweep(small_dataset(), sw, c);
    rows = sweep_table(rs, sw);
    ASSERT_EQ(rows.size(), 3u);
    for (const auto& r : rs) EXPECT_NEAR(r.eps_rot, deg2rad(10.0), 1e-9);
    std::string dat = sweep_dat(rows, sw);
    EXPECT_EQ(std::count(dat.begin(), dat.end(), '\n'), 4);
    sw.bins = {0.05};
    EXPECT_THROW(robustness_sweep(small_dataset(), sw, c), Error);
}

TEST(Sweep, ConfigFromJson) {
    SweepConfig p = sweep_config_from_json(json{{"axis", "position"}, {"bins", {0.005, 0.015}}, {"fixed_other", 10.0}});
    EXPECT_EQ(p.axis, SweepAxis::position);
    EXPECT_EQ(p.bins.size(), 2u);
    EXPECT_NEAR(p.fixed_other, deg2rad(10.0), 1e-12);
    SweepConfig r = sweep_config_from_json(json{{"axis", "rotation"}});
    EXPECT_EQ(r.axis, SweepAxis::rotation);
    ASSERT_EQ(r.bins.size(), 3u);
    EXPECT_NEAR(r.bins[1], deg2rad(15.0), 1e-12);
    EXPECT_THROW(sweep_config_from_json(json{{"axis", "yaw"}}), Error);
}

TEST(Benchmark, UninformedIdenticalKitsRecordsWrongCavities) {
    fs::path objs = temp_dir("same_objs");
    Rng rng(8);
    save_obj((objs / "part.obj").string(), normalize_object(shapes::random_part(rng)));
    fs::path d = temp_dir("same");
    DatasetSpec s;
    s.n_assemblies = 3;
    s.kits_min = s.kits_max = 2;
    s.objects_dir = objs.string();
    s.seed = 3;
    generate_dataset(d, s);
    BenchConfig c = fast_config();
    c.informed = false;
    c.snap.uninformed = true;
    auto rs = run_benchmark(d, c);
    ASSERT_EQ(rs.size(), 6u);
    json sum = summarize(rs);
    EXPECT_GT(sum.at("conditions")[0].at("wrong_cavity_rate").get<double>(), 0.0);
}

TEST(Margins, WiderMarginDominatesAtEqualSnapError) {
    // same scenes and the same 4 mm horizontal placement error, margins 2.5 mm vs 1 cm
    std::size_t ok_tight = 0, ok_wide = 0, n = 0;
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        for (double margin : {0.0025, 0.01}) {
            Scene s = make_random_scene({}, 2, margin, hash_seed(60, seed));
            SimWorld w = make_sim_world(s);
            for (const auto& o : s.objects) {
                Rng rng(hash_seed(61, seed, static_cast<std::uint64_t>(o.id)));
                double a = uniform(rng, 0.0, 2 * kPi);
                Pose place{o.gt_kit.p + o.gt_kit.rotate(Vec3(std::cos(a), std::sin(a), 0.0) * 0.004), o.gt_kit.q};
                Pose grasp = grasp_pose_topdown(w.objects.at(o.id), o.gt_start);
                ExecutionResult r = execute_plan_sim(s, make_plan(grasp, place, o.gt_start, o.id), w);
                bool success = r.success && position_error(place, o.gt_kit) <= margin;
                (margin < 0.005 ? ok_tight : ok_wide) += success;
                n += margin < 0.005;
            }
        }
    }
    EXPECT_GT(ok_wide, ok_tight);
    EXPECT_EQ(ok_wide, n);
}

#ifdef SEAT_BENCH_EXE
TEST(Cli, RunTwiceByteIdentical) {
    fs::path dir = temp_dir("cli");
    json gen = {{"n_assemblies", 2}, {"kits_per_assembly", "1..2"}, {"seed", 31}};
    save_json(dir / "gen.json", gen);
    json cfg = {{"completion", "oracle"}, {"kit_completion", "oracle"}, {"seed", 4},
                {"snap", {{"n_rotations", 31}, {"n_object_points", 256}, {"n_kit_points", 512}}}};
    save_json(dir / "cfg.json", cfg);
    std::string exe = SEAT_BENCH_EXE;
    auto sh = [](const std::string& cmd) { return std::system((cmd + " > /dev/null").c_str()); };
    ASSERT_EQ(sh(exe + " gen --config " + (dir / "gen.json").string() + " --out " + (dir / "ds").string()), 0);
    for (const char* o : {"r1", "r2"})
        ASSERT_EQ(sh(exe + " run --config " + (dir / "cfg.json").string() + " --dataset " + (dir / "ds").string() +
                     " --out " + (dir / o).string()),
                  0);
    std::string a = slurp(dir / "r1" / "records.csv");
    EXPECT_FALSE(a.empty());
    EXPECT_EQ(a, slurp(dir / "r2" / "records.csv"));
    EXPECT_TRUE(fs::exists(dir / "r1" / "summary.json"));
    EXPECT_NE(sh(exe + " run --dataset /nonexistent --out " + (dir / "r3").string() + " 2>/dev/null"), 0);
}
#endif
