// seat-bench: dataset generation, evaluation runs and robustness sweeps.

#include <iostream>

#include <CLI11.hpp>

#include "seat/bench.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Snap benchmark"};
    app.require_subcommand(1);
    std::string config, out, dataset;

    auto* run = app.add_subcommand("run", "evaluate a dataset");
    auto* sweep = app.add_subcommand("sweep", "hint-error robustness sweep");
    auto* gen = app.add_subcommand("gen", "generate a dataset");
    for (auto* sc : {run, sweep}) {
        sc->add_option("--config", config, "bench config JSON");
        sc->add_option("--dataset", dataset, "dataset directory")->required();
        sc->add_option("--out", out, "output directory")->required();
    }
    gen->add_option("--config", config, "dataset spec JSON");
    gen->add_option("--out", out, "dataset directory")->required();
    CLI11_PARSE(app, argc, argv);

    try {
        seat::json j = config.empty() ? seat::json::object() : seat::load_json(config);
        if (gen->parsed()) {
            seat::json m = seat::generate_dataset(out, seat::dataset_spec_from_json(j));
            std::cout << "wrote " << m.at("n_assemblies").get<int>() << " assemblies to " << out << "\n";
            return 0;
        }
        seat::json cfg_j = j;
        cfg_j.erase("sweep");
        seat::BenchConfig cfg = seat::bench_config_from_json(cfg_j);
        seat::json extra = {{"config", j}, {"dataset", seat::fs::path(dataset).filename().string()}};
        if (run->parsed()) {
            auto rs = seat::run_benchmark(dataset, cfg);
            seat::write_reports(out, rs, extra);
            std::cout << seat::summarize(rs).dump(2) << "\n";
        } else {
            seat::SweepConfig sw = seat::sweep_config_from_json(j.value("sweep", seat::json::object()));
            auto rs = seat::robustness_sweep(dataset, sw, cfg);
            auto rows = seat::sweep_table(rs, sw);
            seat::json table = seat::json::array();
            for (const auto& r : rows) table.push_back({{"bin", r.bin}, {"n", r.n}, {"median", r.median}, {"p20", r.p20}, {"p80", r.p80}});
            extra["sweep"] = {{"axis", sw.axis == seat::SweepAxis::position ? "position" : "rotation"}, {"rows", table}};
            seat::write_reports(out, rs, extra);
            seat::write_text(seat::fs::path(out) / "sweep.dat", seat::sweep_dat(rows, sw));
            std::cout << seat::sweep_dat(rows, sw);
        }
    } catch (const std::exception& e) {
        std::cerr << "seat-bench: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
