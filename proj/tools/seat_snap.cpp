// seat-snap: snaps one object of a saved scene given a user hint.

#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "seat/bench.hpp"

namespace {

seat::Pose parse_hint(const std::string& s) {
    std::vector<double> v;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        try {
            v.push_back(std::stod(tok));
        } catch (const std::exception&) {
            seat::fail(seat::ErrorCode::invalid_argument, "bad hint component '" + tok + "'");
        }
    }
    seat::require(v.size() == 7, seat::ErrorCode::invalid_argument, "hint must be x,y,z,qx,qy,qz,qw");
    return seat::pose_from_json({{"p", {v[0], v[1], v[2]}}, {"q", {v[3], v[4], v[5], v[6]}}});
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Snap an object into its kit"};
    std::string obs, hint, config, completion = "oracle", kit_completion = "visual_hull";
    int object = 0;
    bool uninformed = false;
    app.add_option("--obs", obs, "scene directory (scene.json + meshes)")->required();
    app.add_option("--object", object, "object id")->required();
    app.add_option("--hint", hint, "x,y,z,qx,qy,qz,qw");
    app.add_option("--config", config, "snap config JSON");
    app.add_option("--completion", completion, "object completion mode")->capture_default_str();
    app.add_option("--kit-completion", kit_completion, "kit completion mode")->capture_default_str();
    app.add_flag("--uninformed", uninformed, "ignore the hint and search the whole kit");
    CLI11_PARSE(app, argc, argv);
    try {
        seat::SnapConfig cfg;
        if (!config.empty()) cfg = seat::snap_config_from_json(seat::load_json(config));
        if (uninformed) cfg.uninformed = true;
        std::optional<seat::Pose> h;
        if (!hint.empty()) h = parse_hint(hint);
        seat::require(cfg.uninformed || h.has_value(), seat::ErrorCode::invalid_argument, "informed snapping needs --hint");
        seat::Scene scene = seat::load_scene(obs);
        seat::Observation o = seat::observe(scene);
        seat::CompletedScene c = seat::complete_scene(scene, o, completion, kit_completion);
        seat::SnapResult r = seat::snap_object(o, c, object, cfg.uninformed ? std::nullopt : h, cfg);
        std::cout << seat::snap_result_to_json(r).dump(2) << "\n";
    } catch (const std::exception& e) {
        std::cerr << "seat-snap: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
