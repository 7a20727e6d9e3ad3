// seat-serve: HTTP front end for teleoperated kitting sessions.

#include <csignal>
#include <iostream>

#include <CLI11.hpp>

#include "seat/service.hpp"

namespace {
seat::TeleopService* g_service = nullptr;
void on_signal(int) {
    if (g_service) g_service->server().stop();
}
}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Teleoperation service"};
    seat::ServiceConfig cfg;
    std::string dataset, host = "0.0.0.0", ui, snap_config;
    int port = 8080;
    app.add_option("--dataset", dataset, "dataset directory");
    app.add_option("--port", port, "listen port")->capture_default_str();
    app.add_option("--host", host, "listen address")->capture_default_str();
    app.add_option("--completion", cfg.completion, "object completion: oracle|extrude_ground|partial")
        ->check(CLI::IsMember({"oracle", "extrude_ground", "partial"}))
        ->capture_default_str();
    app.add_option("--kit-completion", cfg.kit_completion, "kit completion mode")->capture_default_str();
    app.add_option("--snap-config", snap_config, "snap config JSON");
    app.add_option("--ui", ui, "static UI directory served at /");
    CLI11_PARSE(app, argc, argv);
    try {
        cfg.dataset = dataset;
        if (!snap_config.empty()) cfg.snap = seat::snap_config_from_json(seat::load_json(snap_config));
        seat::TeleopService svc(cfg);
        if (!ui.empty() && !svc.mount_ui(ui)) {
            std::cerr << "seat-serve: cannot mount UI directory " << ui << "\n";
            return 1;
        }
        g_service = &svc;
        std::signal(SIGINT, on_signal);
        std::signal(SIGTERM, on_signal);
        std::cerr << "listening on " << host << ":" << port << "\n";
        if (!svc.server().listen(host, port)) {
            std::cerr << "seat-serve: cannot listen on " << host << ":" << port << "\n";
            return 1;
        }
    } catch (const std::exception& e) {
        std::cerr << "seat-serve: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
