#include <csignal>

#include <CLI11.hpp>

#include "baro/base_station.hpp"
#include "baro/log.hpp"
#include "cli_helpers.hpp"

namespace {
baro::BaseStationServer* g_server = nullptr;

void handle_signal(int) {
    if (g_server) g_server->request_stop();
}
}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"base-station daemon: calibrates and streams barometer frames"};
    std::string log_level = "info";
    app.add_option("--log-level", log_level, "error | warn | info | debug")
        ->capture_default_str();
    barocli::BaseStationCliOpts opts;
    barocli::add_base_station_flags(&app, opts);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        baro::set_log_level(log_level);
        baro::BaseStationServer server(barocli::to_base_station_options(opts));
        g_server = &server;
        std::signal(SIGINT, handle_signal);
        std::signal(SIGTERM, handle_signal);
        server.start();
        const auto stats = server.join();
        baro::log_info("emitted " + std::to_string(stats.frames_emitted) + " frames to " +
                       std::to_string(stats.clients_served) + " subscriber(s)");
        return server.failed() ? 4 : 0;
    } catch (const std::exception& e) {
        baro::log_error(e.what());
        return barocli::exit_code_for(e);
    }
}
