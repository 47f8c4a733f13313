#include <csignal>

#include <CLI11.hpp>

#include "baro/log.hpp"
#include "baro/mobile_node.hpp"
#include "cli_helpers.hpp"

namespace {
baro::MobileNode* g_node = nullptr;

void handle_signal(int) {
    if (g_node) g_node->request_stop();
}
}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mobile estimation node: pairs base frames with local readings"};
    std::string log_level = "info";
    app.add_option("--log-level", log_level, "error | warn | info | debug")
        ->capture_default_str();
    barocli::MobileNodeCliOpts opts;
    barocli::add_mobile_node_flags(&app, opts);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        baro::set_log_level(log_level);
        std::signal(SIGINT, handle_signal);
        std::signal(SIGTERM, handle_signal);
        return baro::mobile_node_main(barocli::to_mobile_node_options(opts),
                                      [](baro::MobileNode* node) { g_node = node; });
    } catch (const std::exception& e) {
        baro::log_error(e.what());
        return barocli::exit_code_for(e);
    }
}
