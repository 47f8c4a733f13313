#include <chrono>
#include <csignal>
#include <iostream>
#include <map>

#include <CLI11.hpp>

#include "baro/base_station.hpp"
#include "baro/calibration.hpp"
#include "baro/errors.hpp"
#include "baro/eval.hpp"
#include "baro/io.hpp"
#include "baro/log.hpp"
#include "baro/mobile_node.hpp"
#include "baro/simulate.hpp"
#include "cli_helpers.hpp"

namespace {

using namespace baro;

std::int64_t wall_now_ms() {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
}

struct CalibrateArgs {
    std::vector<std::string> logs;
    std::string out;
    double bin_width_s = 30.0;
    double p_thresh = 1.0;
    double t_thresh = 1.0;
};

int cmd_calibrate(const CalibrateArgs& args) {
    std::map<std::string, std::vector<SensorSample>> by_sensor;
    for (const auto& path : args.logs) {
        for (auto& s : read_sensor_log(path)) {
            by_sensor[s.sensor_id].push_back(std::move(s));
        }
    }
    if (by_sensor.size() < 2) {
        throw InvalidInputError("calibration needs at least 2 sensors, found " +
                                std::to_string(by_sensor.size()));
    }
    std::vector<BinnedSeries> series;
    for (auto& [id, samples] : by_sensor) {
        series.push_back(resample(samples, args.bin_width_s));
    }
    const auto bin_ms = static_cast<std::int64_t>(args.bin_width_s * 1000.0);
    const AlignedGrid joined = inner_join(series, bin_ms);
    const AlignedGrid filtered = jump_filter(joined, args.p_thresh, args.t_thresh);
    const OffsetEstimate est = estimate_offsets(filtered, wall_now_ms());

    std::cout << "bin_width_s = " << format_double(args.bin_width_s) << "\n";
    std::cout << "jump_thresholds = " << format_double(args.p_thresh) << " hPa, "
              << format_double(args.t_thresh) << " C\n";
    std::cout << "aligned_rows M = " << joined.rows() << "\n";
    std::cout << "filtered_rows M' = " << filtered.rows() << "\n";
    for (std::size_t i = 0; i < est.table.sensor_ids.size(); ++i) {
        std::cout << est.table.sensor_ids[i]
                  << ": pressure_offset_hpa = " << format_double(est.table.pressure_offset_hpa[i])
                  << ", temperature_offset_c = "
                  << format_double(est.table.temperature_offset_c[i])
                  << ", residual_std_hpa = " << format_double(est.pressure_residual_std[i])
                  << ", residual_std_c = " << format_double(est.temperature_residual_std[i])
                  << "\n";
    }
    save_calibration(args.out, est.table);
    std::cout << "wrote " << args.out << "\n";
    return 0;
}

struct SimulateArgs {
    std::string scenario;
    std::string preset;
    std::string out;
    std::int64_t seed = -1;
    double duration_s = 600.0;
    std::string write_floors;
    std::string dump_scenario;
};

int cmd_simulate(const SimulateArgs& args) {
    sim::Scenario scenario;
    if (!args.scenario.empty()) {
        scenario = sim::load_scenario(args.scenario,
                                      args.seed >= 0
                                          ? std::optional<std::uint64_t>(
                                                static_cast<std::uint64_t>(args.seed))
                                          : std::nullopt);
    } else {
        scenario = sim::preset_scenario(args.preset,
                                        args.seed >= 0 ? static_cast<std::uint64_t>(args.seed) : 1,
                                        args.duration_s);
    }
    if (!args.dump_scenario.empty()) {
        write_text_file(args.dump_scenario, sim::scenario_to_json(scenario));
        std::cout << "wrote " << args.dump_scenario << "\n";
    }
    if (!args.write_floors.empty()) {
        save_floor_plan(args.write_floors, sim::default_building_floor_plan());
        std::cout << "wrote " << args.write_floors << "\n";
    }
    if (!args.out.empty()) {
        const auto result = sim::write_scenario(scenario, args.out);
        for (const auto& p : result.log_paths) std::cout << "wrote " << p << "\n";
        std::cout << "wrote " << result.truth_path << "\n";
        std::cout << "seed = " << scenario.seed << "\n";
    } else if (args.dump_scenario.empty() && args.write_floors.empty()) {
        throw InvalidInputError("simulate: nothing to do (need --out, --dump-scenario or "
                                "--write-floors)");
    }
    return 0;
}

struct EvalArgs {
    std::string estimates;
    std::string base_log;
    std::string mobile_log;
    std::string calib;
    std::string truth;
    std::string floors;
    std::int64_t window_ms = 500;
    bool allow_gaps = false;
    std::string json_out;
    std::string dump_estimates;
    double rate = 3.0;
    std::string p0 = "static:1013.25";
    std::int64_t max_base_age_ms = 2000;
    std::string on_stale = "hold_last";
    std::string ema = "off";
};

int cmd_eval(const EvalArgs& args) {
    const FloorPlan plan = load_floor_plan(args.floors);
    const auto truth = read_truth(args.truth);

    std::vector<AltitudeEstimate> estimates;
    std::vector<std::pair<std::string, std::string>> config;
    config.emplace_back("window_ms", std::to_string(args.window_ms));
    if (!args.estimates.empty()) {
        estimates = read_estimates(args.estimates);
        config.emplace_back("estimates", args.estimates);
    } else {
        const auto ref_cfg = ReferenceProviderConfig::parse(args.p0);
        if (ref_cfg.mode != ReferenceMode::kStatic) {
            throw InvalidInputError("eval batch path supports only a static --p0");
        }
        const auto policy = barocli::parse_policy(args.max_base_age_ms, args.on_stale, args.ema);
        estimates = batch_estimate(read_sensor_log(args.base_log),
                                   read_sensor_log(args.mobile_log),
                                   load_calibration(args.calib), plan, policy, args.rate,
                                   ref_cfg.static_p0_hpa);
        config.emplace_back("base_log", args.base_log);
        config.emplace_back("mobile_log", args.mobile_log);
        config.emplace_back("calib", args.calib);
        config.emplace_back("rate_hz", format_double(args.rate));
        config.emplace_back("p0_hpa", format_double(ref_cfg.static_p0_hpa));
        config.emplace_back("max_base_age_ms", std::to_string(args.max_base_age_ms));
        config.emplace_back("on_stale", args.on_stale);
        config.emplace_back("ema", args.ema);
    }
    if (!args.dump_estimates.empty()) {
        write_estimates(args.dump_estimates, estimates);
    }

    EvalOptions opts;
    opts.window_ms = args.window_ms;
    opts.allow_gaps = args.allow_gaps;
    EvalReport report = evaluate(estimates, truth, plan, opts);
    report.config = std::move(config);
    for (const auto& l : report.uncovered) {
        log_warn("checkpoint " + l + " has no estimate within the window");
    }
    std::cout << report_to_text(report);
    if (!args.json_out.empty()) {
        write_text_file(args.json_out, report_to_json(report));
    }
    return 0;
}

volatile std::sig_atomic_t g_signal = 0;
BaseStationServer* g_server = nullptr;
MobileNode* g_node = nullptr;

void handle_signal(int) {
    g_signal = 1;
    if (g_server) g_server->request_stop();
    if (g_node) g_node->request_stop();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"differential barometric vertical localization toolkit"};
    app.require_subcommand(1);
    std::string log_level = "info";
    app.add_option("--log-level", log_level, "error | warn | info | debug")
        ->capture_default_str();

    CalibrateArgs cal;
    auto* c_cal = app.add_subcommand("calibrate", "estimate per-sensor offsets from collocated logs");
    c_cal->add_option("--log", cal.logs, "sensor log CSV (repeatable)")->required();
    c_cal->add_option("--out", cal.out, "output calibration JSON")->required();
    c_cal->add_option("--bin-width", cal.bin_width_s, "resampling bin width, s")
        ->capture_default_str();
    c_cal->add_option("--p-thresh", cal.p_thresh, "jump filter pressure threshold, hPa")
        ->capture_default_str();
    c_cal->add_option("--t-thresh", cal.t_thresh, "jump filter temperature threshold, C")
        ->capture_default_str();

    SimulateArgs simargs;
    auto* c_sim = app.add_subcommand("simulate", "generate synthetic sensor logs + ground truth");
    auto* sc_opt = c_sim->add_option("--scenario", simargs.scenario, "scenario JSON file");
    c_sim->add_option("--preset", simargs.preset, "building | calibration")->excludes(sc_opt);
    c_sim->add_option("--out", simargs.out, "output directory");
    c_sim->add_option("--seed", simargs.seed, "override scenario seed");
    c_sim->add_option("--duration", simargs.duration_s,
                      "collocation duration for the calibration preset, s")
        ->capture_default_str();
    c_sim->add_option("--write-floors", simargs.write_floors,
                      "also write the default building floor plan here");
    c_sim->add_option("--dump-scenario", simargs.dump_scenario,
                      "write the resolved scenario JSON here");

    EvalArgs ev;
    auto* c_eval = app.add_subcommand("eval", "score estimates against ground-truth checkpoints");
    auto* est_opt = c_eval->add_option("--estimates", ev.estimates, "estimates NDJSON file");
    c_eval->add_option("--base-log", ev.base_log, "raw base sensor log (batch path)")
        ->excludes(est_opt);
    c_eval->add_option("--mobile-log", ev.mobile_log, "raw mobile sensor log (batch path)");
    c_eval->add_option("--calib", ev.calib, "calibration file (batch path)");
    c_eval->add_option("--truth", ev.truth, "ground-truth checkpoint CSV")->required();
    c_eval->add_option("--floors", ev.floors, "floor plan JSON")->required();
    c_eval->add_option("--window-ms", ev.window_ms, "checkpoint matching window, ms")
        ->capture_default_str();
    c_eval->add_flag("--allow-gaps", ev.allow_gaps, "uncovered checkpoints warn instead of fail");
    c_eval->add_option("--json", ev.json_out, "write the report as JSON here");
    c_eval->add_option("--dump-estimates", ev.dump_estimates,
                       "write the evaluated estimates as NDJSON here");
    c_eval->add_option("--rate", ev.rate, "batch path: base emission rate, Hz")
        ->capture_default_str();
    c_eval->add_option("--p0", ev.p0, "batch path: static:V reference")->capture_default_str();
    c_eval->add_option("--max-base-age-ms", ev.max_base_age_ms, "batch path: pairing window")
        ->capture_default_str();
    c_eval->add_option("--on-stale", ev.on_stale, "batch path: hold_last | suppress")
        ->capture_default_str();
    c_eval->add_option("--ema", ev.ema, "batch path: off | ALPHA")->capture_default_str();

    barocli::BaseStationCliOpts base_opts;
    auto* c_base = app.add_subcommand("serve-base", "run the base-station daemon");
    barocli::add_base_station_flags(c_base, base_opts);

    barocli::MobileNodeCliOpts mob_opts;
    auto* c_mob = app.add_subcommand("run-mobile", "run the mobile estimation node");
    barocli::add_mobile_node_flags(c_mob, mob_opts);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        set_log_level(log_level);
        if (c_cal->parsed()) return cmd_calibrate(cal);
        if (c_sim->parsed()) return cmd_simulate(simargs);
        if (c_eval->parsed()) {
            if (ev.estimates.empty() &&
                (ev.base_log.empty() || ev.mobile_log.empty() || ev.calib.empty())) {
                std::cerr << "eval: need --estimates or all of --base-log/--mobile-log/--calib\n";
                return 2;
            }
            return cmd_eval(ev);
        }
        if (c_base->parsed()) {
            std::signal(SIGINT, handle_signal);
            std::signal(SIGTERM, handle_signal);
            BaseStationServer server(barocli::to_base_station_options(base_opts));
            g_server = &server;
            server.start();
            server.join();
            g_server = nullptr;
            return server.failed() ? 4 : 0;
        }
        if (c_mob->parsed()) {
            std::signal(SIGINT, handle_signal);
            std::signal(SIGTERM, handle_signal);
            const int rc = mobile_node_main(barocli::to_mobile_node_options(mob_opts),
                                            [](MobileNode* node) { g_node = node; });
            g_node = nullptr;
            return rc;
        }
        return 2;
    } catch (const std::exception& e) {
        log_error(e.what());
        return barocli::exit_code_for(e);
    }
}
