#pragma once

#include <CLI11.hpp>
#include <cstdint>
#include <optional>
#include <string>

#include "baro/base_station.hpp"
#include "baro/errors.hpp"
#include "baro/mobile_node.hpp"

namespace barocli {

// Raw CLI bindings for the base-station daemon; converted after parsing.
struct BaseStationCliOpts {
    std::uint16_t port = 0;
    double rate = 3.0;
    std::string calib;
    std::string source;
    std::string p0 = "static:1013.25";
    double speed = 1.0;
    double p0_refresh_s = 60.0;
    double p0_ttl_s = 900.0;
    bool allow_uncalibrated = false;
    int send_buf = 0;
    unsigned wait_subscribers = 0;
    std::int64_t seed = -1;
};

inline void add_base_station_flags(CLI::App* app, BaseStationCliOpts& o) {
    app->add_option("--port", o.port, "TCP port to listen on (0 = ephemeral)")->required();
    app->add_option("--rate", o.rate, "frame emission rate in Hz")->capture_default_str();
    app->add_option("--calib", o.calib, "calibration file (JSON)")->required();
    app->add_option("--source", o.source, "replay:FILE | sim:SCENARIO | stdin")->required();
    app->add_option("--p0", o.p0, "static:V | file:PATH | http:URL")->capture_default_str();
    app->add_option("--speed", o.speed, "replay/sim pacing multiplier")->capture_default_str();
    app->add_option("--p0-refresh", o.p0_refresh_s, "reference refresh interval, s")
        ->capture_default_str();
    app->add_option("--p0-ttl", o.p0_ttl_s, "reference staleness TTL, s")->capture_default_str();
    app->add_flag("--allow-uncalibrated", o.allow_uncalibrated,
                  "serve raw readings when the sensor has no calibration entry");
    app->add_option("--send-buf", o.send_buf, "socket send buffer bytes (testing aid)")
        ->group("");
    app->add_option("--wait-subscribers", o.wait_subscribers,
                    "hold the source until N subscribers are connected");
    app->add_option("--seed", o.seed, "override scenario seed (sim source)");
}

inline baro::BaseStationOptions to_base_station_options(const BaseStationCliOpts& o) {
    baro::BaseStationOptions opts;
    opts.port = o.port;
    opts.rate_hz = o.rate;
    opts.calib_path = o.calib;
    opts.source = baro::SourceSpec::parse(o.source);
    opts.reference = baro::ReferenceProviderConfig::parse(o.p0);
    opts.reference.refresh_interval_s = o.p0_refresh_s;
    opts.reference.ttl_s = o.p0_ttl_s;
    opts.reference.validate();
    opts.speed = o.speed;
    opts.allow_uncalibrated = o.allow_uncalibrated;
    opts.send_buffer_bytes = o.send_buf;
    opts.wait_subscribers = o.wait_subscribers;
    if (o.seed >= 0) opts.sim_seed = static_cast<std::uint64_t>(o.seed);
    return opts;
}

struct MobileNodeCliOpts {
    std::string base;
    std::string mobile;
    std::string calib;
    std::string floors;
    std::int64_t max_base_age_ms = 2000;
    std::string on_stale = "hold_last";
    std::string ema = "off";
    double speed = 1.0;
    std::string out;
    bool no_stdout = false;
    bool allow_uncalibrated = false;
    std::int64_t hold_grace_ms = -1;
    std::int64_t seed = -1;
    std::int64_t reconnect_initial_ms = 1000;
    std::int64_t reconnect_cap_ms = 30000;
};

inline void add_mobile_node_flags(CLI::App* app, MobileNodeCliOpts& o) {
    app->add_option("--base", o.base, "base station endpoint host:port")->required();
    app->add_option("--mobile", o.mobile, "replay:FILE | sim:SCENARIO | stdin")->required();
    app->add_option("--calib", o.calib, "calibration file (JSON)")->required();
    app->add_option("--floors", o.floors, "floor plan file (JSON)")->required();
    app->add_option("--max-base-age-ms", o.max_base_age_ms, "pairing window, ms")
        ->capture_default_str();
    app->add_option("--on-stale", o.on_stale, "hold_last | suppress")->capture_default_str();
    app->add_option("--ema", o.ema, "off | ALPHA in (0,1]")->capture_default_str();
    app->add_option("--speed", o.speed, "replay/sim pacing multiplier")->capture_default_str();
    app->add_option("--out", o.out, "append estimates to this NDJSON file");
    app->add_flag("--no-stdout", o.no_stdout, "do not write estimates to stdout");
    app->add_flag("--allow-uncalibrated", o.allow_uncalibrated,
                  "estimate with raw readings, flagged degraded");
    app->add_option("--hold-grace-ms", o.hold_grace_ms,
                    "live staleness decision delay (-1 = max-base-age)");
    app->add_option("--seed", o.seed, "override scenario seed (sim source)");
    app->add_option("--reconnect-initial-ms", o.reconnect_initial_ms,
                    "first reconnect backoff")->group("");
    app->add_option("--reconnect-cap-ms", o.reconnect_cap_ms, "reconnect backoff cap")->group("");
}

inline baro::PairingPolicy parse_policy(std::int64_t max_base_age_ms, const std::string& on_stale,
                                        const std::string& ema) {
    baro::PairingPolicy policy;
    policy.max_base_age_ms = max_base_age_ms;
    if (on_stale == "hold_last") {
        policy.on_stale = baro::OnStale::kHoldLast;
    } else if (on_stale == "suppress") {
        policy.on_stale = baro::OnStale::kSuppress;
    } else {
        throw baro::InvalidInputError("--on-stale must be hold_last or suppress, got '" +
                                      on_stale + "'");
    }
    if (ema != "off") {
        try {
            policy.ema_alpha = std::stod(ema);
        } catch (const std::exception&) {
            throw baro::InvalidInputError("--ema must be 'off' or a number, got '" + ema + "'");
        }
    }
    policy.validate();
    return policy;
}

inline baro::MobileNodeOptions to_mobile_node_options(const MobileNodeCliOpts& o) {
    baro::MobileNodeOptions opts;
    opts.base_endpoint = o.base;
    opts.mobile_source = baro::SourceSpec::parse(o.mobile);
    opts.calib_path = o.calib;
    opts.floors_path = o.floors;
    opts.policy = parse_policy(o.max_base_age_ms, o.on_stale, o.ema);
    opts.speed = o.speed;
    opts.out_path = o.out;
    opts.emit_stdout = !o.no_stdout;
    opts.allow_uncalibrated = o.allow_uncalibrated;
    opts.hold_grace_ms = o.hold_grace_ms;
    if (o.seed >= 0) opts.sim_seed = static_cast<std::uint64_t>(o.seed);
    opts.reconnect_initial_ms = o.reconnect_initial_ms;
    opts.reconnect_cap_ms = o.reconnect_cap_ms;
    return opts;
}

// Exit-code policy: 0 ok, 2 usage, 3 data, 4 runtime/network.
inline int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const baro::NetError*>(&e)) return 4;
    if (dynamic_cast<const baro::IoError*>(&e)) return 4;
    if (dynamic_cast<const baro::Error*>(&e)) return 3;
    return 4;
}

}  // namespace barocli
