#pragma once

#include <atomic>
#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "baro/atmosphere.hpp"
#include "baro/base_station.hpp"
#include "baro/calibration.hpp"
#include "baro/types.hpp"
#include "baro/wire.hpp"

namespace baro {

enum class OnStale { kHoldLast, kSuppress };

struct PairingPolicy {
    std::int64_t max_base_age_ms = 2000;
    OnStale on_stale = OnStale::kHoldLast;
    std::optional<double> ema_alpha;  // nullopt = no smoothing

    void validate() const;
};

struct PairingStats {
    std::uint64_t emitted = 0;
    std::uint64_t gaps = 0;       // suppressed (or undecidable) mobile samples
    std::uint64_t held = 0;       // estimates flagged held_base
    std::uint64_t malformed = 0;  // dropped out-of-order/invalid inputs
};

// Core pairing/estimation state machine. Base frames and mobile samples are
// pushed in timestamp order; decisions follow three triggers: a frame at or
// past the sample time arrived, the base stream ended, or the hold grace
// expired (live outages). Offline and online paths share this engine, which
// is what makes their outputs identical record-for-record.
class PairingEngine {
public:
    PairingEngine(const FloorPlan& plan, PairingPolicy policy,
                  IsaConstants consts = {});

    void push_frame(const BaseFrame& frame);
    // `degraded` marks samples that could not be calibrated.
    void push_mobile(const SensorSample& calibrated, bool degraded,
                     std::int64_t arrival_wall_ms);

    // Decide every pending sample currently decidable; returns the estimates
    // in mobile-timestamp order. hold_grace_ms < 0 disables the grace path.
    std::vector<AltitudeEstimate> drain(std::int64_t now_wall_ms, bool base_eof,
                                        std::int64_t hold_grace_ms);

    const PairingStats& stats() const { return stats_; }
    std::size_t pending() const { return pending_.size(); }

private:
    struct Pending {
        SensorSample sample;
        bool degraded = false;
        std::int64_t arrival_wall_ms = 0;
    };

    std::optional<AltitudeEstimate> decide(const Pending& p);

    FloorPlan plan_;
    PairingPolicy policy_;
    IsaConstants consts_;
    std::deque<BaseFrame> frames_;
    std::deque<Pending> pending_;
    std::optional<double> ema_state_;
    std::int64_t last_mobile_ms_ = INT64_MIN;
    PairingStats stats_;
};

// Offline twin of the node: applies the daemon's downsampling/calibration to
// the raw base log, then pairs against the mobile log.
std::vector<AltitudeEstimate> batch_estimate(const std::vector<SensorSample>& base_log,
                                             const std::vector<SensorSample>& mobile_log,
                                             const CalibrationTable& calib,
                                             const FloorPlan& plan,
                                             const PairingPolicy& policy,
                                             double base_rate_hz = 3.0,
                                             double p0_hpa = 1013.25,
                                             bool allow_uncalibrated = false,
                                             PairingStats* stats_out = nullptr);

struct MobileNodeOptions {
    std::string base_endpoint;  // host:port
    SourceSpec mobile_source;
    std::string calib_path;
    std::string floors_path;
    PairingPolicy policy;
    double speed = 1.0;
    std::string out_path;  // optional NDJSON append target
    bool emit_stdout = true;
    bool allow_uncalibrated = false;
    std::int64_t hold_grace_ms = -1;  // -1: defaults to policy.max_base_age_ms
    std::optional<std::uint64_t> sim_seed;
    std::int64_t reconnect_initial_ms = 1000;
    std::int64_t reconnect_cap_ms = 30000;
};

struct MobileNodeStats {
    PairingStats pairing;
    std::uint64_t frames_received = 0;
    std::uint64_t frames_malformed = 0;
    std::uint64_t seq_gaps = 0;  // within-connection sequence jumps
    std::uint64_t reconnects = 0;
    std::uint64_t samples_read = 0;
    std::uint64_t samples_skipped = 0;
};

// Long-running estimator; runs until the mobile source is exhausted and all
// pending samples are decided.
class MobileNode {
public:
    explicit MobileNode(MobileNodeOptions options);

    // Optional sink invoked for every estimate (tests); files/stdout still
    // receive records when configured.
    void set_sink(std::function<void(const AltitudeEstimate&)> sink);

    MobileNodeStats run();
    void request_stop() { stop_.store(true); }

private:
    MobileNodeOptions options_;
    std::function<void(const AltitudeEstimate&)> sink_;
    std::atomic<bool> stop_{false};
};

// on_created, when set, receives the node before it runs (signal wiring).
int mobile_node_main(const MobileNodeOptions& options,
                     const std::function<void(MobileNode*)>& on_created = {});

}  // namespace baro
