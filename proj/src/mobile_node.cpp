#include "baro/mobile_node.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <thread>

#include "baro/errors.hpp"
#include "baro/io.hpp"
#include "baro/log.hpp"
#include "baro/net.hpp"
#include "baro/queue.hpp"
#include "baro/simulate.hpp"

namespace baro {

namespace {

std::int64_t wall_now_ms() {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
}

}  // namespace

void PairingPolicy::validate() const {
    if (max_base_age_ms <= 0) throw InvalidInputError("max_base_age_ms must be positive");
    if (ema_alpha && !(*ema_alpha > 0.0 && *ema_alpha <= 1.0)) {
        throw InvalidInputError("EMA alpha must lie in (0, 1]");
    }
}

PairingEngine::PairingEngine(const FloorPlan& plan, PairingPolicy policy, IsaConstants consts)
    : plan_(plan), policy_(policy), consts_(consts) {
    policy_.validate();
    if (plan_.empty()) throw InvalidInputError("floor plan is empty");
}

void PairingEngine::push_frame(const BaseFrame& frame) {
    if (!frames_.empty() && frame.t_unix_ms < frames_.back().t_unix_ms) {
        ++stats_.malformed;  // frames must not go back in time
        return;
    }
    frames_.push_back(frame);
}

void PairingEngine::push_mobile(const SensorSample& calibrated, bool degraded,
                                std::int64_t arrival_wall_ms) {
    if (calibrated.t_unix_ms < last_mobile_ms_) {
        ++stats_.malformed;
        return;
    }
    last_mobile_ms_ = calibrated.t_unix_ms;
    pending_.push_back({calibrated, degraded, arrival_wall_ms});
}

std::optional<AltitudeEstimate> PairingEngine::decide(const Pending& p) {
    const std::int64_t t_m = p.sample.t_unix_ms;
    // Drop frames that can no longer be the nearest candidate for this or
    // any later sample.
    while (frames_.size() >= 2 && frames_[1].t_unix_ms <= t_m) frames_.pop_front();
    if (frames_.empty()) {
        ++stats_.gaps;  // nothing to hold yet
        return std::nullopt;
    }
    const BaseFrame* best = &frames_[0];
    if (frames_.size() >= 2) {
        const auto d0 = std::llabs(frames_[0].t_unix_ms - t_m);
        const auto d1 = std::llabs(frames_[1].t_unix_ms - t_m);
        if (d1 < d0) best = &frames_[1];
    }
    const std::int64_t age = std::llabs(best->t_unix_ms - t_m);
    const bool stale = age > policy_.max_base_age_ms;
    if (stale && policy_.on_stale == OnStale::kSuppress) {
        ++stats_.gaps;
        return std::nullopt;
    }

    const AtmosphereReference ref{best->p0_hpa, 0, ReferenceSource::kStatic};
    const double h_b = pressure_to_height(best->p_hpa, best->temp_c, ref, consts_);
    const double h_m_raw = pressure_to_height(p.sample.p_hpa, p.sample.temp_c, ref, consts_);
    double dh = h_m_raw - h_b;
    double h_m = h_m_raw;
    if (policy_.ema_alpha) {
        const double a = *policy_.ema_alpha;
        dh = ema_state_ ? a * dh + (1.0 - a) * *ema_state_ : dh;
        ema_state_ = dh;
        h_m = h_b + dh;  // keep dh == h_m - h_b exact under smoothing
    }

    AltitudeEstimate est;
    est.t_unix_ms = t_m;
    est.h_m = h_m;
    est.h_b = h_b;
    est.dh_m = dh;
    const auto fa = floor_index(dh, plan_);
    est.floor_index = fa.index;
    est.floor_label = fa.label;
    est.base_age_ms = age;
    const bool degraded_inputs = p.degraded || !best->calibrated();
    est.quality = stale ? EstimateQuality::kHeldBase
                        : (degraded_inputs ? EstimateQuality::kDegraded
                                           : EstimateQuality::kFresh);
    if (est.quality == EstimateQuality::kHeldBase) ++stats_.held;
    ++stats_.emitted;
    return est;
}

std::vector<AltitudeEstimate> PairingEngine::drain(std::int64_t now_wall_ms, bool base_eof,
                                                   std::int64_t hold_grace_ms) {
    std::vector<AltitudeEstimate> out;
    while (!pending_.empty()) {
        const Pending& head = pending_.front();
        const bool frame_past =
            !frames_.empty() && frames_.back().t_unix_ms >= head.sample.t_unix_ms;
        const bool grace_expired = hold_grace_ms >= 0 && !frames_.empty() &&
                                   now_wall_ms - head.arrival_wall_ms > hold_grace_ms;
        const bool starved = hold_grace_ms >= 0 && frames_.empty() &&
                             now_wall_ms - head.arrival_wall_ms > hold_grace_ms;
        if (!frame_past && !base_eof && !grace_expired && !starved) break;
        if (auto est = decide(head)) out.push_back(std::move(*est));
        pending_.pop_front();
    }
    return out;
}

std::vector<AltitudeEstimate> batch_estimate(const std::vector<SensorSample>& base_log,
                                             const std::vector<SensorSample>& mobile_log,
                                             const CalibrationTable& calib,
                                             const FloorPlan& plan, const PairingPolicy& policy,
                                             double base_rate_hz, double p0_hpa,
                                             bool allow_uncalibrated, PairingStats* stats_out) {
    if (!reference_plausible(p0_hpa)) {
        throw InvalidInputError("batch reference pressure outside plausible range");
    }
    PairingEngine engine(plan, policy);

    // Mirror the daemon: calibrate, downsample to the emission rate, frame.
    TickDownsampler downsampler(base_rate_hz);
    std::uint64_t seq = 0;
    bool base_calibrated = true;
    double base_p_off = 0.0, base_t_off = 0.0;
    if (!base_log.empty()) {
        if (calib.find(base_log.front().sensor_id) >= 0) {
            base_p_off = calib.pressure_offset(base_log.front().sensor_id);
            base_t_off = calib.temperature_offset(base_log.front().sensor_id);
        } else if (allow_uncalibrated) {
            base_calibrated = false;
        } else {
            throw MissingCalibrationError("base sensor '" + base_log.front().sensor_id +
                                          "' has no calibration entry");
        }
    }
    auto frame_of = [&](const SensorSample& s) {
        BaseFrame f;
        f.sensor_id = s.sensor_id;
        f.seq = seq++;
        f.t_unix_ms = s.t_unix_ms;
        f.p_hpa = s.p_hpa;
        f.temp_c = s.temp_c;
        f.p0_hpa = p0_hpa;
        f.flags = base_calibrated ? kFlagCalibrated : 0;
        return f;
    };
    const std::string base_id = base_log.empty() ? "" : base_log.front().sensor_id;
    for (const auto& raw : base_log) {
        if (!sample_in_envelope(raw) || raw.sensor_id != base_id) continue;
        SensorSample cal = raw;
        if (base_calibrated) {
            cal.p_hpa -= base_p_off;
            cal.temp_c -= base_t_off;
        }
        if (auto done = downsampler.feed(cal)) engine.push_frame(frame_of(*done));
    }
    if (auto done = downsampler.flush()) engine.push_frame(frame_of(*done));

    bool mobile_calibrated = true;
    double mob_p_off = 0.0, mob_t_off = 0.0;
    if (!mobile_log.empty()) {
        if (calib.find(mobile_log.front().sensor_id) >= 0) {
            mob_p_off = calib.pressure_offset(mobile_log.front().sensor_id);
            mob_t_off = calib.temperature_offset(mobile_log.front().sensor_id);
        } else if (allow_uncalibrated) {
            mobile_calibrated = false;
        } else {
            throw MissingCalibrationError("mobile sensor '" + mobile_log.front().sensor_id +
                                          "' has no calibration entry");
        }
    }
    std::vector<AltitudeEstimate> out;
    const std::string mobile_id = mobile_log.empty() ? "" : mobile_log.front().sensor_id;
    for (const auto& raw : mobile_log) {
        if (!sample_in_envelope(raw) || raw.sensor_id != mobile_id) continue;
        SensorSample cal = raw;
        if (mobile_calibrated) {
            cal.p_hpa -= mob_p_off;
            cal.temp_c -= mob_t_off;
        }
        engine.push_mobile(cal, !mobile_calibrated, 0);
        for (auto& est : engine.drain(0, false, -1)) out.push_back(std::move(est));
    }
    for (auto& est : engine.drain(0, true, -1)) out.push_back(std::move(est));
    if (stats_out) *stats_out = engine.stats();
    return out;
}

MobileNode::MobileNode(MobileNodeOptions options) : options_(std::move(options)) {
    options_.policy.validate();
    if (options_.hold_grace_ms < 0) options_.hold_grace_ms = options_.policy.max_base_age_ms;
}

void MobileNode::set_sink(std::function<void(const AltitudeEstimate&)> sink) {
    sink_ = std::move(sink);
}

MobileNodeStats MobileNode::run() {
    const CalibrationTable calib = load_calibration(options_.calib_path);
    const FloorPlan plan = load_floor_plan(options_.floors_path);
    if (calibration_stale(calib, wall_now_ms())) {
        log_warn("calibration file " + options_.calib_path +
                 " is older than 30 days; consider re-estimating offsets");
    }

    MobileNodeStats stats;
    PairingEngine engine(plan, options_.policy);

    // Mobile source samples, pre-loaded for replay/sim and paced by the
    // feeder thread; stdin streams rows as they come.
    std::vector<SensorSample> mobile_samples;
    if (options_.mobile_source.kind == SourceKind::kReplay) {
        mobile_samples = read_sensor_log(options_.mobile_source.arg);
    } else if (options_.mobile_source.kind == SourceKind::kSim) {
        auto scenario = sim::load_scenario(options_.mobile_source.arg, options_.sim_seed);
        const sim::SensorModel* mobile_model = nullptr;
        for (const auto& s : scenario.sensors) {
            if (s.mobile) {
                mobile_model = &s;
                break;
            }
        }
        if (!mobile_model) {
            throw InvalidInputError("scenario has no mobile sensor: " +
                                    options_.mobile_source.arg);
        }
        mobile_samples = sim::gen_sensor_stream(scenario, *mobile_model);
    }

    bool mobile_calibrated = true;
    double mob_p_off = 0.0, mob_t_off = 0.0;
    std::string mobile_id;
    auto bind_mobile_offsets = [&](const std::string& id) {
        mobile_id = id;
        if (calib.find(id) >= 0) {
            mob_p_off = calib.pressure_offset(id);
            mob_t_off = calib.temperature_offset(id);
        } else if (options_.allow_uncalibrated) {
            mobile_calibrated = false;
            log_warn("estimating with uncalibrated mobile sensor " + id);
        } else {
            throw MissingCalibrationError("mobile sensor '" + id + "' has no calibration entry");
        }
    };
    if (!mobile_samples.empty()) bind_mobile_offsets(mobile_samples.front().sensor_id);

    BoundedQueue<BaseFrame> frame_queue(1024);
    BoundedQueue<SensorSample> sample_queue(1024);

    std::mutex net_stats_mutex;
    std::uint64_t frames_received = 0, frames_malformed = 0, seq_gaps = 0, reconnects = 0;

    // Base stream reader with exponential-backoff reconnects.
    const auto [host, port] = parse_endpoint(options_.base_endpoint);
    std::thread base_reader([&, host = host, port = port] {
        std::int64_t backoff = options_.reconnect_initial_ms;
        bool ever_connected = false;
        while (!stop_.load()) {
            TcpStream stream;
            try {
                stream = TcpStream::connect(host, port, 1000);
            } catch (const NetError& e) {
                log_warn("base endpoint unreachable (" + std::string(e.what()) + "), retrying in " +
                         std::to_string(backoff) + " ms");
                const auto deadline =
                    std::chrono::steady_clock::now() + std::chrono::milliseconds(backoff);
                while (!stop_.load() && std::chrono::steady_clock::now() < deadline) {
                    std::this_thread::sleep_for(std::chrono::milliseconds(20));
                }
                backoff = std::min<std::int64_t>(backoff * 2, options_.reconnect_cap_ms);
                continue;
            }
            backoff = options_.reconnect_initial_ms;
            if (ever_connected) {
                std::lock_guard lock(net_stats_mutex);
                ++reconnects;
            }
            ever_connected = true;
            log_info("connected to base station " + options_.base_endpoint);
            std::optional<std::uint64_t> last_seq;
            while (!stop_.load()) {
                bool timed_out = false;
                auto line = stream.read_line(200, &timed_out);
                if (!line) {
                    if (timed_out) continue;
                    break;  // EOF / error -> reconnect
                }
                try {
                    BaseFrame f = frame_from_line(*line);
                    {
                        std::lock_guard lock(net_stats_mutex);
                        ++frames_received;
                        if (last_seq && f.seq != *last_seq + 1) ++seq_gaps;
                        last_seq = f.seq;
                    }
                    frame_queue.push(f);
                } catch (const DataError& e) {
                    std::lock_guard lock(net_stats_mutex);
                    ++frames_malformed;
                    log_warn(e.what());
                }
            }
            log_info("base stream closed");
        }
        frame_queue.close();
    });

    // Mobile feeder.
    std::thread mobile_feeder([&] {
        try {
            if (options_.mobile_source.kind == SourceKind::kStdin) {
                std::string line;
                std::size_t line_no = 0;
                bool saw_header = false;
                while (!stop_.load() && std::getline(std::cin, line)) {
                    ++line_no;
                    if (!saw_header) {
                        saw_header = true;
                        continue;
                    }
                    if (line.empty()) continue;
                    try {
                        sample_queue.push(parse_sensor_row(line, "stdin", line_no));
                    } catch (const DataError& e) {
                        log_warn(e.what());
                    }
                }
            } else if (!mobile_samples.empty()) {
                const std::int64_t t0 = mobile_samples.front().t_unix_ms;
                const auto w0 = std::chrono::steady_clock::now();
                for (const auto& s : mobile_samples) {
                    const auto target =
                        w0 + std::chrono::microseconds(static_cast<std::int64_t>(
                                 static_cast<double>(s.t_unix_ms - t0) * 1000.0 / options_.speed));
                    while (!stop_.load() && std::chrono::steady_clock::now() < target) {
                        std::this_thread::sleep_for(std::chrono::milliseconds(5));
                    }
                    if (stop_.load()) break;
                    sample_queue.push(s);
                }
            }
        } catch (const std::exception& e) {
            log_error(std::string("mobile source failed: ") + e.what());
        }
        sample_queue.close();
    });

    std::ofstream out_file;
    if (!options_.out_path.empty()) {
        out_file.open(options_.out_path, std::ios::app);
        if (!out_file) throw IoError("cannot open estimates output: " + options_.out_path);
    }
    auto emit = [&](const AltitudeEstimate& est) {
        const std::string line = estimate_to_line(est);
        if (options_.emit_stdout) {
            std::cout << line << '\n';
            std::cout.flush();
        }
        if (out_file.is_open()) out_file << line << '\n';
        if (sink_) sink_(est);
    };

    bool mobile_eof = false;
    while (!stop_.load()) {
        bool progressed = false;
        while (auto f = frame_queue.pop_for(std::chrono::milliseconds(0))) {
            engine.push_frame(*f);
            progressed = true;
        }
        while (auto s = sample_queue.pop_for(std::chrono::milliseconds(0))) {
            if (!sample_in_envelope(*s)) {
                ++stats.samples_skipped;
                continue;
            }
            ++stats.samples_read;
            if (mobile_id.empty()) bind_mobile_offsets(s->sensor_id);
            if (s->sensor_id != mobile_id) {
                ++stats.samples_skipped;
                continue;
            }
            SensorSample cal = *s;
            if (mobile_calibrated) {
                cal.p_hpa -= mob_p_off;
                cal.temp_c -= mob_t_off;
            }
            engine.push_mobile(cal, !mobile_calibrated, wall_now_ms());
            progressed = true;
        }
        for (const auto& est : engine.drain(wall_now_ms(), false, options_.hold_grace_ms)) {
            emit(est);
        }
        if (!mobile_eof && sample_queue.closed() && sample_queue.size() == 0) mobile_eof = true;
        if (mobile_eof && engine.pending() == 0) break;
        if (!progressed) std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }

    stop_.store(true);
    frame_queue.close();
    sample_queue.close();
    if (base_reader.joinable()) base_reader.join();
    if (mobile_feeder.joinable()) mobile_feeder.join();

    stats.pairing = engine.stats();
    {
        std::lock_guard lock(net_stats_mutex);
        stats.frames_received = frames_received;
        stats.frames_malformed = frames_malformed;
        stats.seq_gaps = seq_gaps;
        stats.reconnects = reconnects;
    }
    return stats;
}

int mobile_node_main(const MobileNodeOptions& options,
                     const std::function<void(MobileNode*)>& on_created) {
    try {
        MobileNode node(options);
        if (on_created) on_created(&node);
        const auto stats = node.run();
        // Final machine-readable stats line for harnesses.
        std::cerr << "{\"estimates\":" << stats.pairing.emitted << ",\"gaps\":"
                  << stats.pairing.gaps << ",\"held\":" << stats.pairing.held
                  << ",\"frames\":" << stats.frames_received << ",\"malformed_frames\":"
                  << stats.frames_malformed << ",\"seq_gaps\":" << stats.seq_gaps
                  << ",\"reconnects\":" << stats.reconnects << "}" << std::endl;
        return 0;
    } catch (const NetError& e) {
        log_error(e.what());
        return 4;
    } catch (const Error& e) {
        log_error(e.what());
        return 3;
    } catch (const std::exception& e) {
        log_error(e.what());
        return 4;
    }
}

}  // namespace baro
