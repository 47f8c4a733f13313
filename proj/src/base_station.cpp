#include "baro/base_station.hpp"

#include <sys/socket.h>

#include <chrono>
#include <cmath>
#include <iostream>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "baro/errors.hpp"
#include "baro/io.hpp"
#include "baro/log.hpp"
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

void ReferenceProviderConfig::validate() const {
    if (!(refresh_interval_s > 0.0) || !(ttl_s > 0.0)) {
        throw InvalidInputError("reference refresh interval and ttl must be positive");
    }
    if (refresh_interval_s >= ttl_s) {
        throw InvalidInputError("reference refresh interval must be smaller than ttl");
    }
    if (mode == ReferenceMode::kStatic && !reference_plausible(static_p0_hpa)) {
        throw InvalidInputError("static reference pressure outside plausible range");
    }
    if (mode == ReferenceMode::kFile && path.empty()) {
        throw InvalidInputError("file reference mode needs a path");
    }
    if (mode == ReferenceMode::kHttp && url.empty()) {
        throw InvalidInputError("http reference mode needs a url");
    }
}

ReferenceProviderConfig ReferenceProviderConfig::parse(const std::string& spec) {
    ReferenceProviderConfig cfg;
    if (spec.rfind("static:", 0) == 0) {
        cfg.mode = ReferenceMode::kStatic;
        try {
            cfg.static_p0_hpa = std::stod(spec.substr(7));
        } catch (const std::exception&) {
            throw InvalidInputError("bad static reference value in '" + spec + "'");
        }
    } else if (spec.rfind("file:", 0) == 0) {
        cfg.mode = ReferenceMode::kFile;
        cfg.path = spec.substr(5);
    } else if (spec.rfind("http://", 0) == 0 || spec.rfind("http:", 0) == 0) {
        cfg.mode = ReferenceMode::kHttp;
        cfg.url = spec.rfind("http://", 0) == 0 ? spec : spec.substr(5);
    } else {
        throw InvalidInputError("expected static:V, file:PATH or http:URL, got '" + spec + "'");
    }
    cfg.validate();
    return cfg;
}

ReferenceProvider::ReferenceProvider(ReferenceProviderConfig config)
    : config_(std::move(config)) {
    config_.validate();
}

std::optional<double> ReferenceProvider::fetch_once() {
    try {
        if (config_.mode == ReferenceMode::kStatic) {
            return config_.static_p0_hpa;
        }
        std::string body;
        if (config_.mode == ReferenceMode::kFile) {
            body = read_text_file(config_.path);
        } else {
            std::string base = config_.url;
            std::string path = "/";
            const auto scheme_end = base.find("://");
            const auto slash = base.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
            if (slash != std::string::npos) {
                path = base.substr(slash);
                base = base.substr(0, slash);
            }
            httplib::Client cli(base);
            cli.set_connection_timeout(2, 0);
            cli.set_read_timeout(2, 0);
            auto res = cli.Get(path);
            if (!res || res->status != 200) {
                log_warn("reference fetch failed: " + config_.url +
                         (res ? " status " + std::to_string(res->status) : " unreachable"));
                return std::nullopt;
            }
            body = res->body;
        }
        const auto j = nlohmann::json::parse(body);
        const double p0 = j.at("p0_hpa").get<double>();
        if (!reference_plausible(p0)) {
            log_warn("reference value " + format_double(p0) + " hPa outside plausible range");
            return std::nullopt;
        }
        return p0;
    } catch (const std::exception& e) {
        log_warn(std::string("reference fetch failed: ") + e.what());
        return std::nullopt;
    }
}

void ReferenceProvider::prime(std::int64_t now_ms) {
    const auto value = fetch_once();
    if (!value) {
        throw NetError("could not obtain an initial reference pressure (" +
                       std::string(config_.mode == ReferenceMode::kFile ? config_.path
                                                                        : config_.url) +
                       ")");
    }
    std::lock_guard lock(mutex_);
    ref_.p0_hpa = *value;
    ref_.fetched_at_ms = now_ms;
    ref_.source = config_.mode == ReferenceMode::kStatic  ? ReferenceSource::kStatic
                  : config_.mode == ReferenceMode::kFile ? ReferenceSource::kFile
                                                         : ReferenceSource::kHttp;
    primed_ = true;
}

void ReferenceProvider::refresh(std::int64_t now_ms) {
    const auto value = fetch_once();
    if (!value) return;  // keep last known value; staleness takes over
    std::lock_guard lock(mutex_);
    ref_.p0_hpa = *value;
    ref_.fetched_at_ms = now_ms;
}

AtmosphereReference ReferenceProvider::current() const {
    std::lock_guard lock(mutex_);
    return ref_;
}

bool ReferenceProvider::stale(std::int64_t now_ms) const {
    if (config_.mode == ReferenceMode::kStatic) return false;
    std::lock_guard lock(mutex_);
    return !primed_ ||
           now_ms - ref_.fetched_at_ms > static_cast<std::int64_t>(config_.ttl_s * 1000.0);
}

TickDownsampler::TickDownsampler(double rate_hz) : rate_hz_(rate_hz) {
    if (!(rate_hz > 0.0)) throw InvalidInputError("emission rate must be positive");
}

std::int64_t TickDownsampler::tick_of(std::int64_t t_ms) const {
    return static_cast<std::int64_t>(std::floor(static_cast<double>(t_ms) * rate_hz_ / 1000.0));
}

std::optional<SensorSample> TickDownsampler::feed(const SensorSample& s) {
    const std::int64_t tick = tick_of(s.t_unix_ms);
    if (!pending_) {
        pending_ = s;
        pending_tick_ = tick;
        return std::nullopt;
    }
    if (tick < pending_tick_) return std::nullopt;  // late sample, drop
    if (tick == pending_tick_) {
        if (s.t_unix_ms >= pending_->t_unix_ms) pending_ = s;
        return std::nullopt;
    }
    SensorSample done = *pending_;
    pending_ = s;
    pending_tick_ = tick;
    return done;
}

std::optional<SensorSample> TickDownsampler::flush() {
    std::optional<SensorSample> done;
    pending_.swap(done);
    return done;
}

SourceSpec SourceSpec::parse(const std::string& spec) {
    SourceSpec s;
    if (spec == "stdin") {
        s.kind = SourceKind::kStdin;
    } else if (spec.rfind("replay:", 0) == 0) {
        s.kind = SourceKind::kReplay;
        s.arg = spec.substr(7);
    } else if (spec.rfind("sim:", 0) == 0) {
        s.kind = SourceKind::kSim;
        s.arg = spec.substr(4);
    } else {
        throw InvalidInputError("expected replay:FILE, sim:SCENARIO or stdin, got '" + spec + "'");
    }
    if (s.kind != SourceKind::kStdin && s.arg.empty()) {
        throw InvalidInputError("source spec is missing its argument: '" + spec + "'");
    }
    return s;
}

struct BaseStationServer::Client {
    explicit Client(TcpStream s) : stream(std::move(s)), queue(64) {}
    TcpStream stream;
    BoundedQueue<std::string> queue;
    std::thread writer;
    std::atomic<bool> dead{false};
};

BaseStationServer::BaseStationServer(BaseStationOptions options)
    : options_(std::move(options)) {}

BaseStationServer::~BaseStationServer() {
    request_stop();
    if (producer_.joinable() || acceptor_.joinable() || refresher_.joinable()) {
        join();
    }
}

std::vector<SensorSample> BaseStationServer::load_offline_source() const {
    if (options_.source.kind == SourceKind::kReplay) {
        return read_sensor_log(options_.source.arg);
    }
    auto scenario = sim::load_scenario(options_.source.arg, options_.sim_seed);
    for (const auto& sensor : scenario.sensors) {
        if (!sensor.mobile) return sim::gen_sensor_stream(scenario, sensor);
    }
    throw InvalidInputError("scenario has no stationary sensor to serve as the base: " +
                            options_.source.arg);
}

void BaseStationServer::start() {
    calib_ = load_calibration(options_.calib_path);
    if (calibration_stale(calib_, wall_now_ms())) {
        log_warn("calibration file " + options_.calib_path +
                 " is older than 30 days; consider re-estimating offsets");
    }
    reference_ = std::make_unique<ReferenceProvider>(options_.reference);
    reference_->prime(wall_now_ms());
    if (options_.source.kind != SourceKind::kStdin) {
        offline_samples_ = load_offline_source();
        if (!offline_samples_.empty() && calib_.find(offline_samples_.front().sensor_id) < 0 &&
            !options_.allow_uncalibrated) {
            throw MissingCalibrationError("base sensor '" + offline_samples_.front().sensor_id +
                                          "' has no calibration entry");
        }
    }
    listener_ = TcpListener::bind(options_.port);
    port_ = listener_.port();
    log_info("base station listening on port " + std::to_string(port_));

    producer_ = std::thread([this] { producer_loop(); });
    acceptor_ = std::thread([this] { accept_loop(); });
    if (options_.reference.mode != ReferenceMode::kStatic) {
        refresher_ = std::thread([this] { refresher_loop(); });
    }
}

void BaseStationServer::request_stop() { stop_.store(true); }

BaseStationStats BaseStationServer::join() {
    if (producer_.joinable()) producer_.join();
    stop_.store(true);
    if (acceptor_.joinable()) acceptor_.join();
    if (refresher_.joinable()) refresher_.join();
    std::vector<std::shared_ptr<Client>> clients;
    {
        std::lock_guard lock(clients_mutex_);
        clients.swap(clients_);
    }
    for (auto& c : clients) {
        c->queue.close();
        if (c->writer.joinable()) c->writer.join();
    }
    listener_.close();
    std::lock_guard lock(stats_mutex_);
    return stats_;
}

void BaseStationServer::broadcast(const BaseFrame& frame) {
    const std::string line = frame_to_line(frame) + "\n";
    std::lock_guard lock(clients_mutex_);
    for (auto& c : clients_) {
        if (c->dead.load()) continue;
        if (!c->queue.try_push(line)) {
            // Slow consumer: queue bound reached, drop the connection.
            c->dead.store(true);
            c->queue.close();
            c->stream.shutdown_both();
            std::lock_guard slock(stats_mutex_);
            ++stats_.clients_dropped;
            log_warn("dropping slow subscriber (queue overflow)");
        }
    }
    std::erase_if(clients_, [](const std::shared_ptr<Client>& c) {
        if (c->dead.load() && !c->writer.joinable()) return true;
        return false;
    });
}

void BaseStationServer::emit_sample(const SensorSample& calibrated) {
    BaseFrame frame;
    frame.sensor_id = calibrated.sensor_id;
    frame.seq = next_seq_++;
    frame.t_unix_ms = calibrated.t_unix_ms;
    frame.p_hpa = calibrated.p_hpa;
    frame.temp_c = calibrated.temp_c;
    const auto ref = reference_->current();
    frame.p0_hpa = ref.p0_hpa;
    frame.flags = 0;
    if (!options_.allow_uncalibrated) frame.flags |= kFlagCalibrated;
    if (reference_->stale(wall_now_ms())) frame.flags |= kFlagP0Stale;
    broadcast(frame);
    std::lock_guard lock(stats_mutex_);
    ++stats_.frames_emitted;
}

void BaseStationServer::producer_loop() {
    TickDownsampler downsampler(options_.rate_hz);
    bool have_offsets = false;
    double p_off = 0.0, t_off = 0.0;

    auto process = [&](const SensorSample& raw, std::int64_t replay_t0,
                       std::chrono::steady_clock::time_point wall_t0, bool paced) -> bool {
        if (stop_.load()) return false;
        {
            std::lock_guard lock(stats_mutex_);
            ++stats_.samples_read;
        }
        if (!sample_in_envelope(raw)) {
            std::lock_guard lock(stats_mutex_);
            ++stats_.samples_skipped;
            return true;
        }
        if (base_sensor_id_.empty()) {
            base_sensor_id_ = raw.sensor_id;
            if (calib_.find(base_sensor_id_) < 0) {
                if (!options_.allow_uncalibrated) {
                    throw MissingCalibrationError("base sensor '" + base_sensor_id_ +
                                                  "' has no calibration entry");
                }
                log_warn("serving uncalibrated readings for sensor " + base_sensor_id_);
            } else {
                p_off = calib_.pressure_offset(base_sensor_id_);
                t_off = calib_.temperature_offset(base_sensor_id_);
                have_offsets = true;
            }
        }
        if (raw.sensor_id != base_sensor_id_) {
            std::lock_guard lock(stats_mutex_);
            ++stats_.samples_skipped;
            return true;
        }
        if (paced) {
            const auto target =
                wall_t0 + std::chrono::microseconds(static_cast<std::int64_t>(
                              static_cast<double>(raw.t_unix_ms - replay_t0) * 1000.0 /
                              options_.speed));
            while (!stop_.load()) {
                const auto now = std::chrono::steady_clock::now();
                if (now >= target) break;
                const auto remain = target - now;
                std::this_thread::sleep_for(
                    remain > std::chrono::milliseconds(50) ? std::chrono::milliseconds(50)
                                                           : remain);
            }
            if (stop_.load()) return false;
        }
        SensorSample cal = raw;
        if (have_offsets && !options_.allow_uncalibrated) {
            cal.p_hpa -= p_off;
            cal.temp_c -= t_off;
        }
        if (auto done = downsampler.feed(cal)) emit_sample(*done);
        return true;
    };

    try {
        while (options_.wait_subscribers > 0 && !stop_.load()) {
            {
                std::lock_guard lock(clients_mutex_);
                if (clients_.size() >= options_.wait_subscribers) break;
            }
            std::this_thread::sleep_for(std::chrono::milliseconds(10));
        }
        if (options_.source.kind == SourceKind::kStdin) {
            std::string line;
            std::size_t line_no = 0;
            bool saw_header = false;
            while (!stop_.load() && std::getline(std::cin, line)) {
                ++line_no;
                if (!saw_header) {
                    saw_header = true;
                    continue;  // header row
                }
                if (line.empty()) continue;
                try {
                    const auto s = parse_sensor_row(line, "stdin", line_no);
                    if (!process(s, 0, {}, false)) break;
                } catch (const DataError& e) {
                    log_warn(e.what());
                    std::lock_guard lock(stats_mutex_);
                    ++stats_.samples_skipped;
                }
            }
        } else {
            if (!offline_samples_.empty()) {
                const std::int64_t t0 = offline_samples_.front().t_unix_ms;
                const auto w0 = std::chrono::steady_clock::now();
                for (const auto& s : offline_samples_) {
                    if (!process(s, t0, w0, true)) break;
                }
            }
        }
        if (!stop_.load()) {
            if (auto done = downsampler.flush()) emit_sample(*done);
        }
    } catch (const std::exception& e) {
        log_error(std::string("base station producer failed: ") + e.what());
        failed_.store(true);
    }
    // Source exhausted: close queues so writers drain and finish.
    std::lock_guard lock(clients_mutex_);
    for (auto& c : clients_) c->queue.close();
    stop_.store(true);
}

void BaseStationServer::accept_loop() {
    while (!stop_.load()) {
        auto accepted = listener_.accept(100);
        if (!accepted) continue;
        if (options_.send_buffer_bytes > 0) {
            setsockopt(accepted->fd(), SOL_SOCKET, SO_SNDBUF, &options_.send_buffer_bytes,
                       sizeof(options_.send_buffer_bytes));
        }
        auto client = std::make_shared<Client>(std::move(*accepted));
        client->writer = std::thread([client] {
            while (auto line = client->queue.pop()) {
                if (!client->stream.write_all(*line)) {
                    client->dead.store(true);
                    client->queue.close();
                    return;
                }
            }
            client->stream.shutdown_both();
        });
        {
            std::lock_guard lock(clients_mutex_);
            clients_.push_back(client);
        }
        {
            std::lock_guard lock(stats_mutex_);
            ++stats_.clients_served;
        }
        log_info("subscriber connected");
    }
}

void BaseStationServer::refresher_loop() {
    const auto interval =
        std::chrono::milliseconds(static_cast<std::int64_t>(options_.reference.refresh_interval_s * 1000.0));
    auto next = std::chrono::steady_clock::now() + interval;
    while (!stop_.load()) {
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
        if (std::chrono::steady_clock::now() >= next) {
            reference_->refresh(wall_now_ms());
            next += interval;
        }
    }
}

int base_station_main(const BaseStationOptions& options) {
    try {
        BaseStationServer server(options);
        server.start();
        const auto stats = server.join();
        log_info("base station done: " + std::to_string(stats.frames_emitted) + " frames, " +
                 std::to_string(stats.clients_served) + " subscribers");
        return server.failed() ? 4 : 0;
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
