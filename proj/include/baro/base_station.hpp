#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "baro/calibration.hpp"
#include "baro/net.hpp"
#include "baro/types.hpp"
#include "baro/wire.hpp"

namespace baro {

enum class ReferenceMode { kStatic, kFile, kHttp };

struct ReferenceProviderConfig {
    ReferenceMode mode = ReferenceMode::kStatic;
    double static_p0_hpa = 1013.25;
    std::string path;  // file mode
    std::string url;   // http mode
    double refresh_interval_s = 60.0;
    double ttl_s = 900.0;

    void validate() const;  // refresh_interval < ttl, plausible static value

    // "static:V" | "file:PATH" | "http:URL"
    static ReferenceProviderConfig parse(const std::string& spec);
};

// Keeps the latest reference pressure; on fetch failure the last known value
// is retained and flagged stale once older than the TTL.
class ReferenceProvider {
public:
    explicit ReferenceProvider(ReferenceProviderConfig config);

    // Initial fetch; throws NetError/IoError/DataError if no value can be
    // obtained at startup.
    void prime(std::int64_t now_ms);

    // Periodic refresh; failures are swallowed (staleness takes over).
    void refresh(std::int64_t now_ms);

    AtmosphereReference current() const;
    bool stale(std::int64_t now_ms) const;
    const ReferenceProviderConfig& config() const { return config_; }

private:
    std::optional<double> fetch_once();

    ReferenceProviderConfig config_;
    mutable std::mutex mutex_;
    AtmosphereReference ref_;
    bool primed_ = false;
};

// Source-time tick downsampler, latest sample per tick. The same instance
// backs the daemon and the offline batch path so both emit identical frames.
class TickDownsampler {
public:
    explicit TickDownsampler(double rate_hz);

    // Returns the completed tick's sample when `s` opens a later tick.
    std::optional<SensorSample> feed(const SensorSample& s);
    std::optional<SensorSample> flush();

private:
    std::int64_t tick_of(std::int64_t t_ms) const;

    double rate_hz_;
    std::optional<SensorSample> pending_;
    std::int64_t pending_tick_ = 0;
};

enum class SourceKind { kReplay, kSim, kStdin };

struct SourceSpec {
    SourceKind kind = SourceKind::kReplay;
    std::string arg;  // file path or scenario path

    // "replay:FILE" | "sim:SCENARIO" | "stdin"
    static SourceSpec parse(const std::string& spec);
};

struct BaseStationOptions {
    std::uint16_t port = 0;  // 0 = ephemeral
    double rate_hz = 3.0;
    std::string calib_path;
    SourceSpec source;
    ReferenceProviderConfig reference;
    double speed = 1.0;  // replay/sim pacing multiplier
    bool allow_uncalibrated = false;
    int send_buffer_bytes = 0;              // 0 = OS default
    std::optional<std::uint64_t> sim_seed;  // overrides scenario seed
    // Producer holds the source until this many subscribers are connected;
    // lets harnesses guarantee nobody misses the first frames.
    unsigned wait_subscribers = 0;
};

struct BaseStationStats {
    std::uint64_t samples_read = 0;
    std::uint64_t samples_skipped = 0;
    std::uint64_t frames_emitted = 0;
    std::uint64_t clients_served = 0;
    std::uint64_t clients_dropped = 0;
};

// Reads the base sensor source, calibrates, downsamples to the emission rate
// and fans frames out to every connected subscriber over NDJSON/TCP.
class BaseStationServer {
public:
    explicit BaseStationServer(BaseStationOptions options);
    ~BaseStationServer();

    // Binds the port, primes the reference and spawns worker threads.
    // Throws on bind failure, missing calibration or unusable reference.
    void start();

    std::uint16_t port() const { return port_; }
    void request_stop();
    bool failed() const { return failed_.load(); }

    // Blocks until the source is exhausted (or stop requested) and all
    // subscriber queues have drained.
    BaseStationStats join();

private:
    struct Client;

    void producer_loop();
    void accept_loop();
    void refresher_loop();
    void broadcast(const BaseFrame& frame);
    void emit_sample(const SensorSample& calibrated);
    std::vector<SensorSample> load_offline_source() const;

    BaseStationOptions options_;
    CalibrationTable calib_;
    std::unique_ptr<ReferenceProvider> reference_;
    TcpListener listener_;
    std::uint16_t port_ = 0;

    std::atomic<bool> stop_{false};
    std::atomic<bool> failed_{false};
    std::vector<SensorSample> offline_samples_;
    std::thread producer_;
    std::thread acceptor_;
    std::thread refresher_;

    std::mutex clients_mutex_;
    std::vector<std::shared_ptr<Client>> clients_;

    std::mutex stats_mutex_;
    BaseStationStats stats_;
    std::uint64_t next_seq_ = 0;
    std::string base_sensor_id_;
};

// Parses options from daemon-style flags and runs to completion.
int base_station_main(const BaseStationOptions& options);

}  // namespace baro
