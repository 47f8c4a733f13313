#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace baro {

// One timestamped (pressure, temperature) reading from an identified sensor.
struct SensorSample {
    std::string sensor_id;
    std::int64_t t_unix_ms = 0;
    double p_hpa = 0.0;
    double temp_c = 0.0;
    std::uint64_t seq = 0;
};

// Sensor operating envelope; readings outside are rejected at ingest.
inline constexpr double kMinPressureHpa = 300.0;
inline constexpr double kMaxPressureHpa = 1200.0;
inline constexpr double kMinTempC = -40.0;
inline constexpr double kMaxTempC = 85.0;

bool sample_in_envelope(const SensorSample& s);

enum class ReferenceSource { kStatic, kFile, kHttp };

// Sea-level reference pressure and where it came from.
struct AtmosphereReference {
    double p0_hpa = 1013.25;
    std::int64_t fetched_at_ms = 0;
    ReferenceSource source = ReferenceSource::kStatic;
};

// Historical terrestrial extremes; a reference outside this range is bogus.
inline constexpr double kMinP0Hpa = 870.0;
inline constexpr double kMaxP0Hpa = 1085.0;

bool reference_plausible(double p0_hpa);

enum class EstimateQuality { kFresh, kHeldBase, kDegraded };

const char* quality_name(EstimateQuality q);
EstimateQuality quality_from_name(const std::string& name);

// Paired base+mobile heights with floor assignment.
struct AltitudeEstimate {
    std::int64_t t_unix_ms = 0;  // mobile sample time
    double h_m = 0.0;
    double h_b = 0.0;
    double dh_m = 0.0;  // always h_m - h_b
    int floor_index = -1;
    std::string floor_label;
    std::int64_t base_age_ms = 0;  // |t_mobile - t_base| of the paired frame
    EstimateQuality quality = EstimateQuality::kFresh;
};

}  // namespace baro
