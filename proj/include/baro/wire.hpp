#pragma once

#include <cstdint>
#include <string>

#include "baro/types.hpp"

namespace baro {

inline constexpr int kWireVersion = 1;

// Frame flag bits.
inline constexpr std::uint32_t kFlagCalibrated = 1u << 0;
inline constexpr std::uint32_t kFlagP0Stale = 1u << 1;

// One base-station broadcast record.
struct BaseFrame {
    int version = kWireVersion;
    std::string sensor_id;
    std::uint64_t seq = 0;
    std::int64_t t_unix_ms = 0;
    double p_hpa = 0.0;   // calibrated
    double temp_c = 0.0;  // calibrated
    double p0_hpa = 1013.25;
    std::uint32_t flags = kFlagCalibrated;

    bool calibrated() const { return flags & kFlagCalibrated; }
    bool p0_stale() const { return flags & kFlagP0Stale; }
};

// One NDJSON line, keys exactly v,id,seq,t_unix_ms,p_hpa,temp_c,p0_hpa,flags.
// No trailing newline; numbers use shortest round-trip form.
std::string frame_to_line(const BaseFrame& frame);
// Parses one line; throws DataError on malformed input or version mismatch.
BaseFrame frame_from_line(const std::string& line);

// Estimate record, keys exactly
// t_unix_ms,h_m,h_b,dh_m,floor_index,floor_label,base_age_ms,quality.
std::string estimate_to_line(const AltitudeEstimate& est);
AltitudeEstimate estimate_from_line(const std::string& line);

}  // namespace baro
