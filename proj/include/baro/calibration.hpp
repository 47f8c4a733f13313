#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "baro/types.hpp"

namespace baro {

// One sensor's stream averaged onto epoch-aligned bins.
struct BinnedSeries {
    std::string sensor_id;
    std::vector<std::int64_t> timestamps;  // bin left edges, ms
    std::vector<double> p_hpa;
    std::vector<double> temp_c;
};

// Inner-joined grid of N binned series; no missing cells.
struct AlignedGrid {
    std::vector<std::string> sensor_ids;           // lexicographic order
    std::vector<std::int64_t> timestamps;          // strictly increasing
    std::vector<std::vector<double>> p_hpa;        // [row][sensor]
    std::vector<std::vector<double>> temp_c;       // [row][sensor]
    std::int64_t bin_width_ms = 30000;

    std::size_t rows() const { return timestamps.size(); }
    std::size_t sensors() const { return sensor_ids.size(); }
};

// Per-sensor constant offsets under the zero-sum gauge.
struct CalibrationTable {
    std::vector<std::string> sensor_ids;
    std::vector<double> pressure_offset_hpa;
    std::vector<double> temperature_offset_c;
    std::int64_t estimated_at_ms = 0;
    std::uint64_t sample_count = 0;  // M' rows used

    // Index of sensor_id, or -1.
    int find(const std::string& sensor_id) const;
    double pressure_offset(const std::string& sensor_id) const;     // throws MissingCalibrationError
    double temperature_offset(const std::string& sensor_id) const;  // throws MissingCalibrationError
};

// Cross-sensor mean signal per grid row.
struct CommonSignal {
    std::vector<std::int64_t> timestamps;
    std::vector<double> p_star_hpa;
    std::vector<double> t_star_c;
};

struct OffsetEstimate {
    CalibrationTable table;
    CommonSignal common;
    // Std dev of per-row residuals (p_i - p_star - beta_i), per sensor.
    std::vector<double> pressure_residual_std;
    std::vector<double> temperature_residual_std;
};

// Average samples of one sensor into [k*bin, (k+1)*bin) bins; empty bins are
// absent; the stream is sorted by timestamp first if needed.
BinnedSeries resample(const std::vector<SensorSample>& stream, double bin_width_s);

// Keep exactly the timestamps present in every series; columns in
// lexicographic sensor_id order. Requires N >= 2 on the same bin width.
AlignedGrid inner_join(const std::vector<BinnedSeries>& series, std::int64_t bin_width_ms);

// Drop row m unless, for every sensor, the change from the preceding row of
// the INPUT grid stays within both thresholds. The first row is always kept.
AlignedGrid jump_filter(const AlignedGrid& grid, double p_thresh_hpa = 1.0,
                        double t_thresh_c = 1.0);

// Closed-form constrained least squares: p_star = per-row mean, offsets =
// per-sensor time-mean deviations, re-projected to an exact zero-sum gauge.
OffsetEstimate estimate_offsets(const AlignedGrid& grid, std::int64_t estimated_at_ms = 0);

// Subtract the learned offsets. Unknown sensor_id throws MissingCalibrationError.
SensorSample apply_calibration(const SensorSample& sample, const CalibrationTable& table);

// Calibration warn-after-age policy (offsets drift with sensor aging).
inline constexpr std::int64_t kDefaultCalibStaleMs = 30LL * 24 * 3600 * 1000;

bool calibration_stale(const CalibrationTable& table, std::int64_t now_ms,
                       std::int64_t max_age_ms = kDefaultCalibStaleMs);

}  // namespace baro
