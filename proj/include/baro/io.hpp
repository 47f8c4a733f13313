#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "baro/atmosphere.hpp"
#include "baro/calibration.hpp"
#include "baro/types.hpp"

namespace baro {

// Shortest round-trip decimal form of a double (std::to_chars).
std::string format_double(double v);

inline constexpr const char* kSensorLogHeader = "sensor_id,t_unix_ms,p_hpa,temp_c,seq";
inline constexpr const char* kTruthHeader = "label,t_unix_ms,height_m";

// Sensor log CSV. Malformed or out-of-envelope rows raise DataError with
// "path:line:" context. A file may carry several sensor ids.
std::vector<SensorSample> read_sensor_log(const std::string& path);
std::vector<SensorSample> parse_sensor_log(std::istream& in, const std::string& path);
void write_sensor_log(const std::string& path, const std::vector<SensorSample>& samples);

// Parse one CSV data row; line_no is 1-based and only used for error context.
SensorSample parse_sensor_row(const std::string& line, const std::string& path, std::size_t line_no);

struct TruthCheckpoint {
    std::string label;
    std::int64_t t_unix_ms = 0;
    double height_m = 0.0;
};

std::vector<TruthCheckpoint> read_truth(const std::string& path);
void write_truth(const std::string& path, const std::vector<TruthCheckpoint>& rows);

// Versioned calibration file (JSON).
void save_calibration(const std::string& path, const CalibrationTable& table);
CalibrationTable load_calibration(const std::string& path);
std::string calibration_to_json(const CalibrationTable& table);
CalibrationTable calibration_from_json(const std::string& text, const std::string& context);

// Floor plan file (JSON).
void save_floor_plan(const std::string& path, const FloorPlan& plan);
FloorPlan load_floor_plan(const std::string& path);
std::string floor_plan_to_json(const FloorPlan& plan);
FloorPlan floor_plan_from_json(const std::string& text, const std::string& context);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace baro
