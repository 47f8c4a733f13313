#include "baro/io.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <system_error>

#include <nlohmann/json.hpp>

#include "baro/errors.hpp"

namespace baro {

namespace {

using nlohmann::json;

[[noreturn]] void row_error(const std::string& path, std::size_t line_no, const std::string& what) {
    throw DataError(path + ":" + std::to_string(line_no) + ": " + what);
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    fields.push_back(cur);
    return fields;
}

double parse_number(const std::string& s, const std::string& path, std::size_t line_no,
                    const char* what) {
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) {
        row_error(path, line_no, std::string("bad ") + what + " value: '" + s + "'");
    }
    return v;
}

std::int64_t parse_int(const std::string& s, const std::string& path, std::size_t line_no,
                       const char* what) {
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
        row_error(path, line_no, std::string("bad ") + what + " value: '" + s + "'");
    }
    return v;
}

}  // namespace

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc()) throw IoError("failed to format double");
    return std::string(buf, ptr);
}

SensorSample parse_sensor_row(const std::string& line, const std::string& path,
                              std::size_t line_no) {
    const auto fields = split_csv(line);
    if (fields.size() != 5) {
        row_error(path, line_no,
                  "expected 5 fields, got " + std::to_string(fields.size()));
    }
    SensorSample s;
    s.sensor_id = fields[0];
    if (s.sensor_id.empty()) row_error(path, line_no, "empty sensor_id");
    s.t_unix_ms = parse_int(fields[1], path, line_no, "t_unix_ms");
    s.p_hpa = parse_number(fields[2], path, line_no, "p_hpa");
    s.temp_c = parse_number(fields[3], path, line_no, "temp_c");
    s.seq = fields[4].empty()
                ? 0
                : static_cast<std::uint64_t>(parse_int(fields[4], path, line_no, "seq"));
    if (!sample_in_envelope(s)) {
        row_error(path, line_no,
                  "reading outside sensor envelope: p=" + fields[2] + " hPa, T=" + fields[3] + " C");
    }
    return s;
}

std::vector<SensorSample> parse_sensor_log(std::istream& in, const std::string& path) {
    std::string line;
    if (!std::getline(in, line)) {
        throw DataError(path + ":1: empty file, expected header '" +
                        std::string(kSensorLogHeader) + "'");
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kSensorLogHeader) {
        throw DataError(path + ":1: bad header '" + line + "', expected '" +
                        std::string(kSensorLogHeader) + "'");
    }
    std::vector<SensorSample> samples;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        samples.push_back(parse_sensor_row(line, path, line_no));
    }
    return samples;
}

std::vector<SensorSample> read_sensor_log(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open sensor log: " + path);
    return parse_sensor_log(in, path);
}

void write_sensor_log(const std::string& path, const std::vector<SensorSample>& samples) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write sensor log: " + path);
    out << kSensorLogHeader << '\n';
    for (const auto& s : samples) {
        out << s.sensor_id << ',' << s.t_unix_ms << ',' << format_double(s.p_hpa) << ','
            << format_double(s.temp_c) << ',' << s.seq << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

std::vector<TruthCheckpoint> read_truth(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open truth file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw DataError(path + ":1: empty truth file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kTruthHeader) {
        throw DataError(path + ":1: bad header '" + line + "', expected '" +
                        std::string(kTruthHeader) + "'");
    }
    std::vector<TruthCheckpoint> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto fields = split_csv(line);
        if (fields.size() != 3) {
            row_error(path, line_no, "expected 3 fields, got " + std::to_string(fields.size()));
        }
        TruthCheckpoint cp;
        cp.label = fields[0];
        if (cp.label.empty()) row_error(path, line_no, "empty label");
        cp.t_unix_ms = parse_int(fields[1], path, line_no, "t_unix_ms");
        cp.height_m = parse_number(fields[2], path, line_no, "height_m");
        rows.push_back(cp);
    }
    return rows;
}

void write_truth(const std::string& path, const std::vector<TruthCheckpoint>& rows) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write truth file: " + path);
    out << kTruthHeader << '\n';
    for (const auto& cp : rows) {
        out << cp.label << ',' << cp.t_unix_ms << ',' << format_double(cp.height_m) << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

std::string calibration_to_json(const CalibrationTable& table) {
    nlohmann::ordered_json j;
    j["version"] = 1;
    j["estimated_at_ms"] = table.estimated_at_ms;
    j["sample_count"] = table.sample_count;
    j["sensors"] = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < table.sensor_ids.size(); ++i) {
        nlohmann::ordered_json s;
        s["id"] = table.sensor_ids[i];
        s["pressure_offset_hpa"] = table.pressure_offset_hpa[i];
        s["temperature_offset_c"] = table.temperature_offset_c[i];
        j["sensors"].push_back(s);
    }
    return j.dump(2) + "\n";
}

CalibrationTable calibration_from_json(const std::string& text, const std::string& context) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw DataError(context + ": invalid JSON: " + e.what());
    }
    try {
        if (j.at("version").get<int>() != 1) {
            throw DataError(context + ": unsupported calibration file version");
        }
        CalibrationTable t;
        t.estimated_at_ms = j.value("estimated_at_ms", std::int64_t{0});
        t.sample_count = j.value("sample_count", std::uint64_t{0});
        for (const auto& s : j.at("sensors")) {
            t.sensor_ids.push_back(s.at("id").get<std::string>());
            t.pressure_offset_hpa.push_back(s.at("pressure_offset_hpa").get<double>());
            t.temperature_offset_c.push_back(s.at("temperature_offset_c").get<double>());
        }
        if (t.sensor_ids.empty()) throw DataError(context + ": calibration has no sensors");
        return t;
    } catch (const json::exception& e) {
        throw DataError(context + ": bad calibration file: " + e.what());
    }
}

void save_calibration(const std::string& path, const CalibrationTable& table) {
    write_text_file(path, calibration_to_json(table));
}

CalibrationTable load_calibration(const std::string& path) {
    return calibration_from_json(read_text_file(path), path);
}

std::string floor_plan_to_json(const FloorPlan& plan) {
    nlohmann::ordered_json j;
    j["version"] = 1;
    j["reference_frame"] = plan.reference_frame();
    j["floors"] = nlohmann::ordered_json::array();
    for (const auto& e : plan.entries()) {
        nlohmann::ordered_json f;
        f["label"] = e.label;
        f["height_m"] = e.height_m;
        j["floors"].push_back(f);
    }
    return j.dump(2) + "\n";
}

FloorPlan floor_plan_from_json(const std::string& text, const std::string& context) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw DataError(context + ": invalid JSON: " + e.what());
    }
    try {
        if (j.at("version").get<int>() != 1) {
            throw DataError(context + ": unsupported floor plan version");
        }
        std::vector<FloorPlan::Entry> entries;
        for (const auto& f : j.at("floors")) {
            entries.push_back({f.at("label").get<std::string>(), f.at("height_m").get<double>()});
        }
        return FloorPlan(entries, j.value("reference_frame",
                                          std::string("heights relative to base sensor plane")));
    } catch (const json::exception& e) {
        throw DataError(context + ": bad floor plan: " + e.what());
    }
}

void save_floor_plan(const std::string& path, const FloorPlan& plan) {
    write_text_file(path, floor_plan_to_json(plan));
}

FloorPlan load_floor_plan(const std::string& path) {
    return floor_plan_from_json(read_text_file(path), path);
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    const auto parent = std::filesystem::path(path).parent_path();
    if (!parent.empty()) {
        std::error_code ec;
        std::filesystem::create_directories(parent, ec);
        if (ec) throw IoError("cannot create directory " + parent.string() + ": " + ec.message());
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write file: " + path);
    out << content;
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace baro
