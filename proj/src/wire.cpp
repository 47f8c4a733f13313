#include "baro/wire.hpp"

#include <nlohmann/json.hpp>

#include "baro/errors.hpp"

namespace baro {

namespace {
using ojson = nlohmann::ordered_json;
using nlohmann::json;
}  // namespace

std::string frame_to_line(const BaseFrame& frame) {
    ojson j;
    j["v"] = frame.version;
    j["id"] = frame.sensor_id;
    j["seq"] = frame.seq;
    j["t_unix_ms"] = frame.t_unix_ms;
    j["p_hpa"] = frame.p_hpa;
    j["temp_c"] = frame.temp_c;
    j["p0_hpa"] = frame.p0_hpa;
    j["flags"] = frame.flags;
    return j.dump();
}

BaseFrame frame_from_line(const std::string& line) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed frame: ") + e.what());
    }
    try {
        BaseFrame f;
        f.version = j.at("v").get<int>();
        if (f.version != kWireVersion) {
            throw DataError("unsupported frame version " + std::to_string(f.version));
        }
        f.sensor_id = j.at("id").get<std::string>();
        f.seq = j.at("seq").get<std::uint64_t>();
        f.t_unix_ms = j.at("t_unix_ms").get<std::int64_t>();
        f.p_hpa = j.at("p_hpa").get<double>();
        f.temp_c = j.at("temp_c").get<double>();
        f.p0_hpa = j.at("p0_hpa").get<double>();
        f.flags = j.at("flags").get<std::uint32_t>();
        return f;
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed frame: ") + e.what());
    }
}

std::string estimate_to_line(const AltitudeEstimate& est) {
    ojson j;
    j["t_unix_ms"] = est.t_unix_ms;
    j["h_m"] = est.h_m;
    j["h_b"] = est.h_b;
    j["dh_m"] = est.dh_m;
    j["floor_index"] = est.floor_index;
    j["floor_label"] = est.floor_label;
    j["base_age_ms"] = est.base_age_ms;
    j["quality"] = quality_name(est.quality);
    return j.dump();
}

AltitudeEstimate estimate_from_line(const std::string& line) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed estimate record: ") + e.what());
    }
    try {
        AltitudeEstimate e;
        e.t_unix_ms = j.at("t_unix_ms").get<std::int64_t>();
        e.h_m = j.at("h_m").get<double>();
        e.h_b = j.at("h_b").get<double>();
        e.dh_m = j.at("dh_m").get<double>();
        e.floor_index = j.at("floor_index").get<int>();
        e.floor_label = j.at("floor_label").get<std::string>();
        e.base_age_ms = j.at("base_age_ms").get<std::int64_t>();
        e.quality = quality_from_name(j.at("quality").get<std::string>());
        return e;
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed estimate record: ") + e.what());
    }
}

}  // namespace baro
