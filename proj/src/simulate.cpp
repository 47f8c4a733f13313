#include "baro/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>

#include <nlohmann/json.hpp>

#include "baro/errors.hpp"

namespace baro::sim {

namespace {

using nlohmann::json;

constexpr double kCheckpointSpacingM = 2.3;
constexpr double kStairDwellS = 20.0;
constexpr double kStairRampS = 15.0;
constexpr double kElevatorDwellS = 15.0;
constexpr double kElevatorTravelS = 5.0;
constexpr double kElevatorWalkS = 10.0;

std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

TrajectoryProfile::TrajectoryProfile(std::vector<Segment> segments,
                                     std::vector<Checkpoint> checkpoints)
    : segments_(std::move(segments)), checkpoints_(std::move(checkpoints)) {
    if (segments_.empty()) throw InvalidInputError("trajectory needs at least one segment");
    for (std::size_t i = 0; i < segments_.size(); ++i) {
        const Segment& s = segments_[i];
        if (!(s.end_s > s.start_s)) throw InvalidInputError("segment times must increase");
        if (s.motion == Motion::kDwell && s.start_height_m != s.end_height_m) {
            throw InvalidInputError("dwell segment must hold a constant height");
        }
        if (i > 0) {
            if (std::abs(s.start_s - segments_[i - 1].end_s) > 1e-9 ||
                std::abs(s.start_height_m - segments_[i - 1].end_height_m) > 1e-9) {
                throw InvalidInputError("segments must be contiguous in time and height");
            }
        }
    }
    for (const Checkpoint& cp : checkpoints_) {
        if (std::abs(height_at(cp.time_s) - cp.height_m) > 1e-9) {
            throw InvalidInputError("checkpoint '" + cp.label + "' does not lie on the trajectory");
        }
    }
}

double TrajectoryProfile::duration_s() const {
    return segments_.empty() ? 0.0 : segments_.back().end_s - segments_.front().start_s;
}

double TrajectoryProfile::height_at(double t_s) const {
    if (segments_.empty()) return 0.0;
    if (t_s <= segments_.front().start_s) return segments_.front().start_height_m;
    if (t_s >= segments_.back().end_s) return segments_.back().end_height_m;
    for (const Segment& s : segments_) {
        if (t_s <= s.end_s) {
            if (s.motion == Motion::kDwell) return s.start_height_m;
            const double f = (t_s - s.start_s) / (s.end_s - s.start_s);
            return s.start_height_m + f * (s.end_height_m - s.start_height_m);
        }
    }
    return segments_.back().end_height_m;
}

TrajectoryProfile default_building_trajectory() {
    std::vector<Segment> segs;
    std::vector<Checkpoint> cps;
    double t = 0.0;
    auto level = [](int k) { return kCheckpointSpacingM * k; };

    // Stairwell ascent: CP1..CP7, landings alternating with floor platforms.
    for (int k = 0; k < 7; ++k) {
        segs.push_back({t, t + kStairDwellS, level(k), level(k), Motion::kDwell});
        cps.push_back({"CP" + std::to_string(k + 1), t + kStairDwellS / 2.0, level(k)});
        t += kStairDwellS;
        if (k < 6) {
            segs.push_back({t, t + kStairRampS, level(k), level(k + 1), Motion::kRamp});
            t += kStairRampS;
        }
    }
    // Walk to the elevator on floor 4, then descend stopping at each floor.
    segs.push_back({t, t + kElevatorWalkS, level(6), level(6), Motion::kDwell});
    t += kElevatorWalkS;
    segs.push_back({t, t + kElevatorDwellS, level(6), level(6), Motion::kDwell});
    cps.push_back({"CP8", t + kElevatorDwellS / 2.0, level(6)});
    t += kElevatorDwellS;
    for (int k = 4; k >= 0; k -= 2) {
        segs.push_back({t, t + kElevatorTravelS, level(k + 2), level(k), Motion::kRamp});
        t += kElevatorTravelS;
        segs.push_back({t, t + kElevatorDwellS, level(k), level(k), Motion::kDwell});
        cps.push_back({"CP" + std::to_string(11 - k / 2), t + kElevatorDwellS / 2.0, level(k)});
        t += kElevatorDwellS;
    }
    return TrajectoryProfile(std::move(segs), std::move(cps));
}

TrajectoryProfile collocated_trajectory(double duration_s) {
    if (!(duration_s > 0.0)) throw InvalidInputError("collocated duration must be positive");
    return TrajectoryProfile({{0.0, duration_s, 0.0, 0.0, Motion::kDwell}}, {});
}

double AtmosphereModel::temperature_at(double height_m) const {
    double t = baseline_temp_c;
    for (const auto& [h, temp] : temp_profile) {
        if (height_m >= h) {
            t = temp;
        } else {
            break;
        }
    }
    return t;
}

void AtmosphereModel::validate() const {
    if (!reference_plausible(p0_true_hpa)) {
        throw InvalidInputError("atmosphere p0 outside plausible range");
    }
    if (ou_reversion_per_s < 0.0 || ou_volatility_hpa_sqrt_s < 0.0) {
        throw InvalidInputError("OU parameters must be non-negative");
    }
    for (std::size_t i = 1; i < temp_profile.size(); ++i) {
        if (!(temp_profile[i].first > temp_profile[i - 1].first)) {
            throw InvalidInputError("temperature profile heights must increase");
        }
    }
}

void SensorModel::validate() const {
    if (sensor_id.empty()) throw InvalidInputError("sensor id must not be empty");
    for (char c : sensor_id) {
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-') {
            throw InvalidInputError("sensor id must be alphanumeric/underscore/dash: " + sensor_id);
        }
    }
    if (!(rate_hz > 0.0)) throw InvalidInputError("sensor rate must be positive");
    if (noise_sigma_p_hpa < 0.0 || noise_sigma_t_c < 0.0) {
        throw InvalidInputError("noise sigmas must be non-negative");
    }
    if (outlier_prob < 0.0 || outlier_prob > 1.0) {
        throw InvalidInputError("outlier probability must be in [0,1]");
    }
}

AtmosphereCursor::AtmosphereCursor(const AtmosphereModel& model, std::uint64_t seed)
    : model_(model), rng_(splitmix64(seed)) {
    model_.validate();
    const double dt_s = static_cast<double>(kAtmosphereStepMs) / 1000.0;
    const double theta = model_.ou_reversion_per_s;
    if (theta > 0.0) {
        decay_ = std::exp(-theta * dt_s);
        diffusion_ = model_.ou_volatility_hpa_sqrt_s *
                     std::sqrt((1.0 - decay_ * decay_) / (2.0 * theta));
    } else {
        decay_ = 1.0;
        diffusion_ = model_.ou_volatility_hpa_sqrt_s * std::sqrt(dt_s);
    }
}

void AtmosphereCursor::step_to(std::int64_t grid_ms) {
    while (cur_ms_ < grid_ms) {
        cur_ms_ += kAtmosphereStepMs;
        if (diffusion_ > 0.0) {
            ou_ = ou_ * decay_ + diffusion_ * gauss_(rng_);
        } else {
            ou_ *= decay_;
        }
    }
}

AtmospherePoint AtmosphereCursor::at(std::int64_t t_ms) {
    if (t_ms < cur_ms_) {
        throw InvalidInputError("atmosphere cursor cannot rewind");
    }
    const std::int64_t grid = (t_ms / kAtmosphereStepMs) * kAtmosphereStepMs;
    step_to(grid);
    double steps = 0.0;
    for (const HvacStep& s : model_.hvac_steps) {
        if (static_cast<double>(cur_ms_) >= s.time_s * 1000.0) steps += s.dp_hpa;
    }
    return {cur_ms_, model_.p0_true_hpa + ou_ + steps, model_.baseline_temp_c};
}

std::vector<AtmospherePoint> gen_atmosphere(const AtmosphereModel& model, double duration_s,
                                            std::uint64_t seed) {
    if (!(duration_s > 0.0)) throw InvalidInputError("duration must be positive");
    AtmosphereCursor cursor(model, seed);
    std::vector<AtmospherePoint> out;
    const auto end_ms = static_cast<std::int64_t>(std::llround(duration_s * 1000.0));
    out.reserve(static_cast<std::size_t>(end_ms / kAtmosphereStepMs) + 1);
    for (std::int64_t t = 0; t <= end_ms; t += kAtmosphereStepMs) {
        out.push_back(cursor.at(t));
    }
    return out;
}

void Scenario::validate() const {
    atmosphere.validate();
    if (sensors.empty()) throw InvalidInputError("scenario needs at least one sensor");
    std::set<std::string> ids;
    for (const SensorModel& s : sensors) {
        s.validate();
        if (!ids.insert(s.sensor_id).second) {
            throw InvalidInputError("duplicate sensor id: " + s.sensor_id);
        }
    }
    if (!(trajectory.duration_s() > 0.0)) {
        throw InvalidInputError("scenario trajectory has zero duration");
    }
}

std::vector<SensorSample> gen_sensor_stream(const Scenario& scenario, const SensorModel& sensor) {
    scenario.validate();
    sensor.validate();

    AtmosphereCursor atmo(scenario.atmosphere, scenario.seed);
    std::mt19937_64 rng(splitmix64(scenario.seed ^ fnv1a64(sensor.sensor_id)));
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);

    const double duration = scenario.trajectory.duration_s();
    const auto n_samples =
        static_cast<std::int64_t>(std::floor(duration * sensor.rate_hz + 1e-9)) + 1;

    std::vector<SensorSample> out;
    out.reserve(static_cast<std::size_t>(n_samples));
    for (std::int64_t k = 0; k < n_samples; ++k) {
        const auto t_off_ms =
            static_cast<std::int64_t>(std::llround(static_cast<double>(k) * 1000.0 / sensor.rate_hz));
        const double t_s = static_cast<double>(t_off_ms) / 1000.0;
        const double h =
            sensor.mobile ? scenario.trajectory.height_at(t_s) : sensor.fixed_height_m;
        const double t_true = scenario.atmosphere.temperature_at(h);

        // The common signal perturbs the reference the column is generated
        // from, so drift scales the whole column.
        const AtmospherePoint ap = atmo.at(t_off_ms);
        const AtmosphereReference gen_ref{ap.p_star_hpa, 0, ReferenceSource::kStatic};
        double p = height_to_pressure(h, t_true, gen_ref);
        double temp = t_true;

        p += sensor.pressure_offset_hpa;
        temp += sensor.temperature_offset_c;
        if (sensor.noise_sigma_p_hpa > 0.0) p += sensor.noise_sigma_p_hpa * gauss(rng);
        if (sensor.noise_sigma_t_c > 0.0) temp += sensor.noise_sigma_t_c * gauss(rng);
        if (sensor.outlier_prob > 0.0 && uniform(rng) < sensor.outlier_prob) {
            p += (uniform(rng) < 0.5 ? -1.0 : 1.0) * sensor.outlier_mag_hpa;
        }

        SensorSample s;
        s.sensor_id = sensor.sensor_id;
        s.t_unix_ms = scenario.start_t_unix_ms + t_off_ms;
        s.p_hpa = p;
        s.temp_c = temp;
        s.seq = static_cast<std::uint64_t>(k);
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<TruthCheckpoint> ground_truth_rows(const Scenario& scenario) {
    std::vector<TruthCheckpoint> rows;
    for (const Checkpoint& cp : scenario.trajectory.checkpoints()) {
        rows.push_back({cp.label,
                        scenario.start_t_unix_ms +
                            static_cast<std::int64_t>(std::llround(cp.time_s * 1000.0)),
                        cp.height_m});
    }
    return rows;
}

ScenarioOutput write_scenario(const Scenario& scenario, const std::string& out_dir) {
    scenario.validate();
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create output directory " + out_dir + ": " + ec.message());

    ScenarioOutput result;
    for (const SensorModel& sensor : scenario.sensors) {
        const auto path = (std::filesystem::path(out_dir) / (sensor.sensor_id + ".csv")).string();
        write_sensor_log(path, gen_sensor_stream(scenario, sensor));
        result.log_paths.push_back(path);
    }
    result.truth_path = (std::filesystem::path(out_dir) / "truth.csv").string();
    write_truth(result.truth_path, ground_truth_rows(scenario));
    return result;
}

FloorPlan default_building_floor_plan() {
    const char* labels[7] = {"F1",           "F1-F2-landing", "F2",           "F2-F3-landing",
                             "F3",           "F3-F4-landing", "F4"};
    std::vector<FloorPlan::Entry> entries;
    for (int k = 0; k < 7; ++k) {
        entries.push_back({labels[k], kCheckpointSpacingM * k});
    }
    return FloorPlan(std::move(entries));
}

namespace {

TrajectoryProfile trajectory_from_json(const json& j, const std::string& context) {
    if (j.contains("preset")) {
        const auto name = j.at("preset").get<std::string>();
        if (name == "building") return default_building_trajectory();
        if (name == "collocated") {
            return collocated_trajectory(j.value("duration_s", 600.0));
        }
        throw DataError(context + ": unknown trajectory preset '" + name + "'");
    }
    std::vector<Segment> segs;
    for (const auto& s : j.at("segments")) {
        Segment seg;
        seg.start_s = s.at("start_s").get<double>();
        seg.end_s = s.at("end_s").get<double>();
        seg.start_height_m = s.at("start_height_m").get<double>();
        seg.end_height_m = s.at("end_height_m").get<double>();
        const auto motion = s.at("motion").get<std::string>();
        if (motion == "dwell") {
            seg.motion = Motion::kDwell;
        } else if (motion == "ramp") {
            seg.motion = Motion::kRamp;
        } else {
            throw DataError(context + ": unknown motion '" + motion + "'");
        }
        segs.push_back(seg);
    }
    std::vector<Checkpoint> cps;
    if (j.contains("checkpoints")) {
        for (const auto& c : j.at("checkpoints")) {
            cps.push_back({c.at("label").get<std::string>(), c.at("time_s").get<double>(),
                           c.at("height_m").get<double>()});
        }
    }
    return TrajectoryProfile(std::move(segs), std::move(cps));
}

json trajectory_to_json(const TrajectoryProfile& t) {
    json j;
    j["segments"] = json::array();
    for (const Segment& s : t.segments()) {
        j["segments"].push_back({{"start_s", s.start_s},
                                 {"end_s", s.end_s},
                                 {"start_height_m", s.start_height_m},
                                 {"end_height_m", s.end_height_m},
                                 {"motion", s.motion == Motion::kDwell ? "dwell" : "ramp"}});
    }
    j["checkpoints"] = json::array();
    for (const Checkpoint& c : t.checkpoints()) {
        j["checkpoints"].push_back(
            {{"label", c.label}, {"time_s", c.time_s}, {"height_m", c.height_m}});
    }
    return j;
}

}  // namespace

Scenario scenario_from_json(const std::string& text, const std::string& context) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw DataError(context + ": invalid JSON: " + e.what());
    }
    try {
        if (j.at("version").get<int>() != 1) {
            throw DataError(context + ": unsupported scenario version");
        }
        Scenario sc;
        sc.seed = j.value("seed", std::uint64_t{1});
        sc.start_t_unix_ms = j.value("start_t_unix_ms", std::int64_t{1700000000000LL});
        if (j.contains("atmosphere")) {
            const auto& a = j.at("atmosphere");
            sc.atmosphere.p0_true_hpa = a.value("p0_true_hpa", 1013.25);
            sc.atmosphere.baseline_temp_c = a.value("baseline_temp_c", 21.0);
            sc.atmosphere.ou_reversion_per_s = a.value("ou_reversion_per_s", 1.0 / 3600.0);
            sc.atmosphere.ou_volatility_hpa_sqrt_s = a.value("ou_volatility_hpa_sqrt_s", 0.02);
            if (a.contains("temp_profile")) {
                for (const auto& e : a.at("temp_profile")) {
                    sc.atmosphere.temp_profile.emplace_back(e.at(0).get<double>(),
                                                            e.at(1).get<double>());
                }
            }
            if (a.contains("hvac_steps")) {
                for (const auto& e : a.at("hvac_steps")) {
                    sc.atmosphere.hvac_steps.push_back(
                        {e.at("time_s").get<double>(), e.at("dp_hpa").get<double>()});
                }
            }
        }
        sc.trajectory = trajectory_from_json(j.at("trajectory"), context);
        for (const auto& s : j.at("sensors")) {
            SensorModel m;
            m.sensor_id = s.at("id").get<std::string>();
            m.mobile = s.value("mobile", false);
            m.fixed_height_m = s.value("fixed_height_m", 0.0);
            m.pressure_offset_hpa = s.value("pressure_offset_hpa", 0.0);
            m.temperature_offset_c = s.value("temperature_offset_c", 0.0);
            m.noise_sigma_p_hpa = s.value("noise_sigma_p_hpa", 0.0);
            m.noise_sigma_t_c = s.value("noise_sigma_t_c", 0.0);
            m.rate_hz = s.value("rate_hz", 6.0);
            m.outlier_prob = s.value("outlier_prob", 0.0);
            m.outlier_mag_hpa = s.value("outlier_mag_hpa", 5.0);
            sc.sensors.push_back(std::move(m));
        }
        sc.validate();
        return sc;
    } catch (const json::exception& e) {
        throw DataError(context + ": bad scenario: " + e.what());
    }
}

std::string scenario_to_json(const Scenario& scenario) {
    nlohmann::ordered_json j;
    j["version"] = 1;
    j["seed"] = scenario.seed;
    j["start_t_unix_ms"] = scenario.start_t_unix_ms;
    nlohmann::ordered_json a;
    a["p0_true_hpa"] = scenario.atmosphere.p0_true_hpa;
    a["baseline_temp_c"] = scenario.atmosphere.baseline_temp_c;
    a["ou_reversion_per_s"] = scenario.atmosphere.ou_reversion_per_s;
    a["ou_volatility_hpa_sqrt_s"] = scenario.atmosphere.ou_volatility_hpa_sqrt_s;
    if (!scenario.atmosphere.temp_profile.empty()) {
        a["temp_profile"] = json::array();
        for (const auto& [h, t] : scenario.atmosphere.temp_profile) {
            a["temp_profile"].push_back({h, t});
        }
    }
    if (!scenario.atmosphere.hvac_steps.empty()) {
        a["hvac_steps"] = json::array();
        for (const HvacStep& s : scenario.atmosphere.hvac_steps) {
            a["hvac_steps"].push_back({{"time_s", s.time_s}, {"dp_hpa", s.dp_hpa}});
        }
    }
    j["atmosphere"] = a;
    j["trajectory"] = trajectory_to_json(scenario.trajectory);
    j["sensors"] = json::array();
    for (const SensorModel& m : scenario.sensors) {
        nlohmann::ordered_json s;
        s["id"] = m.sensor_id;
        s["mobile"] = m.mobile;
        s["fixed_height_m"] = m.fixed_height_m;
        s["pressure_offset_hpa"] = m.pressure_offset_hpa;
        s["temperature_offset_c"] = m.temperature_offset_c;
        s["noise_sigma_p_hpa"] = m.noise_sigma_p_hpa;
        s["noise_sigma_t_c"] = m.noise_sigma_t_c;
        s["rate_hz"] = m.rate_hz;
        s["outlier_prob"] = m.outlier_prob;
        s["outlier_mag_hpa"] = m.outlier_mag_hpa;
        j["sensors"].push_back(s);
    }
    return j.dump(2) + "\n";
}

Scenario load_scenario(const std::string& path, std::optional<std::uint64_t> seed_override) {
    Scenario sc = scenario_from_json(read_text_file(path), path);
    if (seed_override) sc.seed = *seed_override;
    return sc;
}

Scenario preset_scenario(const std::string& name, std::uint64_t seed,
                         double calibration_duration_s) {
    Scenario sc;
    sc.seed = seed;

    SensorModel base;
    base.sensor_id = "base0";
    base.mobile = false;
    base.fixed_height_m = 0.0;
    base.pressure_offset_hpa = 0.45;
    base.temperature_offset_c = -0.15;
    base.noise_sigma_p_hpa = 0.02;
    base.noise_sigma_t_c = 0.01;
    base.rate_hz = 6.0;

    SensorModel mobile = base;
    mobile.sensor_id = "mob0";
    mobile.mobile = true;
    mobile.pressure_offset_hpa = -0.32;
    mobile.temperature_offset_c = 0.22;

    sc.sensors = {base, mobile};
    if (name == "building") {
        sc.trajectory = default_building_trajectory();
    } else if (name == "calibration") {
        sc.trajectory = collocated_trajectory(calibration_duration_s);
    } else {
        throw InvalidInputError("unknown scenario preset '" + name +
                                "' (expected 'building' or 'calibration')");
    }
    return sc;
}

}  // namespace baro::sim
