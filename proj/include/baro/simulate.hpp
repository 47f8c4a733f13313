#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "baro/atmosphere.hpp"
#include "baro/io.hpp"
#include "baro/types.hpp"

namespace baro::sim {

enum class Motion { kDwell, kRamp };

struct Segment {
    double start_s = 0.0;
    double end_s = 0.0;
    double start_height_m = 0.0;
    double end_height_m = 0.0;
    Motion motion = Motion::kDwell;
};

struct Checkpoint {
    std::string label;
    double time_s = 0.0;
    double height_m = 0.0;
};

// Piecewise dwell/ramp height profile with surveyed checkpoints.
class TrajectoryProfile {
public:
    TrajectoryProfile() = default;
    // Validates contiguity, time order and that checkpoints lie on the profile.
    TrajectoryProfile(std::vector<Segment> segments, std::vector<Checkpoint> checkpoints);

    double duration_s() const;
    double height_at(double t_s) const;  // clamped to the profile ends
    const std::vector<Segment>& segments() const { return segments_; }
    const std::vector<Checkpoint>& checkpoints() const { return checkpoints_; }

private:
    std::vector<Segment> segments_;
    std::vector<Checkpoint> checkpoints_;
};

// Stairwell ascent CP1-CP7 (2.3 m per checkpoint, dwell 20 s / ramp 15 s),
// then elevator descent CP8-CP11 stopping at each floor (dwell 15 s).
TrajectoryProfile default_building_trajectory();

// Everything parked at the base plane; used for collocated calibration runs.
TrajectoryProfile collocated_trajectory(double duration_s);

struct HvacStep {
    double time_s = 0.0;
    double dp_hpa = 0.0;
};

struct AtmosphereModel {
    double p0_true_hpa = 1013.25;
    double baseline_temp_c = 21.0;
    // Optional step profile of indoor temperature vs height; the entry with
    // the greatest height <= h applies. Empty means baseline everywhere.
    std::vector<std::pair<double, double>> temp_profile;  // (height_m, temp_c)
    double ou_reversion_per_s = 1.0 / 3600.0;
    double ou_volatility_hpa_sqrt_s = 0.02;
    std::vector<HvacStep> hvac_steps;

    double temperature_at(double height_m) const;
    void validate() const;
};

struct SensorModel {
    std::string sensor_id;
    double pressure_offset_hpa = 0.0;
    double temperature_offset_c = 0.0;
    double noise_sigma_p_hpa = 0.0;
    double noise_sigma_t_c = 0.0;
    double rate_hz = 6.0;
    double outlier_prob = 0.0;
    double outlier_mag_hpa = 5.0;
    bool mobile = false;          // mobile sensors follow the trajectory
    double fixed_height_m = 0.0;  // height of stationary sensors

    void validate() const;
};

inline constexpr std::int64_t kAtmosphereStepMs = 10;

struct AtmospherePoint {
    std::int64_t t_ms = 0;  // offset from scenario start
    double p_star_hpa = 0.0;
    double t_star_c = 0.0;
};

// Deterministic streaming generator of the common signal on the 10 ms grid.
// Every cursor created with the same (model, seed) yields the same series
// regardless of how it is advanced, so per-sensor passes stay coherent.
class AtmosphereCursor {
public:
    AtmosphereCursor(const AtmosphereModel& model, std::uint64_t seed);

    // Common signal at the last grid step <= t_ms. t_ms must not decrease
    // between calls.
    AtmospherePoint at(std::int64_t t_ms);

private:
    void step_to(std::int64_t grid_ms);

    AtmosphereModel model_;
    std::mt19937_64 rng_;
    std::normal_distribution<double> gauss_{0.0, 1.0};
    std::int64_t cur_ms_ = 0;
    double ou_ = 0.0;
    double decay_ = 1.0;
    double diffusion_ = 0.0;
};

// Materialized common signal for short horizons (tests, plots).
std::vector<AtmospherePoint> gen_atmosphere(const AtmosphereModel& model, double duration_s,
                                            std::uint64_t seed);

struct Scenario {
    std::uint64_t seed = 1;
    std::int64_t start_t_unix_ms = 1700000000000LL;
    AtmosphereModel atmosphere;
    TrajectoryProfile trajectory;
    std::vector<SensorModel> sensors;

    void validate() const;
};

// Synthesize one sensor's stream over the trajectory/atmosphere.
// Deterministic given the scenario seed (per-sensor RNG derived from it).
std::vector<SensorSample> gen_sensor_stream(const Scenario& scenario, const SensorModel& sensor);

struct ScenarioOutput {
    std::vector<std::string> log_paths;  // one per sensor, scenario order
    std::string truth_path;
};

// Writes <out_dir>/<sensor_id>.csv per sensor plus <out_dir>/truth.csv.
ScenarioOutput write_scenario(const Scenario& scenario, const std::string& out_dir);

std::vector<TruthCheckpoint> ground_truth_rows(const Scenario& scenario);

// Floor plan matching the default building checkpoints (landings included).
FloorPlan default_building_floor_plan();

// JSON scenario files; seed_override, when set, replaces the file's seed.
Scenario scenario_from_json(const std::string& text, const std::string& context);
std::string scenario_to_json(const Scenario& scenario);
Scenario load_scenario(const std::string& path,
                       std::optional<std::uint64_t> seed_override = std::nullopt);

// Built-in presets: "building" (CP1-CP11 run) and "calibration" (collocated).
Scenario preset_scenario(const std::string& name, std::uint64_t seed,
                         double calibration_duration_s = 600.0);

}  // namespace baro::sim
