#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "baro/types.hpp"

namespace baro {

// Constants of the ISA tropospheric model. kappa is derived, never stored.
struct IsaConstants {
    double lapse_rate = 0.0065;     // K/m
    double gas_constant = 287.05;   // J/(kg K)
    double gravity = 9.80665;       // m/s^2

    double kappa() const { return gas_constant * lapse_rate / gravity; }
    void validate() const;  // throws InvalidInputError on non-positive fields
};

inline constexpr double kKelvinOffset = 273.15;

// h = (T_K / L) * [1 - (P/P0)^kappa]; T in Celsius, converted internally.
double pressure_to_height(double pressure_hpa, double temp_c,
                          const AtmosphereReference& ref,
                          const IsaConstants& consts = {});

// Analytic inverse: P = P0 * (1 - h*L/T_K)^(1/kappa).
double height_to_pressure(double height_m, double temp_c,
                          const AtmosphereReference& ref,
                          const IsaConstants& consts = {});

// h(mobile) - h(base), each sensor converted with its own temperature.
// Samples are expected to be calibration-corrected already.
double differential_height(const SensorSample& base, const SensorSample& mobile,
                           const AtmosphereReference& ref,
                           const IsaConstants& consts = {});

// Ordered list of reference heights with labels.
class FloorPlan {
public:
    struct Entry {
        std::string label;
        double height_m = 0.0;
    };

    FloorPlan() = default;
    // Validates: non-empty, strictly increasing heights, unique labels.
    explicit FloorPlan(std::vector<Entry> entries,
                       std::string reference_frame = "heights relative to base sensor plane");

    const std::vector<Entry>& entries() const { return entries_; }
    const std::string& reference_frame() const { return reference_frame_; }
    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }

private:
    std::vector<Entry> entries_;
    std::string reference_frame_;
};

struct FloorAssignment {
    int index = -1;
    std::string label;
};

// Nearest-neighbor assignment of dh to the plan heights.
// Exact tie between two entries resolves to the lower index.
FloorAssignment floor_index(double delta_h_m, const FloorPlan& plan);

// One (P_b, T_b, P_m, T_m) operating point for the sensitivity sweep.
struct SensitivityPoint {
    double p_base_hpa;
    double t_base_c;
    double p_mobile_hpa;
    double t_mobile_c;
};

// Fractional half-widths of the constant perturbations (0.1 == +-10 %).
struct IsaPerturbation {
    double lapse_rate_frac = 0.0;
    double gas_constant_frac = 0.0;
    double gravity_frac = 0.0;
};

// Max |dh(perturbed) - dh(nominal)| over the scenario points and the corner
// grid {1-f, 1, 1+f} of each constant, pressures held fixed.
double isa_sensitivity(const std::vector<SensitivityPoint>& scenario,
                       const IsaPerturbation& perturbation,
                       const AtmosphereReference& ref,
                       const IsaConstants& nominal = {});

// Scenario builder used by the sensitivity sweep and its tests: base fixed at
// h=0, mobile swept over [-max_dh, +max_dh], pressures from the inverse map.
std::vector<SensitivityPoint> sensitivity_scenario_grid(double max_abs_dh_m,
                                                        std::size_t steps,
                                                        const AtmosphereReference& ref,
                                                        const IsaConstants& consts = {});

}  // namespace baro
