#include "baro/atmosphere.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "baro/errors.hpp"

namespace baro {

bool sample_in_envelope(const SensorSample& s) {
    return std::isfinite(s.p_hpa) && std::isfinite(s.temp_c) &&
           s.p_hpa > kMinPressureHpa && s.p_hpa < kMaxPressureHpa &&
           s.temp_c > kMinTempC && s.temp_c < kMaxTempC;
}

bool reference_plausible(double p0_hpa) {
    return std::isfinite(p0_hpa) && p0_hpa > kMinP0Hpa && p0_hpa < kMaxP0Hpa;
}

const char* quality_name(EstimateQuality q) {
    switch (q) {
        case EstimateQuality::kFresh: return "fresh";
        case EstimateQuality::kHeldBase: return "held_base";
        case EstimateQuality::kDegraded: return "degraded";
    }
    return "fresh";
}

EstimateQuality quality_from_name(const std::string& name) {
    if (name == "fresh") return EstimateQuality::kFresh;
    if (name == "held_base") return EstimateQuality::kHeldBase;
    if (name == "degraded") return EstimateQuality::kDegraded;
    throw InvalidInputError("unknown estimate quality: " + name);
}

void IsaConstants::validate() const {
    if (!(lapse_rate > 0.0) || !(gas_constant > 0.0) || !(gravity > 0.0) ||
        !std::isfinite(lapse_rate) || !std::isfinite(gas_constant) || !std::isfinite(gravity)) {
        throw InvalidInputError("ISA constants must be strictly positive and finite");
    }
}

double pressure_to_height(double pressure_hpa, double temp_c,
                          const AtmosphereReference& ref, const IsaConstants& consts) {
    consts.validate();
    if (!std::isfinite(pressure_hpa) || pressure_hpa <= 0.0) {
        throw InvalidInputError("pressure must be finite and positive");
    }
    if (!std::isfinite(ref.p0_hpa) || ref.p0_hpa <= 0.0) {
        throw InvalidInputError("reference pressure must be finite and positive");
    }
    const double t_kelvin = temp_c + kKelvinOffset;
    if (!std::isfinite(temp_c) || t_kelvin <= 0.0) {
        throw InvalidInputError("temperature below absolute zero");
    }
    const double ratio = pressure_hpa / ref.p0_hpa;
    return (t_kelvin / consts.lapse_rate) * (1.0 - std::pow(ratio, consts.kappa()));
}

double height_to_pressure(double height_m, double temp_c,
                          const AtmosphereReference& ref, const IsaConstants& consts) {
    consts.validate();
    if (!std::isfinite(height_m)) {
        throw InvalidInputError("height must be finite");
    }
    if (!std::isfinite(ref.p0_hpa) || ref.p0_hpa <= 0.0) {
        throw InvalidInputError("reference pressure must be finite and positive");
    }
    const double t_kelvin = temp_c + kKelvinOffset;
    if (!std::isfinite(temp_c) || t_kelvin <= 0.0) {
        throw InvalidInputError("temperature below absolute zero");
    }
    const double base = 1.0 - height_m * consts.lapse_rate / t_kelvin;
    if (base <= 0.0) {
        throw OutOfDomainError("height exceeds the tropospheric domain of the inverse map");
    }
    return ref.p0_hpa * std::pow(base, 1.0 / consts.kappa());
}

double differential_height(const SensorSample& base, const SensorSample& mobile,
                           const AtmosphereReference& ref, const IsaConstants& consts) {
    const double h_base = pressure_to_height(base.p_hpa, base.temp_c, ref, consts);
    const double h_mobile = pressure_to_height(mobile.p_hpa, mobile.temp_c, ref, consts);
    return h_mobile - h_base;
}

FloorPlan::FloorPlan(std::vector<Entry> entries, std::string reference_frame)
    : entries_(std::move(entries)), reference_frame_(std::move(reference_frame)) {
    if (entries_.empty()) {
        throw InvalidInputError("floor plan must have at least one entry");
    }
    std::set<std::string> labels;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        if (!std::isfinite(entries_[i].height_m)) {
            throw InvalidInputError("floor height must be finite");
        }
        if (i > 0 && !(entries_[i].height_m > entries_[i - 1].height_m)) {
            throw InvalidInputError("floor heights must be strictly increasing");
        }
        if (!labels.insert(entries_[i].label).second) {
            throw InvalidInputError("duplicate floor label: " + entries_[i].label);
        }
    }
}

FloorAssignment floor_index(double delta_h_m, const FloorPlan& plan) {
    if (plan.empty()) {
        throw InvalidInputError("floor plan is empty");
    }
    if (!std::isfinite(delta_h_m)) {
        throw InvalidInputError("delta_h must be finite");
    }
    int best = 0;
    double best_dist = std::abs(delta_h_m - plan.entries()[0].height_m);
    for (std::size_t k = 1; k < plan.size(); ++k) {
        const double d = std::abs(delta_h_m - plan.entries()[k].height_m);
        if (d < best_dist) {  // ties keep the lower index
            best = static_cast<int>(k);
            best_dist = d;
        }
    }
    return {best, plan.entries()[static_cast<std::size_t>(best)].label};
}

double isa_sensitivity(const std::vector<SensitivityPoint>& scenario,
                       const IsaPerturbation& perturbation,
                       const AtmosphereReference& ref, const IsaConstants& nominal) {
    nominal.validate();
    const double factors[3] = {-1.0, 0.0, 1.0};
    double worst = 0.0;
    for (const SensitivityPoint& pt : scenario) {
        const SensorSample b{"b", 0, pt.p_base_hpa, pt.t_base_c, 0};
        const SensorSample m{"m", 0, pt.p_mobile_hpa, pt.t_mobile_c, 0};
        const double dh_nominal = differential_height(b, m, ref, nominal);
        for (double fl : factors) {
            for (double fr : factors) {
                for (double fg : factors) {
                    IsaConstants c = nominal;
                    c.lapse_rate *= 1.0 + fl * perturbation.lapse_rate_frac;
                    c.gas_constant *= 1.0 + fr * perturbation.gas_constant_frac;
                    c.gravity *= 1.0 + fg * perturbation.gravity_frac;
                    const double dh = differential_height(b, m, ref, c);
                    worst = std::max(worst, std::abs(dh - dh_nominal));
                }
            }
        }
    }
    return worst;
}

std::vector<SensitivityPoint> sensitivity_scenario_grid(double max_abs_dh_m, std::size_t steps,
                                                        const AtmosphereReference& ref,
                                                        const IsaConstants& consts) {
    if (steps < 2) {
        throw InvalidInputError("scenario grid needs at least 2 steps");
    }
    std::vector<SensitivityPoint> grid;
    grid.reserve(steps * 3);
    const double temps[3] = {10.0, 15.0, 25.0};
    for (double t : temps) {
        const double p_base = height_to_pressure(0.0, t, ref, consts);
        for (std::size_t i = 0; i < steps; ++i) {
            const double dh = -max_abs_dh_m +
                              2.0 * max_abs_dh_m * static_cast<double>(i) /
                                  static_cast<double>(steps - 1);
            grid.push_back({p_base, t, height_to_pressure(dh, t, ref, consts), t});
        }
    }
    return grid;
}

}  // namespace baro
