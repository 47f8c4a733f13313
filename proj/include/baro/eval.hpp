#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "baro/atmosphere.hpp"
#include "baro/io.hpp"
#include "baro/types.hpp"

namespace baro {

struct CheckpointResult {
    std::string label;
    std::int64_t t_unix_ms = 0;
    double truth_m = 0.0;
    double estimate_m = 0.0;
    double error_m = 0.0;
    std::int64_t est_t_unix_ms = 0;
    int floor_truth = -1;
    std::string floor_truth_label;
    int floor_est = -1;
    std::string floor_est_label;
    bool floor_correct = false;
};

struct EvalReport {
    double rmse_m = 0.0;
    double floor_accuracy_pct = 0.0;
    std::size_t n_checkpoints = 0;
    std::vector<CheckpointResult> per_checkpoint;
    std::vector<std::string> uncovered;  // labels without an estimate in window
    std::vector<std::pair<std::string, std::string>> config;  // echoed settings
    std::string note;
};

struct EvalOptions {
    std::int64_t window_ms = 500;
    bool allow_gaps = false;
    std::string note =
        "synthetic desk-scale evaluation: metrics computed on simulator-generated "
        "data, not a physical deployment";
};

// Truth floor labels are derived from truth heights through the same plan the
// estimator used, so the accuracy metric stays self-consistent.
EvalReport evaluate(const std::vector<AltitudeEstimate>& estimates,
                    const std::vector<TruthCheckpoint>& truth, const FloorPlan& plan,
                    const EvalOptions& options = {});

std::string report_to_json(const EvalReport& report);
std::string report_to_text(const EvalReport& report);

std::vector<AltitudeEstimate> read_estimates(const std::string& path);
void write_estimates(const std::string& path, const std::vector<AltitudeEstimate>& estimates);

}  // namespace baro
