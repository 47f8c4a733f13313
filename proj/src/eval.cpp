#include "baro/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "baro/errors.hpp"
#include "baro/wire.hpp"

namespace baro {

EvalReport evaluate(const std::vector<AltitudeEstimate>& estimates,
                    const std::vector<TruthCheckpoint>& truth, const FloorPlan& plan,
                    const EvalOptions& options) {
    if (truth.empty()) throw InvalidInputError("truth file has no checkpoints");
    if (options.window_ms <= 0) throw InvalidInputError("matching window must be positive");

    EvalReport report;
    report.note = options.note;
    double sum_sq = 0.0;
    std::size_t correct = 0;

    for (const TruthCheckpoint& cp : truth) {
        const AltitudeEstimate* best = nullptr;
        std::int64_t best_dist = 0;
        for (const AltitudeEstimate& est : estimates) {
            const std::int64_t d = std::llabs(est.t_unix_ms - cp.t_unix_ms);
            if (d > options.window_ms) continue;
            if (!best || d < best_dist) {
                best = &est;
                best_dist = d;
            }
        }
        if (!best) {
            report.uncovered.push_back(cp.label);
            continue;
        }
        CheckpointResult r;
        r.label = cp.label;
        r.t_unix_ms = cp.t_unix_ms;
        r.truth_m = cp.height_m;
        r.estimate_m = best->dh_m;
        r.error_m = best->dh_m - cp.height_m;
        r.est_t_unix_ms = best->t_unix_ms;
        const auto truth_floor = floor_index(cp.height_m, plan);
        r.floor_truth = truth_floor.index;
        r.floor_truth_label = truth_floor.label;
        r.floor_est = best->floor_index;
        r.floor_est_label = best->floor_label;
        r.floor_correct = r.floor_truth == r.floor_est;
        sum_sq += r.error_m * r.error_m;
        if (r.floor_correct) ++correct;
        report.per_checkpoint.push_back(std::move(r));
    }

    if (!report.uncovered.empty() && !options.allow_gaps) {
        std::string labels;
        for (const auto& l : report.uncovered) labels += (labels.empty() ? "" : ", ") + l;
        throw DataError("no estimate within " + std::to_string(options.window_ms) +
                        " ms of checkpoint(s): " + labels);
    }

    report.n_checkpoints = report.per_checkpoint.size();
    if (report.n_checkpoints == 0) throw DataError("no checkpoint was covered by the estimates");
    report.rmse_m = std::sqrt(sum_sq / static_cast<double>(report.n_checkpoints));
    report.floor_accuracy_pct =
        100.0 * static_cast<double>(correct) / static_cast<double>(report.n_checkpoints);
    return report;
}

std::string report_to_json(const EvalReport& report) {
    nlohmann::ordered_json j;
    j["note"] = report.note;
    j["rmse_m"] = report.rmse_m;
    j["floor_accuracy_pct"] = report.floor_accuracy_pct;
    j["n_checkpoints"] = report.n_checkpoints;
    j["per_checkpoint"] = nlohmann::ordered_json::array();
    for (const auto& r : report.per_checkpoint) {
        nlohmann::ordered_json row;
        row["label"] = r.label;
        row["t_unix_ms"] = r.t_unix_ms;
        row["truth_m"] = r.truth_m;
        row["estimate_m"] = r.estimate_m;
        row["error_m"] = r.error_m;
        row["est_t_unix_ms"] = r.est_t_unix_ms;
        row["floor_truth"] = r.floor_truth;
        row["floor_truth_label"] = r.floor_truth_label;
        row["floor_est"] = r.floor_est;
        row["floor_est_label"] = r.floor_est_label;
        row["floor_correct"] = r.floor_correct;
        j["per_checkpoint"].push_back(row);
    }
    j["uncovered"] = report.uncovered;
    nlohmann::ordered_json cfg;
    for (const auto& [k, v] : report.config) cfg[k] = v;
    j["config"] = cfg;
    return j.dump(2) + "\n";
}

std::string report_to_text(const EvalReport& report) {
    std::ostringstream out;
    out << "# " << report.note << "\n";
    for (const auto& [k, v] : report.config) out << "# " << k << " = " << v << "\n";
    out << "checkpoint  truth_m  estimate_m  error_m   floor_truth -> floor_est\n";
    out.setf(std::ios::fixed);
    for (const auto& r : report.per_checkpoint) {
        out.precision(3);
        out << r.label;
        for (std::size_t i = r.label.size(); i < 12; ++i) out << ' ';
        out << r.truth_m << "    " << r.estimate_m << "      ";
        out.precision(4);
        out << (r.error_m >= 0 ? "+" : "") << r.error_m << "   " << r.floor_truth_label
            << " -> " << r.floor_est_label << (r.floor_correct ? "" : "  MISMATCH") << "\n";
    }
    for (const auto& l : report.uncovered) out << l << "  UNCOVERED\n";
    out.precision(4);
    out << "n_checkpoints = " << report.n_checkpoints << "\n";
    out << "rmse_m = " << report.rmse_m << "\n";
    out.precision(1);
    out << "floor_accuracy_pct = " << report.floor_accuracy_pct << "\n";
    return out.str();
}

std::vector<AltitudeEstimate> read_estimates(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open estimates file: " + path);
    std::vector<AltitudeEstimate> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        try {
            out.push_back(estimate_from_line(line));
        } catch (const DataError& e) {
            throw DataError(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

void write_estimates(const std::string& path, const std::vector<AltitudeEstimate>& estimates) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write estimates file: " + path);
    for (const auto& est : estimates) out << estimate_to_line(est) << '\n';
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace baro
