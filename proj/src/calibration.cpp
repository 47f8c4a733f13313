#include "baro/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "baro/errors.hpp"

namespace baro {

int CalibrationTable::find(const std::string& sensor_id) const {
    for (std::size_t i = 0; i < sensor_ids.size(); ++i) {
        if (sensor_ids[i] == sensor_id) return static_cast<int>(i);
    }
    return -1;
}

double CalibrationTable::pressure_offset(const std::string& sensor_id) const {
    const int i = find(sensor_id);
    if (i < 0) throw MissingCalibrationError("no calibration entry for sensor: " + sensor_id);
    return pressure_offset_hpa[static_cast<std::size_t>(i)];
}

double CalibrationTable::temperature_offset(const std::string& sensor_id) const {
    const int i = find(sensor_id);
    if (i < 0) throw MissingCalibrationError("no calibration entry for sensor: " + sensor_id);
    return temperature_offset_c[static_cast<std::size_t>(i)];
}

BinnedSeries resample(const std::vector<SensorSample>& stream, double bin_width_s) {
    if (!(bin_width_s > 0.0) || !std::isfinite(bin_width_s)) {
        throw InvalidInputError("bin width must be positive");
    }
    const auto bin_ms = static_cast<std::int64_t>(std::llround(bin_width_s * 1000.0));
    if (bin_ms <= 0) throw InvalidInputError("bin width must be at least 1 ms");

    BinnedSeries out;
    if (stream.empty()) return out;
    out.sensor_id = stream.front().sensor_id;

    std::vector<const SensorSample*> sorted;
    sorted.reserve(stream.size());
    for (const auto& s : stream) sorted.push_back(&s);
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const SensorSample* a, const SensorSample* b) {
                         return a->t_unix_ms < b->t_unix_ms;
                     });

    // Epoch-aligned bins keyed by floor division (timestamps may be negative
    // in synthetic tests).
    auto bin_of = [bin_ms](std::int64_t t) {
        std::int64_t q = t / bin_ms;
        if (t % bin_ms != 0 && t < 0) --q;
        return q;
    };

    std::int64_t cur_bin = bin_of(sorted.front()->t_unix_ms);
    double sum_p = 0.0, sum_t = 0.0;
    std::size_t n = 0;
    auto flush = [&]() {
        if (n == 0) return;
        out.timestamps.push_back(cur_bin * bin_ms);
        out.p_hpa.push_back(sum_p / static_cast<double>(n));
        out.temp_c.push_back(sum_t / static_cast<double>(n));
        sum_p = sum_t = 0.0;
        n = 0;
    };
    for (const SensorSample* s : sorted) {
        const std::int64_t b = bin_of(s->t_unix_ms);
        if (b != cur_bin) {
            flush();
            cur_bin = b;
        }
        sum_p += s->p_hpa;
        sum_t += s->temp_c;
        ++n;
    }
    flush();
    return out;
}

AlignedGrid inner_join(const std::vector<BinnedSeries>& series, std::int64_t bin_width_ms) {
    if (series.size() < 2) {
        throw InvalidInputError("inner join needs at least 2 sensors");
    }
    std::vector<const BinnedSeries*> cols;
    cols.reserve(series.size());
    std::set<std::string> ids;
    for (const auto& s : series) {
        if (!ids.insert(s.sensor_id).second) {
            throw InvalidInputError("duplicate sensor id in join: " + s.sensor_id);
        }
        cols.push_back(&s);
    }
    std::sort(cols.begin(), cols.end(), [](const BinnedSeries* a, const BinnedSeries* b) {
        return a->sensor_id < b->sensor_id;
    });

    // Intersect timestamp sets.
    std::map<std::int64_t, std::size_t> counts;
    for (const BinnedSeries* s : cols) {
        for (std::int64_t t : s->timestamps) ++counts[t];
    }
    AlignedGrid grid;
    grid.bin_width_ms = bin_width_ms;
    for (const BinnedSeries* s : cols) grid.sensor_ids.push_back(s->sensor_id);
    for (const auto& [t, c] : counts) {
        if (c == cols.size()) grid.timestamps.push_back(t);
    }

    grid.p_hpa.assign(grid.timestamps.size(), std::vector<double>(cols.size()));
    grid.temp_c.assign(grid.timestamps.size(), std::vector<double>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) {
        const BinnedSeries* s = cols[j];
        std::size_t pos = 0;
        for (std::size_t row = 0; row < grid.timestamps.size(); ++row) {
            while (s->timestamps[pos] != grid.timestamps[row]) ++pos;
            grid.p_hpa[row][j] = s->p_hpa[pos];
            grid.temp_c[row][j] = s->temp_c[pos];
        }
    }
    return grid;
}

AlignedGrid jump_filter(const AlignedGrid& grid, double p_thresh_hpa, double t_thresh_c) {
    AlignedGrid out;
    out.sensor_ids = grid.sensor_ids;
    out.bin_width_ms = grid.bin_width_ms;
    for (std::size_t row = 0; row < grid.rows(); ++row) {
        bool keep = true;
        if (row > 0) {
            for (std::size_t j = 0; j < grid.sensors() && keep; ++j) {
                if (std::abs(grid.p_hpa[row][j] - grid.p_hpa[row - 1][j]) > p_thresh_hpa ||
                    std::abs(grid.temp_c[row][j] - grid.temp_c[row - 1][j]) > t_thresh_c) {
                    keep = false;
                }
            }
        }
        if (keep) {
            out.timestamps.push_back(grid.timestamps[row]);
            out.p_hpa.push_back(grid.p_hpa[row]);
            out.temp_c.push_back(grid.temp_c[row]);
        }
    }
    return out;
}

namespace {

void solve_quantity(const std::vector<std::vector<double>>& values, std::size_t rows,
                    std::size_t n, std::vector<double>& star, std::vector<double>& beta,
                    std::vector<double>& residual_std) {
    star.assign(rows, 0.0);
    beta.assign(n, 0.0);
    for (std::size_t row = 0; row < rows; ++row) {
        double mean = 0.0;
        for (std::size_t j = 0; j < n; ++j) mean += values[row][j];
        mean /= static_cast<double>(n);
        star[row] = mean;
        for (std::size_t j = 0; j < n; ++j) beta[j] += values[row][j] - mean;
    }
    for (double& b : beta) b /= static_cast<double>(rows);
    // Exact gauge projection; the sums above already cancel to FP noise.
    double gauge = 0.0;
    for (double b : beta) gauge += b;
    gauge /= static_cast<double>(n);
    for (double& b : beta) b -= gauge;

    residual_std.assign(n, 0.0);
    if (rows > 1) {
        for (std::size_t j = 0; j < n; ++j) {
            double ss = 0.0;
            for (std::size_t row = 0; row < rows; ++row) {
                const double r = values[row][j] - star[row] - beta[j];
                ss += r * r;
            }
            residual_std[j] = std::sqrt(ss / static_cast<double>(rows - 1));
        }
    }
}

}  // namespace

OffsetEstimate estimate_offsets(const AlignedGrid& grid, std::int64_t estimated_at_ms) {
    if (grid.sensors() < 2) {
        throw InvalidInputError("offset estimation needs at least 2 sensors");
    }
    if (grid.rows() < 2) {
        throw InsufficientDataError("offset estimation needs at least 2 aligned rows");
    }
    OffsetEstimate est;
    est.table.sensor_ids = grid.sensor_ids;
    est.table.estimated_at_ms = estimated_at_ms;
    est.table.sample_count = grid.rows();
    est.common.timestamps = grid.timestamps;
    solve_quantity(grid.p_hpa, grid.rows(), grid.sensors(), est.common.p_star_hpa,
                   est.table.pressure_offset_hpa, est.pressure_residual_std);
    solve_quantity(grid.temp_c, grid.rows(), grid.sensors(), est.common.t_star_c,
                   est.table.temperature_offset_c, est.temperature_residual_std);
    return est;
}

SensorSample apply_calibration(const SensorSample& sample, const CalibrationTable& table) {
    SensorSample out = sample;
    out.p_hpa -= table.pressure_offset(sample.sensor_id);
    out.temp_c -= table.temperature_offset(sample.sensor_id);
    return out;
}

bool calibration_stale(const CalibrationTable& table, std::int64_t now_ms,
                       std::int64_t max_age_ms) {
    return table.estimated_at_ms > 0 && now_ms - table.estimated_at_ms > max_age_ms;
}

}  // namespace baro
