#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <span>
#include <stdexcept>
#include <vector>

#include "driftcast/stats.hpp"
#include "driftcast/stream.hpp"
#include "driftcast/time.hpp"

namespace driftcast {

/// sMAPE in percent: (100/n) * sum |F - A| / ((|A| + |F|) / 2). Terms with |A| + |F| = 0 count as 0.
inline double smape(std::span<const PredictionRecord> records) {
    if (records.empty()) throw std::invalid_argument("smape of an empty record set");
    double sum = 0.0;
    for (const auto& r : records) {
        const double denom = std::fabs(r.actual) + std::fabs(r.predicted);
        if (denom > 0.0) sum += 2.0 * std::fabs(r.predicted - r.actual) / denom;
    }
    return 100.0 * sum / static_cast<double>(records.size());
}

inline double mse(std::span<const PredictionRecord> records) {
    if (records.empty()) throw std::invalid_argument("mse of an empty record set");
    double sum = 0.0;
    for (const auto& r : records) {
        const double e = r.predicted - r.actual;
        sum += e * e;
    }
    return sum / static_cast<double>(records.size());
}

inline double rmse(std::span<const PredictionRecord> records) { return std::sqrt(mse(records)); }

using Metric = std::function<double(std::span<const PredictionRecord>)>;

enum class MetricMode { pooled, zone_mean };

/// Pooled: metric over all records. Zone mean: metric per zone, then the unweighted mean.
inline double evaluate_metric(std::span<const PredictionRecord> records, const Metric& metric, MetricMode mode) {
    if (mode == MetricMode::pooled) return metric(records);
    std::map<ZoneId, std::vector<PredictionRecord>> by_zone;
    for (const auto& r : records) by_zone[r.zone].push_back(r);
    if (by_zone.empty()) throw std::invalid_argument("metric of an empty record set");
    double sum = 0.0;
    for (const auto& [zone, rs] : by_zone) sum += metric(rs);
    return sum / static_cast<double>(by_zone.size());
}

struct RollingPoint {
    TimeIndex window_start;
    double value = 0.0;
    std::size_t count = 0;
};

/// Metric per calendar quarter or year, indexed by window start, in time order.
inline std::vector<RollingPoint> rolling_metric(std::span<const PredictionRecord> records, const Metric& metric, Period window,
                                                const Epoch& epoch = {}) {
    std::map<TimeIndex, std::vector<PredictionRecord>> groups;
    for (const auto& r : records) groups[epoch.period_floor(r.time, window)].push_back(r);
    std::vector<RollingPoint> out;
    out.reserve(groups.size());
    for (const auto& [start, rs] : groups) out.push_back({start, metric(rs), rs.size()});
    return out;
}

struct DieboldMarianoResult {
    double statistic = 0.0;
    double p_value = 1.0;
};

/// One-step-ahead Diebold-Mariano test on paired losses: d = a - b,
/// DM = mean(d) / sqrt(gamma0 / n), two-sided normal p-value.
inline DieboldMarianoResult diebold_mariano(std::span<const double> loss_a, std::span<const double> loss_b) {
    if (loss_a.size() != loss_b.size()) throw std::invalid_argument("diebold-mariano needs paired series");
    const std::size_t n = loss_a.size();
    if (n < 2) throw std::invalid_argument("diebold-mariano needs at least 2 pairs");
    double mean = 0.0;
    bool all_zero = true;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = loss_a[i] - loss_b[i];
        all_zero = all_zero && d == 0.0;
        mean += d;
    }
    if (all_zero) return {0.0, 1.0};
    mean /= static_cast<double>(n);
    double gamma0 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double c = (loss_a[i] - loss_b[i]) - mean;
        gamma0 += c * c;
    }
    gamma0 /= static_cast<double>(n);
    DieboldMarianoResult r;
    if (gamma0 <= 0.0) {
        r.statistic = mean > 0.0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
        r.p_value = 0.0;
        return r;
    }
    r.statistic = mean / std::sqrt(gamma0 / static_cast<double>(n));
    r.p_value = stats::two_sided_p(r.statistic);
    return r;
}

inline std::vector<double> squared_errors(std::span<const PredictionRecord> records) {
    std::vector<double> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back((r.predicted - r.actual) * (r.predicted - r.actual));
    return out;
}

}  // namespace driftcast
