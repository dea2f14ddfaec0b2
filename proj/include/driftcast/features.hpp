#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include "driftcast/stream.hpp"
#include "driftcast/time.hpp"

namespace driftcast {

inline constexpr std::int64_t kDailyLags = 24;
inline constexpr std::int64_t kWeeklyLags = 4;
/// Hours of history a feature vector needs: four weeks back.
inline constexpr std::int64_t kFeatureHistory = kWeeklyLags * kHoursPerWeek;

class ColdStartError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct FeatureVector {
    std::vector<double> zone_onehot;
    std::array<double, 7> weekday_onehot{};
    std::array<double, kDailyLags> lag_24h{};        // demand at t-1 ... t-24
    std::array<double, kWeeklyLags> weekly_lags{};  // demand at t-168, t-336, t-504, t-672
    double hour_sin = 0.0;
    double hour_cos = 1.0;
    double month_sin = 0.0;
    double month_cos = 1.0;

    static constexpr std::size_t dimension(std::size_t zones) { return zones + 7 + kDailyLags + kWeeklyLags + 4; }
    std::size_t dimension() const { return dimension(zone_onehot.size()); }

    /// Flat layout: zones, weekdays, daily lags, weekly lags, hour sin/cos, month sin/cos.
    std::vector<double> flatten() const {
        std::vector<double> out;
        out.reserve(dimension());
        out.insert(out.end(), zone_onehot.begin(), zone_onehot.end());
        out.insert(out.end(), weekday_onehot.begin(), weekday_onehot.end());
        out.insert(out.end(), lag_24h.begin(), lag_24h.end());
        out.insert(out.end(), weekly_lags.begin(), weekly_lags.end());
        out.insert(out.end(), {hour_sin, hour_cos, month_sin, month_cos});
        return out;
    }
};

inline bool has_feature_history(const StreamView& history, TimeIndex t) {
    return t - kFeatureHistory >= history.begin_time() && t <= history.end_time();
}

/// Writes the flat feature vector for (t, zone) into out (size FeatureVector::dimension(zones)).
/// Reads only demand strictly before t.
inline void build_features_into(const StreamView& history, TimeIndex t, std::size_t zone_pos, std::span<double> out) {
    const std::size_t zones = history.zone_count();
    if (out.size() != FeatureVector::dimension(zones)) throw std::invalid_argument("feature buffer has wrong size");
    if (!has_feature_history(history, t)) {
        throw ColdStartError("insufficient history for features at hour " + std::to_string(t.hour));
    }
    const CalendarFields cal = history.epoch().decompose(t);
    std::size_t k = 0;
    for (std::size_t z = 0; z < zones; ++z) out[k++] = z == zone_pos ? 1.0 : 0.0;
    for (int d = 0; d < 7; ++d) out[k++] = d == cal.weekday ? 1.0 : 0.0;
    for (std::int64_t lag = 1; lag <= kDailyLags; ++lag) out[k++] = static_cast<double>(history.at(t - lag, zone_pos));
    for (std::int64_t w = 1; w <= kWeeklyLags; ++w) {
        out[k++] = static_cast<double>(history.at(t - w * kHoursPerWeek, zone_pos));
    }
    const double hour_angle = 2.0 * std::numbers::pi * cal.hour_of_day / 24.0;
    const double month_angle = 2.0 * std::numbers::pi * (cal.month - 1) / 12.0;
    out[k++] = std::sin(hour_angle);
    out[k++] = std::cos(hour_angle);
    out[k++] = std::sin(month_angle);
    out[k++] = std::cos(month_angle);
}

inline FeatureVector build_features(const StreamView& history, TimeIndex t, std::size_t zone_pos) {
    const std::size_t zones = history.zone_count();
    std::vector<double> flat(FeatureVector::dimension(zones));
    build_features_into(history, t, zone_pos, flat);
    FeatureVector fv;
    fv.zone_onehot.assign(flat.begin(), flat.begin() + static_cast<std::ptrdiff_t>(zones));
    std::size_t k = zones;
    for (auto& v : fv.weekday_onehot) v = flat[k++];
    for (auto& v : fv.lag_24h) v = flat[k++];
    for (auto& v : fv.weekly_lags) v = flat[k++];
    fv.hour_sin = flat[k++];
    fv.hour_cos = flat[k++];
    fv.month_sin = flat[k++];
    fv.month_cos = flat[k++];
    return fv;
}

/// y'(t) = (y(t) - y(t-24)) - (y(t-168) - y(t-192)). Output has input length - 192 entries.
/// Integer input stays in integer arithmetic, so a 168-periodic series maps to exact zeros.
template <class T>
    requires std::is_arithmetic_v<T>
std::vector<T> seasonal_difference(std::span<const T> series, std::size_t daily = 24, std::size_t weekly = 168) {
    const std::size_t span = daily + weekly;
    if (series.size() <= span) throw std::invalid_argument("series too short for seasonal differencing");
    std::vector<T> out(series.size() - span);
    for (std::size_t i = span; i < series.size(); ++i) {
        out[i - span] = (series[i] - series[i - daily]) - (series[i - weekly] - series[i - weekly - daily]);
    }
    return out;
}

template <class T>
std::vector<T> seasonal_difference(const std::vector<T>& series, std::size_t daily = 24, std::size_t weekly = 168) {
    return seasonal_difference(std::span<const T>(series), daily, weekly);
}

/// Seasonally differenced value at a single hour, from zone-summed demand.
inline std::int64_t seasonal_difference_at(const StreamView& history, TimeIndex t) {
    return (history.total_at(t) - history.total_at(t - 24)) - (history.total_at(t - 168) - history.total_at(t - 192));
}

inline std::int64_t seasonal_difference_at(const StreamView& history, TimeIndex t, std::size_t zone_pos) {
    return (history.at(t, zone_pos) - history.at(t - 24, zone_pos)) -
           (history.at(t - 168, zone_pos) - history.at(t - 192, zone_pos));
}

/// Per-column affine scaling, fitted once and then frozen.
class Standardizer {
public:
    Standardizer() = default;
    Standardizer(std::vector<double> mean, std::vector<double> scale) : mean_(std::move(mean)), scale_(std::move(scale)) {}

    /// rows: row-major matrix with `cols` columns. Zero-variance columns get scale 1.
    static Standardizer fit(std::span<const double> rows, std::size_t cols) {
        const std::size_t n = cols == 0 ? 0 : rows.size() / cols;
        std::vector<double> mean(cols, 0.0), scale(cols, 1.0);
        if (n == 0) return {mean, scale};
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < cols; ++c) mean[c] += rows[r * cols + c];
        for (auto& m : mean) m /= static_cast<double>(n);
        std::vector<double> var(cols, 0.0);
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < cols; ++c) {
                const double d = rows[r * cols + c] - mean[c];
                var[c] += d * d;
            }
        for (std::size_t c = 0; c < cols; ++c) {
            const double sd = std::sqrt(var[c] / static_cast<double>(n));
            scale[c] = sd > 1e-12 ? sd : 1.0;
        }
        return {mean, scale};
    }

    static Standardizer identity(std::size_t cols) { return {std::vector<double>(cols, 0.0), std::vector<double>(cols, 1.0)}; }

    std::size_t size() const { return mean_.size(); }
    const std::vector<double>& mean() const { return mean_; }
    const std::vector<double>& scale() const { return scale_; }

    void apply(std::span<double> row) const {
        for (std::size_t c = 0; c < row.size(); ++c) row[c] = (row[c] - mean_[c]) / scale_[c];
    }

    void apply_rows(std::span<double> rows) const {
        const std::size_t cols = mean_.size();
        for (std::size_t off = 0; off + cols <= rows.size(); off += cols) apply(rows.subspan(off, cols));
    }

    double invert(double v, std::size_t col = 0) const { return v * scale_[col] + mean_[col]; }

    bool operator==(const Standardizer&) const = default;

private:
    std::vector<double> mean_;
    std::vector<double> scale_;
};

}  // namespace driftcast
