#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "driftcast/rng.hpp"
#include "driftcast/stream.hpp"
#include "driftcast/time.hpp"

namespace driftcast {

enum class DriftKind { none, incremental_ramp, step };
enum class NoiseKind { none, poisson, gaussian };

NLOHMANN_JSON_SERIALIZE_ENUM(DriftKind, {{DriftKind::none, "none"},
                                         {DriftKind::incremental_ramp, "incremental_ramp"},
                                         {DriftKind::step, "step"}})
NLOHMANN_JSON_SERIALIZE_ENUM(NoiseKind, {{NoiseKind::none, "none"},
                                         {NoiseKind::poisson, "poisson"},
                                         {NoiseKind::gaussian, "gaussian"}})

/// Seeded demand generator with a daily/weekly profile and an optional injected drift.
struct SyntheticSpec {
    std::uint64_t seed = 0;
    int n_zones = 4;
    double years = 4.0;
    std::vector<double> base_level{100.0, 200.0, 300.0, 400.0};  // one per zone
    double daily_amplitude = 0.5;                                 // in [0, 1]
    std::array<double, 7> weekly_profile{1.0, 1.0, 1.0, 1.05, 1.15, 1.2, 0.9};  // Monday first
    int peak_hour = 18;
    DriftKind drift_kind = DriftKind::none;
    double drift_start_years = 2.5;  // offset from the epoch
    double drift_magnitude = 0.0;    // relative factor; -0.4 means the level ends 40% lower
    NoiseKind noise = NoiseKind::poisson;
    double noise_sigma = 0.0;  // gaussian only
    Epoch epoch{};

    /// Whole calendar years from the epoch plus the fractional part in 365-day years.
    std::int64_t hours() const {
        const double whole = std::floor(years);
        const TimeIndex end = epoch.add_years(TimeIndex{0}, static_cast<int>(whole));
        return end.hour + static_cast<std::int64_t>(std::llround((years - whole) * static_cast<double>(kHoursPerYear)));
    }

    TimeIndex drift_start() const {
        const double whole = std::floor(drift_start_years);
        const TimeIndex t = epoch.add_years(TimeIndex{0}, static_cast<int>(whole));
        return t + static_cast<std::int64_t>(std::llround((drift_start_years - whole) * static_cast<double>(kHoursPerYear)));
    }

    /// Empty when valid; otherwise one message per offending field.
    std::vector<std::string> validate() const {
        std::vector<std::string> errors;
        if (n_zones <= 0) errors.push_back("n_zones: must be positive");
        if (!(years > 0.0)) errors.push_back("years: must be > 0");
        if (static_cast<int>(base_level.size()) != n_zones) errors.push_back("base_level: needs one entry per zone");
        for (double b : base_level) {
            if (!(b >= 0.0)) {
                errors.push_back("base_level: entries must be >= 0");
                break;
            }
        }
        if (!(daily_amplitude >= 0.0 && daily_amplitude <= 1.0)) errors.push_back("daily_amplitude: must lie in [0, 1]");
        for (double w : weekly_profile) {
            if (!(w >= 0.0)) {
                errors.push_back("weekly_profile: entries must be >= 0");
                break;
            }
        }
        if (peak_hour < 0 || peak_hour > 23) errors.push_back("peak_hour: must lie in [0, 23]");
        if (drift_kind != DriftKind::none) {
            if (!(drift_start_years >= 0.0 && drift_start_years < years)) {
                errors.push_back("drift_start_years: must lie in [0, years)");
            }
            if (!(drift_magnitude >= -1.0)) errors.push_back("drift_magnitude: must be >= -1");
        }
        if (noise == NoiseKind::gaussian && !(noise_sigma >= 0.0)) errors.push_back("noise_sigma: must be >= 0");
        return errors;
    }

    /// Deterministic seasonal factor; exactly 168-periodic.
    double season(TimeIndex t) const {
        const CalendarFields f = epoch.decompose(t);
        const double angle = 2.0 * std::numbers::pi * static_cast<double>(f.hour_of_day - peak_hour) / 24.0;
        return weekly_profile[static_cast<std::size_t>(f.weekday)] * (1.0 + daily_amplitude * std::cos(angle));
    }

    double trend(TimeIndex t) const {
        const TimeIndex start = drift_start();
        if (drift_kind == DriftKind::none || t < start) return 1.0;
        if (drift_kind == DriftKind::step) return 1.0 + drift_magnitude;
        const std::int64_t last = hours() - 1;
        const double span = static_cast<double>(std::max<std::int64_t>(last - start.hour, 1));
        return 1.0 + drift_magnitude * static_cast<double>(t.hour - start.hour) / span;
    }

    /// Noise-free mean demand.
    double mean(TimeIndex t, std::size_t zone_pos) const { return trend(t) * base_level[zone_pos] * season(t); }
};

inline void to_json(nlohmann::json& j, const SyntheticSpec& s) {
    j = nlohmann::json{{"seed", s.seed},
                       {"n_zones", s.n_zones},
                       {"years", s.years},
                       {"base_level", s.base_level},
                       {"daily_amplitude", s.daily_amplitude},
                       {"weekly_profile", s.weekly_profile},
                       {"peak_hour", s.peak_hour},
                       {"drift_kind", s.drift_kind},
                       {"drift_start_years", s.drift_start_years},
                       {"drift_magnitude", s.drift_magnitude},
                       {"noise", s.noise},
                       {"noise_sigma", s.noise_sigma},
                       {"epoch", s.epoch.format(TimeIndex{0}).substr(0, 10)}};
}

/// Missing keys keep their defaults. Type errors propagate as nlohmann exceptions.
inline void from_json(const nlohmann::json& j, SyntheticSpec& s) {
    if (j.contains("seed")) j.at("seed").get_to(s.seed);
    if (j.contains("n_zones")) j.at("n_zones").get_to(s.n_zones);
    if (j.contains("years")) j.at("years").get_to(s.years);
    if (j.contains("base_level")) {
        if (j.at("base_level").is_number()) {
            s.base_level.assign(static_cast<std::size_t>(std::max(s.n_zones, 0)), j.at("base_level").get<double>());
        } else {
            j.at("base_level").get_to(s.base_level);
        }
    } else {
        s.base_level.resize(static_cast<std::size_t>(std::max(s.n_zones, 0)), 100.0);
    }
    if (j.contains("daily_amplitude")) j.at("daily_amplitude").get_to(s.daily_amplitude);
    if (j.contains("weekly_profile")) j.at("weekly_profile").get_to(s.weekly_profile);
    if (j.contains("peak_hour")) j.at("peak_hour").get_to(s.peak_hour);
    if (j.contains("drift_kind")) {
        j.at("drift_kind").get_to(s.drift_kind);
        if (s.drift_kind == DriftKind::none && j.at("drift_kind") != "none") {
            throw std::invalid_argument("drift_kind: unknown value");
        }
    }
    if (j.contains("drift_start_years")) j.at("drift_start_years").get_to(s.drift_start_years);
    if (j.contains("drift_magnitude")) j.at("drift_magnitude").get_to(s.drift_magnitude);
    if (j.contains("noise")) {
        j.at("noise").get_to(s.noise);
        if (s.noise == NoiseKind::none && j.at("noise") != "none") throw std::invalid_argument("noise: unknown value");
    }
    if (j.contains("noise_sigma")) j.at("noise_sigma").get_to(s.noise_sigma);
    if (j.contains("epoch")) {
        const auto t = Epoch{}.parse(j.at("epoch").get<std::string>());
        if (!t) throw std::invalid_argument("epoch: expected YYYY-MM-DD");
        s.epoch = Epoch{Epoch{}.day() + std::chrono::days{t->hour / kHoursPerDay}};
    }
}

class SpecValidationError : public std::invalid_argument {
public:
    explicit SpecValidationError(std::vector<std::string> errors)
        : std::invalid_argument(join(errors)), errors_(std::move(errors)) {}
    const std::vector<std::string>& errors() const { return errors_; }

private:
    static std::string join(const std::vector<std::string>& errors) {
        std::string out = "invalid synthetic spec";
        for (const auto& e : errors) out += "; " + e;
        return out;
    }
    std::vector<std::string> errors_;
};

/// demand(t, z) = round(max(0, trend(t) * base_level(z) * season(t) + noise)).
/// Zones are numbered 1..n_zones; the stream starts at the spec's epoch (hour 0).
/// Random draws happen in fixed (hour, zone) order, so a spec always produces the same stream.
inline DemandStream generate_synthetic(const SyntheticSpec& spec) {
    if (auto errors = spec.validate(); !errors.empty()) throw SpecValidationError(std::move(errors));
    std::vector<ZoneId> zones(static_cast<std::size_t>(spec.n_zones));
    for (int z = 0; z < spec.n_zones; ++z) zones[static_cast<std::size_t>(z)] = z + 1;
    const std::int64_t n_hours = spec.hours();
    DemandStream out(spec.epoch, TimeIndex{0}, n_hours, zones);
    Rng rng(spec.seed);
    for (std::int64_t h = 0; h < n_hours; ++h) {
        const TimeIndex t{h};
        const double trend = spec.trend(t);
        const double season = spec.season(t);
        for (std::size_t z = 0; z < zones.size(); ++z) {
            const double mean = std::max(0.0, trend * spec.base_level[z] * season);
            std::int64_t value = 0;
            switch (spec.noise) {
                case NoiseKind::none: value = std::llround(mean); break;
                case NoiseKind::poisson: value = rng.poisson(mean); break;
                case NoiseKind::gaussian: {
                    const double x = mean + spec.noise_sigma * rng.normal();
                    value = x > 0.0 ? std::llround(x) : 0;
                    break;
                }
            }
            out.set(t, z, value);
        }
    }
    return out;
}

/// Ground truth for detector-delay scoring, written next to generated streams.
inline nlohmann::json drift_ground_truth(const SyntheticSpec& spec) {
    return nlohmann::json{{"drift_kind", spec.drift_kind},
                          {"drift_start", spec.epoch.format(spec.drift_start())},
                          {"drift_start_hour", spec.drift_start().hour},
                          {"drift_magnitude", spec.drift_magnitude},
                          {"stream_end", spec.epoch.format(TimeIndex{spec.hours()})},
                          {"seed", spec.seed}};
}

}  // namespace driftcast
