#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>

#include <nlohmann/json.hpp>

#include "driftcast/prequential.hpp"

#ifndef DRIFTCAST_VERSION
#define DRIFTCAST_VERSION "0.1.0"
#endif

namespace driftcast {

inline constexpr const char* kArtifactVersion = DRIFTCAST_VERSION;

inline std::string_view to_string(MetricMode m) { return m == MetricMode::pooled ? "pooled" : "zone_mean"; }

/// Fixed-format number for CSV output ("%.10g"); inf/nan spelled out.
inline std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

/// JSON has no infinities; they are written as strings.
inline nlohmann::ordered_json json_number(double v) {
    if (std::isfinite(v)) return v;
    return format_number(v);
}

inline std::string action_counts(const StrategySummary& s) {
    const auto part = [](std::uint64_t n) { return n ? std::to_string(n) : std::string("-"); };
    return "(" + part(s.updates) + "/" + part(s.retrains) + ")";
}

inline nlohmann::ordered_json report_to_json(const EvaluationReport& r, const Epoch& epoch,
                                             const nlohmann::ordered_json& provenance = nlohmann::ordered_json::object()) {
    nlohmann::ordered_json j;
    j["artifact"] = "driftcast";
    j["version"] = kArtifactVersion;
    for (const auto& [k, v] : provenance.items()) j[k] = v;
    j["forecast"] = {{"start", epoch.format(r.forecast_start)},
                     {"end", epoch.format(r.forecast_end)},
                     {"records_per_strategy", r.runs.empty() ? 0 : r.runs.front().records.size()}};
    j["metric_mode"] = std::string(to_string(r.metric_mode));

    auto& rows = j["strategies"] = nlohmann::ordered_json::array();
    for (const auto& s : r.strategies) {
        nlohmann::ordered_json row;
        row["name"] = s.name;
        row["kind"] = std::string(to_string(s.kind));
        row["detector"] = s.detector ? nlohmann::ordered_json(std::string(to_string(*s.detector))) : nlohmann::ordered_json(nullptr);
        row["smape"] = json_number(s.smape);
        row["rmse"] = json_number(s.rmse);
        row["updates"] = s.updates;
        row["retrains"] = s.retrains;
        row["actions"] = action_counts(s);
        rows.push_back(std::move(row));
    }

    auto series = [&](const std::vector<RollingPoint>& pts) {
        auto arr = nlohmann::ordered_json::array();
        for (const auto& p : pts) {
            arr.push_back({{"window_start", epoch.format(p.window_start)}, {"value", json_number(p.value)}, {"count", p.count}});
        }
        return arr;
    };
    auto& rolling = j["rolling"] = nlohmann::ordered_json::array();
    for (const auto& s : r.rolling) {
        rolling.push_back({{"strategy", s.strategy},
                           {"quarterly_rmse", series(s.quarterly_rmse)},
                           {"quarterly_smape", series(s.quarterly_smape)},
                           {"yearly_smape", series(s.yearly_smape)}});
    }

    auto& dm = j["diebold_mariano"] = nlohmann::ordered_json::array();
    for (const auto& e : r.diebold_mariano) {
        dm.push_back({{"a", e.a},
                      {"b", e.b},
                      {"statistic", json_number(e.result.statistic)},
                      {"p_value", json_number(e.result.p_value)},
                      {"significant_at_0.01", e.result.p_value < 0.01}});
    }
    return j;
}

inline void write_summary_csv(std::ostream& out, const EvaluationReport& r) {
    out << "strategy,smape,rmse,updates,retrains,actions\n";
    for (const auto& s : r.strategies) {
        out << s.name << ',' << format_number(s.smape) << ',' << format_number(s.rmse) << ',' << s.updates << ','
            << s.retrains << ',' << action_counts(s) << '\n';
    }
}

inline void write_rolling_csv(std::ostream& out, const EvaluationReport& r, const Epoch& epoch) {
    out << "strategy,metric,window_start,value,count\n";
    auto emit = [&](const std::string& strategy, const char* metric, const std::vector<RollingPoint>& pts) {
        for (const auto& p : pts) {
            out << strategy << ',' << metric << ',' << epoch.format(p.window_start) << ',' << format_number(p.value) << ','
                << p.count << '\n';
        }
    };
    for (const auto& s : r.rolling) {
        emit(s.strategy, "quarterly_rmse", s.quarterly_rmse);
        emit(s.strategy, "quarterly_smape", s.quarterly_smape);
        emit(s.strategy, "yearly_smape", s.yearly_smape);
    }
}

inline void write_dm_csv(std::ostream& out, const EvaluationReport& r) {
    out << "strategy_a,strategy_b,statistic,p_value\n";
    for (const auto& e : r.diebold_mariano) {
        out << e.a << ',' << e.b << ',' << format_number(e.result.statistic) << ',' << format_number(e.result.p_value) << '\n';
    }
}

/// time_hour,action,window_start,window_end
inline void write_action_log(std::ostream& out, const RunResult& run, const Epoch& epoch) {
    out << "time_hour,action,window_start,window_end\n";
    for (const auto& a : run.actions) {
        out << epoch.format(a.at) << ',' << to_string(a.action.kind) << ',' << epoch.format(a.action.window_start) << ','
            << epoch.format(a.action.window_end) << '\n';
    }
}

/// time_hour,detector,status (warnings and drifts)
inline void write_verdict_log(std::ostream& out, const RunResult& run, const Epoch& epoch) {
    out << "time_hour,detector,status\n";
    for (const auto& v : run.verdicts) {
        out << epoch.format(v.at) << ',' << to_string(v.detector) << ',' << to_string(v.status) << '\n';
    }
}

inline void write_predictions_csv(std::ostream& out, const RunResult& run, const Epoch& epoch) {
    out << "time_hour,zone,actual,predicted,correct\n";
    for (const auto& p : run.records) {
        out << epoch.format(p.time) << ',' << p.zone << ',' << format_number(p.actual) << ',' << format_number(p.predicted)
            << ',' << (p.correct ? 1 : 0) << '\n';
    }
}

/// File-name-safe form of a strategy label.
inline std::string file_stem(const std::string& label) {
    std::string s = label;
    for (char& c : s) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' || c == '_';
        if (!ok) c = '_';
    }
    return s;
}

}  // namespace driftcast
