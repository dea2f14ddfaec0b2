#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "driftcast/detectors.hpp"
#include "driftcast/learners.hpp"
#include "driftcast/metrics.hpp"
#include "driftcast/rng.hpp"
#include "driftcast/strategies.hpp"
#include "driftcast/synthetic.hpp"

namespace driftcast {

/// Every problem found in a config, each prefixed with the JSON pointer of the offending value.
class ConfigError : public std::invalid_argument {
public:
    explicit ConfigError(std::vector<std::string> errors)
        : std::invalid_argument(join(errors)), errors_(std::move(errors)) {}
    const std::vector<std::string>& errors() const { return errors_; }

private:
    static std::string join(const std::vector<std::string>& errors) {
        std::string out;
        for (const auto& e : errors) out += (out.empty() ? "" : "\n") + e;
        return out;
    }
    std::vector<std::string> errors_;
};

struct StreamSource {
    std::optional<std::string> path;
    std::optional<SyntheticSpec> synthetic;
    std::string epoch = "2009-01-01";  // file sources only; synthetic specs carry their own
};

struct RunConfig {
    std::uint64_t seed = 0;
    StreamSource stream;
    LearnerConfig learner;
    std::vector<StrategyConfig> strategies;
    DetectorSettings detectors;
    MetricMode metric_mode = MetricMode::pooled;
    bool per_zone_detectors = false;
    std::string output_dir;
    std::optional<std::string> forecast_start;
    std::optional<std::string> forecast_end;
    unsigned jobs = 1;
    bool write_predictions = false;
    nlohmann::ordered_json source = nlohmann::ordered_json::object();  // the document as given

    std::uint64_t learner_seed() const { return derive_seed(seed, "learner"); }
    std::uint64_t synthetic_seed() const { return derive_seed(seed, "synthetic"); }

    /// Learner config with its seed drawn from the global seed.
    LearnerConfig seeded_learner() const {
        LearnerConfig c = learner;
        c.mlp.seed = learner_seed();
        return c;
    }

    std::optional<SyntheticSpec> seeded_synthetic() const {
        if (!stream.synthetic) return std::nullopt;
        SyntheticSpec s = *stream.synthetic;
        s.seed = synthetic_seed();
        return s;
    }
};

namespace detail {

class ConfigReader {
public:
    std::vector<std::string> errors;

    void fail(const std::string& path, const std::string& message) { errors.push_back((path.empty() ? "/" : path) + ": " + message); }

    bool object(const nlohmann::json& j, const std::string& path, std::initializer_list<const char*> allowed) {
        if (!j.is_object()) {
            fail(path, "expected an object");
            return false;
        }
        const std::set<std::string> keys(allowed.begin(), allowed.end());
        for (const auto& [k, v] : j.items()) {
            if (!keys.contains(k)) fail(path + "/" + k, "unknown field");
        }
        return true;
    }

    template <class T>
    void number(const nlohmann::json& j, const std::string& parent, const char* key, T& out, double lo, double hi,
                bool integer) {
        if (!j.contains(key)) return;
        const std::string path = parent + "/" + key;
        const auto& v = j.at(key);
        if (!v.is_number() || (integer && !v.is_number_integer())) {
            fail(path, integer ? "expected an integer" : "expected a number");
            return;
        }
        const double x = v.get<double>();
        if (!(x >= lo && x <= hi)) {
            fail(path, "must lie in [" + nlohmann::json(lo).dump() + ", " + nlohmann::json(hi).dump() + "]");
            return;
        }
        out = v.get<T>();
    }

    bool string(const nlohmann::json& j, const std::string& parent, const char* key, std::string& out) {
        if (!j.contains(key)) return false;
        if (!j.at(key).is_string()) {
            fail(parent + "/" + key, "expected a string");
            return false;
        }
        out = j.at(key).get<std::string>();
        return true;
    }

    void boolean(const nlohmann::json& j, const std::string& parent, const char* key, bool& out) {
        if (!j.contains(key)) return;
        if (!j.at(key).is_boolean()) {
            fail(parent + "/" + key, "expected a boolean");
            return;
        }
        out = j.at(key).get<bool>();
    }
};

inline void read_stream(ConfigReader& r, const nlohmann::json& j, StreamSource& out) {
    if (!r.object(j, "/stream", {"path", "synthetic", "epoch"})) return;
    const bool has_path = j.contains("path");
    const bool has_synth = j.contains("synthetic");
    if (has_path == has_synth) {
        r.fail("/stream", "exactly one of 'path' or 'synthetic' is required");
        return;
    }
    if (has_path) {
        std::string p;
        if (r.string(j, "/stream", "path", p)) out.path = p;
        r.string(j, "/stream", "epoch", out.epoch);
        if (!Epoch{}.parse(out.epoch)) r.fail("/stream/epoch", "expected YYYY-MM-DD");
        return;
    }
    if (j.contains("epoch")) r.fail("/stream/epoch", "synthetic streams take the epoch inside 'synthetic'");
    const auto& s = j.at("synthetic");
    if (!r.object(s, "/stream/synthetic",
                  {"n_zones", "years", "base_level", "daily_amplitude", "weekly_profile", "peak_hour", "drift_kind",
                   "drift_start_years", "drift_magnitude", "noise", "noise_sigma", "epoch", "seed"})) {
        return;
    }
    if (s.contains("seed")) r.fail("/stream/synthetic/seed", "seeds derive from the global /seed");
    try {
        SyntheticSpec spec = s.get<SyntheticSpec>();
        for (const auto& e : spec.validate()) r.fail("/stream/synthetic/" + e.substr(0, e.find(':')), e.substr(e.find(':') + 2));
        out.synthetic = spec;
    } catch (const std::exception& e) {
        r.fail("/stream/synthetic", e.what());
    }
}

inline void read_learner(ConfigReader& r, const nlohmann::json& j, LearnerConfig& out) {
    if (!r.object(j, "/learner",
                  {"kind", "hidden_units", "dropout_rate", "learning_rate", "lr_decay", "epochs_train", "epochs_update",
                   "batch_size", "seed"})) {
        return;
    }
    std::string kind = "mlp";
    r.string(j, "/learner", "kind", kind);
    if (kind == "mlp") {
        out.kind = LearnerKind::mlp;
    } else if (kind == "naive") {
        out.kind = LearnerKind::naive;
    } else if (kind == "seasonal_naive") {
        out.kind = LearnerKind::seasonal_naive;
    } else {
        r.fail("/learner/kind", "expected one of mlp, naive, seasonal_naive");
    }
    if (j.contains("seed")) r.fail("/learner/seed", "seeds derive from the global /seed");
    auto& m = out.mlp;
    r.number(j, "/learner", "hidden_units", m.hidden_units, 1, 1e6, true);
    r.number(j, "/learner", "dropout_rate", m.dropout_rate, 0.0, 0.99, false);
    r.number(j, "/learner", "learning_rate", m.learning_rate, 0.0, 10.0, false);
    r.number(j, "/learner", "lr_decay", m.lr_decay, 0.0, 1.0, false);
    r.number(j, "/learner", "epochs_train", m.epochs_train, 0, 1e6, true);
    r.number(j, "/learner", "epochs_update", m.epochs_update, 0, 1e6, true);
    r.number(j, "/learner", "batch_size", m.batch_size, 1, 1e9, true);
}

inline void read_detectors(ConfigReader& r, const nlohmann::json& j, DetectorSettings& d) {
    if (!r.object(j, "/detectors", {"adwin", "stepd", "hdddm", "mk", "binarize"})) return;
    if (j.contains("adwin") && r.object(j["adwin"], "/detectors/adwin", {"delta", "max_buckets"})) {
        r.number(j["adwin"], "/detectors/adwin", "delta", d.adwin_delta, 1e-12, 1.0, false);
        r.number(j["adwin"], "/detectors/adwin", "max_buckets", d.adwin_max_buckets, 2, 1e6, true);
    }
    if (j.contains("stepd") && r.object(j["stepd"], "/detectors/stepd", {"window", "alpha_drift", "alpha_warning"})) {
        r.number(j["stepd"], "/detectors/stepd", "window", d.stepd_window, 1, 1e9, true);
        r.number(j["stepd"], "/detectors/stepd", "alpha_drift", d.stepd_alpha_drift, 0.0, 1.0, false);
        r.number(j["stepd"], "/detectors/stepd", "alpha_warning", d.stepd_alpha_warning, 0.0, 1.0, false);
        if (d.stepd_alpha_drift > d.stepd_alpha_warning) r.fail("/detectors/stepd/alpha_drift", "must not exceed alpha_warning");
    }
    if (j.contains("hdddm") && r.object(j["hdddm"], "/detectors/hdddm", {"batch_size", "gamma"})) {
        r.number(j["hdddm"], "/detectors/hdddm", "batch_size", d.hdddm_batch_size, 4, 1e9, true);
        r.number(j["hdddm"], "/detectors/hdddm", "gamma", d.hdddm_gamma, 0.0, 1e6, false);
    }
    if (j.contains("mk") && r.object(j["mk"], "/detectors/mk", {"block_size", "alpha"})) {
        r.number(j["mk"], "/detectors/mk", "block_size", d.mk_block_size, 4, 1e9, true);
        r.number(j["mk"], "/detectors/mk", "alpha", d.mk_alpha, 1e-12, 0.5, false);
    }
    if (j.contains("binarize") && r.object(j["binarize"], "/detectors/binarize", {"threshold", "eps_zero"})) {
        r.number(j["binarize"], "/detectors/binarize", "threshold", d.correct_threshold, 0.0, 1e6, false);
        r.number(j["binarize"], "/detectors/binarize", "eps_zero", d.eps_zero, 0.0, 1e15, false);
    }
}

inline void read_strategy(ConfigReader& r, const nlohmann::json& j, const std::string& path, StrategyConfig& s) {
    if (!r.object(j, path, {"name", "kind", "period", "detector", "lambda_years", "tau_years", "update_batch_hours"})) return;
    r.string(j, path, "name", s.name);
    std::string kind;
    if (!r.string(j, path, "kind", kind)) {
        if (!j.contains("kind")) r.fail(path + "/kind", "required");
        return;
    }
    const auto k = parse_strategy_kind(kind);
    if (!k) {
        r.fail(path + "/kind", "unknown strategy kind '" + kind + "'");
        return;
    }
    s.kind = *k;
    std::string text;
    if (r.string(j, path, "period", text)) {
        if (!is_periodic(s.kind)) r.fail(path + "/period", "only periodic strategies take a period");
        if (const auto p = parse_period(text)) {
            s.period = *p;
        } else {
            r.fail(path + "/period", "expected quarter or year");
        }
    } else if (is_periodic(s.kind) && !j.contains("period")) {
        r.fail(path + "/period", "required for " + kind + " strategy '" + s.label() + "'");
    }
    if (r.string(j, path, "detector", text)) {
        if (const auto d = parse_detector_kind(text)) {
            s.detector = *d;
        } else {
            r.fail(path + "/detector", "expected one of adwin, stepd, hdddm, mk");
        }
        if (!needs_detector(s.kind)) r.fail(path + "/detector", "not used by " + kind + " strategies");
    }
    r.number(j, path, "lambda_years", s.lambda_years, 1, 100, true);
    if (j.contains("tau_years") && j["tau_years"].is_string() && j["tau_years"] == "inf") {
        s.tau_years = std::numeric_limits<double>::infinity();
    } else {
        r.number(j, path, "tau_years", s.tau_years, 1e-9, 1e6, false);
    }
    if (j.contains("update_batch_hours")) {
        std::int64_t h = 0;
        r.number(j, path, "update_batch_hours", h, 1, 1e9, true);
        if (h > 0) s.update_batch_hours = h;
    }
    if (needs_detector(s.kind) && !s.detector && !j.contains("detector")) {
        r.fail(path + "/detector", "required for " + kind + " strategy '" + s.label() + "'");
    }
}

}  // namespace detail

/// Parses and validates a run config; throws ConfigError listing every problem.
inline RunConfig parse_run_config(const nlohmann::ordered_json& doc) {
    detail::ConfigReader r;
    RunConfig c;
    c.source = doc;
    const nlohmann::json j = doc;
    if (!r.object(j, "",
                  {"seed", "stream", "learner", "strategies", "detectors", "metric_mode", "detector_mode", "output_dir",
                   "forecast_start", "forecast_end", "jobs", "write_predictions"})) {
        throw ConfigError(r.errors);
    }
    if (!j.contains("seed")) {
        r.fail("/seed", "required");
    } else if (!j["seed"].is_number_unsigned() && !(j["seed"].is_number_integer() && j["seed"].get<std::int64_t>() >= 0)) {
        r.fail("/seed", "expected a non-negative integer");
    } else {
        c.seed = j["seed"].get<std::uint64_t>();
    }

    if (j.contains("stream")) {
        detail::read_stream(r, j["stream"], c.stream);
    } else {
        r.fail("/stream", "required");
    }
    if (j.contains("learner")) detail::read_learner(r, j["learner"], c.learner);
    if (j.contains("detectors")) detail::read_detectors(r, j["detectors"], c.detectors);

    if (!j.contains("strategies")) {
        r.fail("/strategies", "required");
    } else if (!j["strategies"].is_array()) {
        r.fail("/strategies", "expected an array");
    } else {
        const auto& arr = j["strategies"];
        if (arr.empty()) r.fail("/strategies", "needs at least one strategy");
        std::set<std::string> labels;
        for (std::size_t i = 0; i < arr.size(); ++i) {
            const std::string path = "/strategies/" + std::to_string(i);
            StrategyConfig s;
            const std::size_t before = r.errors.size();
            detail::read_strategy(r, arr[i], path, s);
            if (r.errors.size() != before) continue;
            if (!labels.insert(s.label()).second) r.fail(path + "/name", "duplicate strategy label '" + s.label() + "'");
            c.strategies.push_back(s);
        }
    }

    std::string text;
    if (r.string(j, "", "metric_mode", text)) {
        if (text == "pooled") {
            c.metric_mode = MetricMode::pooled;
        } else if (text == "zone_mean") {
            c.metric_mode = MetricMode::zone_mean;
        } else {
            r.fail("/metric_mode", "expected pooled or zone_mean");
        }
    }
    if (r.string(j, "", "detector_mode", text)) {
        if (text == "pooled" || text == "per_zone") {
            c.per_zone_detectors = text == "per_zone";
        } else {
            r.fail("/detector_mode", "expected pooled or per_zone");
        }
    }
    r.string(j, "", "output_dir", c.output_dir);
    for (const char* key : {"forecast_start", "forecast_end"}) {
        if (r.string(j, "", key, text)) {
            if (!Epoch{}.parse(text)) {
                r.fail(std::string("/") + key, "expected an ISO date or date-time");
            } else {
                (std::string(key) == "forecast_start" ? c.forecast_start : c.forecast_end) = text;
            }
        }
    }
    r.number(j, "", "jobs", c.jobs, 1, 1024, true);
    r.boolean(j, "", "write_predictions", c.write_predictions);

    if (!r.errors.empty()) throw ConfigError(r.errors);
    return c;
}

inline RunConfig parse_run_config(const std::string& text) {
    nlohmann::ordered_json doc;
    try {
        doc = nlohmann::ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError({std::string("/: not valid JSON (") + e.what() + ")"});
    }
    return parse_run_config(doc);
}

}  // namespace driftcast
