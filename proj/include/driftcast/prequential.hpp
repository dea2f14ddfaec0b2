#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "driftcast/detectors.hpp"
#include "driftcast/features.hpp"
#include "driftcast/learners.hpp"
#include "driftcast/metrics.hpp"
#include "driftcast/strategies.hpp"
#include "driftcast/stream.hpp"

namespace driftcast {

struct RunOptions {
    std::optional<TimeIndex> forecast_start;  // default: stream start + lambda years
    std::optional<TimeIndex> forecast_end;    // default: stream end (exclusive)
    bool per_zone_detectors = false;          // default: one detector over the pooled stream
};

struct ActionLogEntry {
    TimeIndex at;
    AdaptationAction action;
};

struct VerdictLogEntry {
    TimeIndex at;
    DetectorKind detector;
    DriftStatus status;
};

struct RunResult {
    std::string strategy;
    StrategyConfig config;
    TimeIndex forecast_start;
    TimeIndex forecast_end;
    std::vector<PredictionRecord> records;
    std::vector<ActionLogEntry> actions;    // non-none actions only
    std::vector<VerdictLogEntry> verdicts;  // warnings and drifts only
    StrategyState final_state;
};

class StreamTooShortError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Default first forecast hour: start of the stream plus lambda calendar years.
inline TimeIndex default_forecast_start(const DemandStream& stream, int lambda_years) {
    return stream.epoch().add_years(stream.begin_time(), lambda_years);
}

inline void check_run_bounds(const DemandStream& stream, TimeIndex start, TimeIndex end) {
    if (start - stream.begin_time() < kFeatureHistory + 1) {
        throw StreamTooShortError("initial training window holds no sample with " + std::to_string(kFeatureHistory) +
                                  "h of feature history");
    }
    if (end <= start || end > stream.end_time()) throw StreamTooShortError("stream ends before the forecast horizon");
}

/// Test-then-train loop. For every hour t in [start, end): predict all zones from data before t,
/// record outcomes, feed the detector, let the strategy decide with now = t + 1, apply the action.
/// `initial`, when given, is the already fitted starting model (it is cloned, never modified).
inline RunResult prequential_run(const DemandStream& stream, const Learner& prototype, const StrategyConfig& config,
                                 const DetectorSettings& detector_settings = {}, const RunOptions& options = {},
                                 const Learner* initial = nullptr) {
    if (auto errors = config.validate(); !errors.empty()) throw std::invalid_argument("strategy '" + config.label() + "': " + errors.front());
    const Epoch& epoch = stream.epoch();
    const TimeIndex start = options.forecast_start.value_or(default_forecast_start(stream, config.lambda_years));
    const TimeIndex end = options.forecast_end.value_or(stream.end_time());
    check_run_bounds(stream, start, end);

    std::unique_ptr<Learner> learner;
    if (initial) {
        learner = initial->clone();
    } else {
        learner = prototype.clone();
        learner->train(stream.view(SlidingWindow{config.lambda(), start}.start(epoch), start));
    }

    std::vector<std::unique_ptr<Detector>> detectors;
    const bool error_input = config.detector && consumes_prediction_errors(*config.detector);
    if (config.detector && needs_detector(config.kind)) {
        const std::size_t count = options.per_zone_detectors ? stream.zone_count() : 1;
        for (std::size_t i = 0; i < count; ++i) detectors.push_back(make_detector(*config.detector, detector_settings));
    }

    RunResult result;
    result.strategy = config.label();
    result.config = config;
    result.forecast_start = start;
    result.forecast_end = end;
    result.records.reserve(static_cast<std::size_t>(end - start) * stream.zone_count());
    StrategyState state = initial_state(start);

    for (TimeIndex t = start; t < end; ++t) {
        const StreamView past = stream.view(stream.begin_time(), t);
        DriftStatus status = DriftStatus::stable;
        for (std::size_t z = 0; z < stream.zone_count(); ++z) {
            PredictionRecord rec;
            rec.time = t;
            rec.zone = stream.zones()[z];
            rec.actual = static_cast<double>(stream.at(t, z));
            rec.predicted = learner->predict(past, t, z);
            rec.correct = binarize(rec, detector_settings.correct_threshold, detector_settings.eps_zero);
            result.records.push_back(rec);
            if (!detectors.empty() && error_input) {
                Detector& d = *detectors[options.per_zone_detectors ? z : 0];
                status = most_severe(status, d.update(rec.correct ? 0.0 : 1.0));
            }
        }
        if (!detectors.empty() && !error_input && t - 192 >= stream.begin_time()) {
            const StreamView observed = stream.view(stream.begin_time(), t + 1);
            if (options.per_zone_detectors) {
                for (std::size_t z = 0; z < stream.zone_count(); ++z) {
                    status = most_severe(status, detectors[z]->update(static_cast<double>(seasonal_difference_at(observed, t, z))));
                }
            } else {
                status = most_severe(status, detectors[0]->update(static_cast<double>(seasonal_difference_at(observed, t))));
            }
        }
        if (status != DriftStatus::stable) result.verdicts.push_back({t, *config.detector, status});

        const TimeIndex now = t + 1;
        const StrategyState before = state;
        AdaptationAction action;
        std::tie(state, action) = decide(config, state, now, status, epoch);
        if (action.kind == ActionKind::none) continue;
        const AdaptationAction applied = apply(action, *learner, stream.view(stream.begin_time(), now));
        if (applied.kind == ActionKind::none) {
            state = before;
            continue;
        }
        result.actions.push_back({now, applied});
    }
    result.final_state = state;
    return result;
}

struct StrategySummary {
    std::string name;
    StrategyKind kind = StrategyKind::static_model;
    std::optional<DetectorKind> detector;
    double smape = 0.0;
    double rmse = 0.0;
    std::uint64_t updates = 0;
    std::uint64_t retrains = 0;
};

struct RollingSeries {
    std::string strategy;
    std::vector<RollingPoint> quarterly_rmse;
    std::vector<RollingPoint> quarterly_smape;
    std::vector<RollingPoint> yearly_smape;
};

struct DmEntry {
    std::string a;
    std::string b;
    DieboldMarianoResult result;
};

struct EvaluationReport {
    TimeIndex forecast_start;
    TimeIndex forecast_end;
    MetricMode metric_mode = MetricMode::pooled;
    std::vector<StrategySummary> strategies;
    std::vector<RollingSeries> rolling;
    std::vector<DmEntry> diebold_mariano;
    std::vector<RunResult> runs;
};

struct CompareOptions {
    RunOptions run{};
    MetricMode metric_mode = MetricMode::pooled;
    unsigned jobs = 1;
};

inline EvaluationReport assemble_report(std::vector<RunResult> runs, MetricMode mode, const Epoch& epoch) {
    EvaluationReport report;
    report.metric_mode = mode;
    if (runs.empty()) return report;
    report.forecast_start = runs.front().forecast_start;
    report.forecast_end = runs.front().forecast_end;
    const auto& keys = runs.front().records;
    for (const auto& run : runs) {
        bool paired = run.records.size() == keys.size();
        for (std::size_t i = 0; paired && i < keys.size(); ++i) {
            paired = run.records[i].time == keys[i].time && run.records[i].zone == keys[i].zone;
        }
        if (!paired) throw std::logic_error("strategy runs are not paired on (time, zone)");
        StrategySummary s;
        s.name = run.strategy;
        s.kind = run.config.kind;
        s.detector = needs_detector(run.config.kind) ? run.config.detector : std::nullopt;
        s.smape = evaluate_metric(run.records, smape, mode);
        s.rmse = evaluate_metric(run.records, rmse, mode);
        for (const auto& a : run.actions) {
            if (a.action.kind == ActionKind::update) ++s.updates;
            if (a.action.kind == ActionKind::retrain) ++s.retrains;
        }
        report.strategies.push_back(s);
        report.rolling.push_back({run.strategy, rolling_metric(run.records, rmse, Period::quarter, epoch),
                                  rolling_metric(run.records, smape, Period::quarter, epoch),
                                  rolling_metric(run.records, smape, Period::year, epoch)});
    }
    std::vector<std::vector<double>> losses;
    for (const auto& run : runs) losses.push_back(squared_errors(run.records));
    for (std::size_t i = 0; i < runs.size(); ++i) {
        for (std::size_t j = i + 1; j < runs.size(); ++j) {
            report.diebold_mariano.push_back({runs[i].strategy, runs[j].strategy, diebold_mariano(losses[i], losses[j])});
        }
    }
    report.runs = std::move(runs);
    return report;
}

/// Runs every strategy on the same stream and forecast hours. Strategies with equal lambda share
/// one initial fit (training is deterministic, so this equals fitting each separately).
inline EvaluationReport compare_strategies(const DemandStream& stream, const Learner& prototype,
                                           const std::vector<StrategyConfig>& configs,
                                           const DetectorSettings& detector_settings = {}, CompareOptions options = {}) {
    if (configs.size() < 2) throw std::invalid_argument("compare needs at least two strategies");
    for (const auto& c : configs) {
        if (auto errors = c.validate(); !errors.empty()) throw std::invalid_argument("strategy '" + c.label() + "': " + errors.front());
    }
    int max_lambda = 0;
    for (const auto& c : configs) max_lambda = std::max(max_lambda, c.lambda_years);
    RunOptions run_options = options.run;
    if (!run_options.forecast_start) run_options.forecast_start = default_forecast_start(stream, max_lambda);
    if (!run_options.forecast_end) run_options.forecast_end = stream.end_time();
    check_run_bounds(stream, *run_options.forecast_start, *run_options.forecast_end);

    std::map<int, std::unique_ptr<Learner>> initial;
    for (const auto& c : configs) {
        if (initial.contains(c.lambda_years)) continue;
        auto model = prototype.clone();
        model->train(stream.view(SlidingWindow{c.lambda(), *run_options.forecast_start}.start(stream.epoch()),
                                 *run_options.forecast_start));
        initial.emplace(c.lambda_years, std::move(model));
    }

    std::vector<RunResult> runs(configs.size());
    auto run_one = [&](std::size_t i) {
        runs[i] = prequential_run(stream, prototype, configs[i], detector_settings, run_options,
                                  initial.at(configs[i].lambda_years).get());
    };
    const unsigned jobs = std::max(1u, std::min<unsigned>(options.jobs, static_cast<unsigned>(configs.size())));
    if (jobs == 1) {
        for (std::size_t i = 0; i < configs.size(); ++i) run_one(i);
    } else {
        std::vector<std::exception_ptr> errors(jobs);
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < jobs; ++w) {
            pool.emplace_back([&, w] {
                try {
                    for (std::size_t i = w; i < configs.size(); i += jobs) run_one(i);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
        for (auto& th : pool) th.join();
        for (auto& e : errors) {
            if (e) std::rethrow_exception(e);
        }
    }
    return assemble_report(std::move(runs), options.metric_mode, stream.epoch());
}

}  // namespace driftcast
