#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "driftcast/detectors.hpp"
#include "driftcast/learners.hpp"
#include "driftcast/log.hpp"
#include "driftcast/stream.hpp"
#include "driftcast/time.hpp"

namespace driftcast {

enum class StrategyKind { static_model, periodic_update, periodic_retrain, triggered_update, triggered_retrain, switching };

NLOHMANN_JSON_SERIALIZE_ENUM(StrategyKind, {{StrategyKind::static_model, "static"},
                                            {StrategyKind::periodic_update, "periodic_update"},
                                            {StrategyKind::periodic_retrain, "periodic_retrain"},
                                            {StrategyKind::triggered_update, "triggered_update"},
                                            {StrategyKind::triggered_retrain, "triggered_retrain"},
                                            {StrategyKind::switching, "switching"}})

inline std::string_view to_string(StrategyKind k) {
    switch (k) {
        case StrategyKind::static_model: return "static";
        case StrategyKind::periodic_update: return "periodic_update";
        case StrategyKind::periodic_retrain: return "periodic_retrain";
        case StrategyKind::triggered_update: return "triggered_update";
        case StrategyKind::triggered_retrain: return "triggered_retrain";
        case StrategyKind::switching: return "switching";
    }
    return "static";
}

inline std::optional<StrategyKind> parse_strategy_kind(std::string_view s) {
    if (s == "static") return StrategyKind::static_model;
    if (s == "periodic_update") return StrategyKind::periodic_update;
    if (s == "periodic_retrain") return StrategyKind::periodic_retrain;
    if (s == "triggered_update") return StrategyKind::triggered_update;
    if (s == "triggered_retrain") return StrategyKind::triggered_retrain;
    if (s == "switching") return StrategyKind::switching;
    return std::nullopt;
}

inline bool is_periodic(StrategyKind k) { return k == StrategyKind::periodic_update || k == StrategyKind::periodic_retrain; }
inline bool needs_detector(StrategyKind k) {
    return k == StrategyKind::triggered_update || k == StrategyKind::triggered_retrain || k == StrategyKind::switching;
}

struct StrategyConfig {
    std::string name;
    StrategyKind kind = StrategyKind::static_model;
    Period period = Period::year;                // periodic only
    std::optional<DetectorKind> detector;        // triggered and switching only
    int lambda_years = 2;                        // training window length
    double tau_years = 1.0;                      // switching retrain lockout, 365-day years
    std::optional<std::int64_t> update_batch_hours;  // unset: everything since the last action

    std::string label() const {
        if (!name.empty()) return name;
        std::string s(to_string(kind));
        if (is_periodic(kind)) s += std::string("_") + std::string(to_string(period));
        if (detector) s += std::string("_") + std::string(to_string(*detector));
        return s;
    }

    std::int64_t tau_hours() const {
        if (std::isinf(tau_years)) return std::numeric_limits<std::int64_t>::max();
        return static_cast<std::int64_t>(std::llround(tau_years * static_cast<double>(kHoursPerYear)));
    }

    WindowDuration lambda() const { return {lambda_years, Period::year}; }

    std::vector<std::string> validate() const {
        std::vector<std::string> errors;
        if (lambda_years <= 0) errors.push_back("lambda_years: must be > 0");
        if (!(tau_years > 0.0)) errors.push_back("tau_years: must be > 0");
        if (needs_detector(kind) && !detector) {
            errors.push_back("detector: required for " + std::string(to_string(kind)) + " strategy '" + label() + "'");
        }
        if (update_batch_hours && *update_batch_hours <= 0) errors.push_back("update_batch_hours: must be > 0");
        return errors;
    }
};

struct StrategyState {
    TimeIndex last_retrain_at;
    TimeIndex last_action_at;
    std::uint64_t updates = 0;
    std::uint64_t retrains = 0;

    bool operator==(const StrategyState&) const = default;
};

enum class ActionKind { none, update, retrain };

inline std::string_view to_string(ActionKind k) {
    switch (k) {
        case ActionKind::none: return "none";
        case ActionKind::update: return "update";
        case ActionKind::retrain: return "retrain";
    }
    return "none";
}

/// Retrain: fit a fresh model on [window_start, window_end). Update: continue fitting on targets
/// in [window_start, window_end).
struct AdaptationAction {
    ActionKind kind = ActionKind::none;
    TimeIndex window_start;
    TimeIndex window_end;

    bool operator==(const AdaptationAction&) const = default;
};

/// State right after the initial fit at `trained_at`.
inline StrategyState initial_state(TimeIndex trained_at) { return {trained_at, trained_at, 0, 0}; }

/// `now` is the exclusive end of observed data: every demand value before `now` is known.
/// Periodic strategies act when `now` is a calendar quarter/year boundary. Triggered strategies
/// act on drift. Switching updates on drift while now - last_retrain < tau, retrains otherwise.
inline std::pair<StrategyState, AdaptationAction> decide(const StrategyConfig& config, StrategyState state, TimeIndex now,
                                                         DriftStatus verdict, const Epoch& epoch = {}) {
    ActionKind kind = ActionKind::none;
    switch (config.kind) {
        case StrategyKind::static_model: break;
        case StrategyKind::periodic_update:
        case StrategyKind::periodic_retrain:
            if (now > state.last_action_at && epoch.is_period_boundary(now, config.period)) {
                kind = config.kind == StrategyKind::periodic_update ? ActionKind::update : ActionKind::retrain;
            }
            break;
        case StrategyKind::triggered_update:
            if (verdict == DriftStatus::drift) kind = ActionKind::update;
            break;
        case StrategyKind::triggered_retrain:
            if (verdict == DriftStatus::drift) kind = ActionKind::retrain;
            break;
        case StrategyKind::switching:
            if (verdict == DriftStatus::drift) {
                kind = (now - state.last_retrain_at) < config.tau_hours() ? ActionKind::update : ActionKind::retrain;
            }
            break;
    }

    AdaptationAction action{kind, now, now};
    if (kind == ActionKind::retrain) {
        action.window_start = SlidingWindow{config.lambda(), now}.start(epoch);
        state.last_retrain_at = now;
        ++state.retrains;
        state.last_action_at = now;
    } else if (kind == ActionKind::update) {
        action.window_start = config.update_batch_hours ? now - *config.update_batch_hours : state.last_action_at;
        ++state.updates;
        state.last_action_at = now;
    }
    return {state, action};
}

/// Executes an action against the learner. history must end at action.window_end. Returns the
/// action actually performed: a retrain without enough history for one sample is downgraded to none.
inline AdaptationAction apply(const AdaptationAction& action, Learner& learner, const StreamView& history) {
    switch (action.kind) {
        case ActionKind::none: return action;
        case ActionKind::retrain: {
            const StreamView window = history.sub(action.window_start, action.window_end);
            try {
                learner.train(window);
            } catch (const InsufficientHistoryError& e) {
                log::warn(std::string("retrain skipped: ") + e.what());
                return {ActionKind::none, action.window_start, action.window_end};
            }
            return action;
        }
        case ActionKind::update: {
            if (action.window_end <= action.window_start) return action;
            learner.update(history.sub(history.begin_time(), action.window_end), action.window_start, action.window_end);
            return action;
        }
    }
    return action;
}

}  // namespace driftcast
