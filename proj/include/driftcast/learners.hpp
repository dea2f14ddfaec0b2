#pragma once

#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "driftcast/features.hpp"
#include "driftcast/log.hpp"
#include "driftcast/mlp.hpp"
#include "driftcast/stream.hpp"

namespace driftcast {

/// Dual contract used by every adaptation strategy.
///   train:   fresh model fitted on a window; all prior state is discarded.
///   update:  continue fitting the existing model on targets in [from, to).
///   predict: side-effect free; history must end at or before t.
/// Implementations are single-writer; predict may run concurrently between mutations.
class Learner {
public:
    virtual ~Learner() = default;

    virtual void train(const StreamView& window) = 0;
    virtual void update(const StreamView& history, TimeIndex from, TimeIndex to) = 0;
    virtual double predict(const StreamView& history, TimeIndex t, std::size_t zone_pos) const = 0;
    virtual std::unique_ptr<Learner> clone() const = 0;
    virtual std::string name() const = 0;
};

/// Y(t) = Y(t-1).
class NaiveLearner final : public Learner {
public:
    void train(const StreamView&) override {}
    void update(const StreamView&, TimeIndex, TimeIndex) override {}
    double predict(const StreamView& history, TimeIndex t, std::size_t zone_pos) const override {
        if (t - 1 < history.begin_time()) throw ColdStartError("naive forecast needs the previous hour");
        return static_cast<double>(history.at(t - 1, zone_pos));
    }
    std::unique_ptr<Learner> clone() const override { return std::make_unique<NaiveLearner>(*this); }
    std::string name() const override { return "naive"; }
};

/// Y(t) = Y(t-168).
class SeasonalNaiveLearner final : public Learner {
public:
    void train(const StreamView&) override {}
    void update(const StreamView&, TimeIndex, TimeIndex) override {}
    double predict(const StreamView& history, TimeIndex t, std::size_t zone_pos) const override {
        if (t - kHoursPerWeek < history.begin_time()) throw ColdStartError("seasonal naive forecast needs t-168");
        return static_cast<double>(history.at(t - kHoursPerWeek, zone_pos));
    }
    std::unique_ptr<Learner> clone() const override { return std::make_unique<SeasonalNaiveLearner>(*this); }
    std::string name() const override { return "seasonal_naive"; }
};

/// Samples for every (t, zone) with t in [from, to) and full feature history inside `history`.
struct SampleMatrix {
    std::vector<double> rows;
    std::vector<double> targets;
    std::size_t inputs = 0;

    std::size_t size() const { return targets.size(); }
};

inline SampleMatrix build_samples(const StreamView& history, TimeIndex from, TimeIndex to) {
    SampleMatrix m;
    m.inputs = FeatureVector::dimension(history.zone_count());
    const TimeIndex first = std::max(from, history.begin_time() + kFeatureHistory);
    const TimeIndex last = std::min(to, history.end_time());
    if (last <= first) return m;
    const std::size_t n = static_cast<std::size_t>(last - first) * history.zone_count();
    m.rows.resize(n * m.inputs);
    m.targets.resize(n);
    std::size_t r = 0;
    for (TimeIndex t = first; t < last; ++t) {
        for (std::size_t z = 0; z < history.zone_count(); ++z, ++r) {
            build_features_into(history.sub(history.begin_time(), t), t, z,
                                std::span<double>(m.rows).subspan(r * m.inputs, m.inputs));
            m.targets[r] = static_cast<double>(history.at(t, z));
        }
    }
    return m;
}

/// One MLP over all zones (zones enter as a one-hot block).
class MlpLearner final : public Learner {
public:
    explicit MlpLearner(MlpConfig config = {}) : model_(config) {}

    void train(const StreamView& window) override {
        SampleMatrix s = build_samples(window, window.begin_time(), window.end_time());
        if (s.size() == 0) {
            throw InsufficientHistoryError("training window shorter than " + std::to_string(kFeatureHistory) +
                                           "h of feature history plus one sample");
        }
        model_ = MlpRegressor(model_.config());
        model_.train(s.rows, s.targets, s.inputs);
        zones_ = window.zone_count();
    }

    void update(const StreamView& history, TimeIndex from, TimeIndex to) override {
        SampleMatrix s = build_samples(history, from, to);
        if (s.size() == 0) {
            log::warn("update batch has no usable samples; skipped");
            return;
        }
        model_.update(s.rows, s.targets);
    }

    double predict(const StreamView& history, TimeIndex t, std::size_t zone_pos) const override {
        if (history.end_time() > t) throw StreamAccessError("prediction history extends to or past the target hour");
        thread_local std::vector<double> x;
        x.resize(FeatureVector::dimension(history.zone_count()));
        build_features_into(history, t, zone_pos, x);
        return model_.predict(x);
    }

    std::unique_ptr<Learner> clone() const override { return std::make_unique<MlpLearner>(*this); }
    std::string name() const override { return "mlp"; }

    const MlpRegressor& model() const { return model_; }
    MlpRegressor& model() { return model_; }

private:
    MlpRegressor model_;
    std::size_t zones_ = 0;
};

enum class LearnerKind { naive, seasonal_naive, mlp };

NLOHMANN_JSON_SERIALIZE_ENUM(LearnerKind, {{LearnerKind::naive, "naive"},
                                           {LearnerKind::seasonal_naive, "seasonal_naive"},
                                           {LearnerKind::mlp, "mlp"}})

struct LearnerConfig {
    LearnerKind kind = LearnerKind::mlp;
    MlpConfig mlp{};

    std::unique_ptr<Learner> make() const {
        switch (kind) {
            case LearnerKind::naive: return std::make_unique<NaiveLearner>();
            case LearnerKind::seasonal_naive: return std::make_unique<SeasonalNaiveLearner>();
            case LearnerKind::mlp: return std::make_unique<MlpLearner>(mlp);
        }
        return nullptr;
    }
};

inline void to_json(nlohmann::json& j, const LearnerConfig& c) {
    j = nlohmann::json{{"kind", c.kind}};
    if (c.kind == LearnerKind::mlp) j.update(nlohmann::json(c.mlp));
}

}  // namespace driftcast
