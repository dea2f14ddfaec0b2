#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "driftcast/prequential.hpp"
#include "driftcast/report.hpp"
#include "driftcast/synthetic.hpp"

using namespace driftcast;

namespace {

PredictionRecord rec(double actual, double predicted, std::int64_t hour = 0, ZoneId zone = 1) {
    return {TimeIndex{hour}, zone, actual, predicted, binarize(actual, predicted)};
}

}  // namespace

TEST(Smape, HandValues) {
    EXPECT_NEAR(smape(std::vector{rec(100, 110)}), 100.0 * 10.0 / 105.0, 1e-9);
    EXPECT_NEAR(smape(std::vector{rec(100, 110)}), 9.5238, 1e-4);
    EXPECT_EQ(smape(std::vector{rec(5, 5), rec(7, 7)}), 0.0);
    EXPECT_EQ(smape(std::vector{rec(0, 0)}), 0.0);
    EXPECT_NEAR(smape(std::vector{rec(0, 0), rec(100, 110)}), 50.0 * 10.0 / 105.0, 1e-9);
    EXPECT_NEAR(smape(std::vector{rec(0, 3)}), 200.0, 1e-12);
    EXPECT_THROW(smape(std::vector<PredictionRecord>{}), std::invalid_argument);
}

TEST(Rmse, HandValuesAndHomogeneity) {
    EXPECT_NEAR(rmse(std::vector{rec(10, 13), rec(10, 6)}), std::sqrt(12.5), 1e-9);
    EXPECT_NEAR(rmse(std::vector{rec(10, 13), rec(10, 6)}), 3.5355, 1e-4);
    EXPECT_EQ(rmse(std::vector{rec(4, 4)}), 0.0);
    Rng rng(1);
    std::vector<PredictionRecord> a, b;
    for (int i = 0; i < 50; ++i) {
        const double y = rng.uniform(0, 100), e = rng.normal();
        a.push_back(rec(y, y + e));
        b.push_back(rec(y, y - 3.5 * e));
    }
    EXPECT_NEAR(rmse(b), 3.5 * rmse(a), 1e-9);
}

TEST(ZoneMean, AveragesPerZoneMetrics) {
    const std::vector<PredictionRecord> r{rec(10, 13, 0, 1), rec(10, 10, 0, 2), rec(10, 10, 1, 2)};
    EXPECT_NEAR(evaluate_metric(r, rmse, MetricMode::zone_mean), 1.5, 1e-12);
    EXPECT_NEAR(evaluate_metric(r, rmse, MetricMode::pooled), std::sqrt(3.0), 1e-12);
}

TEST(Rolling, QuarterlyMseIdentityAndLocality) {
    const Epoch e;
    Rng rng(5);
    std::vector<PredictionRecord> r;
    const TimeIndex start = e.at(2011, 1, 1), end = e.at(2012, 7, 1);
    const TimeIndex bad_from = e.at(2011, 7, 1), bad_to = e.at(2011, 10, 1);
    for (TimeIndex t = start; t < end; t = t + 5) {
        const double noise = (t >= bad_from && t < bad_to) ? 10.0 : 1.0;
        r.push_back(rec(100.0, 100.0 + noise, t.hour));
    }
    const auto q = rolling_metric(r, mse, Period::quarter, e);
    ASSERT_EQ(q.size(), 6u);
    double weighted = 0.0;
    std::size_t total = 0;
    for (const auto& p : q) {
        weighted += p.value * static_cast<double>(p.count);
        total += p.count;
        EXPECT_NEAR(p.value, p.window_start == bad_from ? 100.0 : 1.0, 1e-12);
    }
    EXPECT_EQ(total, r.size());
    EXPECT_NEAR(weighted / static_cast<double>(total), std::pow(rmse(r), 2), 1e-9);
    EXPECT_EQ(q[2].window_start, bad_from);
}

TEST(DieboldMariano, DegenerateCases) {
    const std::vector<double> a{1, 2, 3, 4, 5};
    auto same = diebold_mariano(a, a);
    EXPECT_EQ(same.statistic, 0.0);
    EXPECT_EQ(same.p_value, 1.0);

    Rng rng(2);
    std::vector<double> x(1000), y(1000);
    for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = static_cast<double>(rng.below(50));
        y[i] = x[i] + 1.0;  // small integers, so the loss difference is exactly -1
    }
    const auto sep = diebold_mariano(x, y);
    EXPECT_LT(sep.p_value, 1e-6);
    EXPECT_TRUE(std::isinf(sep.statistic) && sep.statistic < 0);
}

TEST(DieboldMariano, AntisymmetricAndMatchesHandFormula) {
    const std::vector<double> a{3, 1, 4, 1, 5, 9, 2, 6};
    const std::vector<double> b{2, 7, 1, 8, 2, 8, 1, 8};
    const auto ab = diebold_mariano(a, b), ba = diebold_mariano(b, a);
    EXPECT_EQ(ab.statistic, -ba.statistic);
    EXPECT_EQ(ab.p_value, ba.p_value);
    double mean = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) mean += a[i] - b[i];
    mean /= 8.0;
    double g0 = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) g0 += std::pow(a[i] - b[i] - mean, 2);
    g0 /= 8.0;
    EXPECT_NEAR(ab.statistic, mean / std::sqrt(g0 / 8.0), 1e-12);
    EXPECT_NEAR(ab.p_value, std::erfc(std::fabs(ab.statistic) / std::sqrt(2.0)), 1e-12);
}

namespace {

DemandStream drifting_stream() {
    SyntheticSpec s;
    s.seed = 3;
    s.n_zones = 2;
    s.years = 2.5;
    s.base_level = {100, 200};
    s.drift_kind = DriftKind::incremental_ramp;
    s.drift_magnitude = -0.4;
    s.drift_start_years = 2.0;
    return generate_synthetic(s);
}

}  // namespace

TEST(Compare, IdenticalStrategiesGiveIdenticalRows) {
    const DemandStream s = drifting_stream();
    StrategyConfig a, b;
    a.name = "static_a";
    b.name = "static_b";
    const auto report = compare_strategies(s, SeasonalNaiveLearner{}, {a, b});
    ASSERT_EQ(report.strategies.size(), 2u);
    EXPECT_EQ(report.strategies[0].smape, report.strategies[1].smape);
    EXPECT_EQ(report.strategies[0].rmse, report.strategies[1].rmse);
    ASSERT_EQ(report.diebold_mariano.size(), 1u);
    EXPECT_EQ(report.diebold_mariano[0].result.p_value, 1.0);
}

TEST(Compare, ActionCountsMatchTracesAndJobsDoNotMatter) {
    const DemandStream s = drifting_stream();
    StrategyConfig st;
    StrategyConfig q;
    q.kind = StrategyKind::periodic_retrain;
    q.period = Period::quarter;
    StrategyConfig sw;
    sw.kind = StrategyKind::switching;
    sw.detector = DetectorKind::mann_kendall;
    const std::vector<StrategyConfig> configs{st, q, sw};
    const auto one = compare_strategies(s, NaiveLearner{}, configs);
    CompareOptions parallel;
    parallel.jobs = 3;
    const auto three = compare_strategies(s, NaiveLearner{}, configs, {}, parallel);
    const Epoch e;
    for (std::size_t i = 0; i < configs.size(); ++i) {
        std::uint64_t updates = 0, retrains = 0;
        for (const auto& a : one.runs[i].actions) {
            updates += a.action.kind == ActionKind::update;
            retrains += a.action.kind == ActionKind::retrain;
        }
        EXPECT_EQ(one.strategies[i].updates, updates);
        EXPECT_EQ(one.strategies[i].retrains, retrains);
    }
    EXPECT_EQ(one.strategies[1].retrains, 2u);  // 2011-04-01 and 2011-07-01
    EXPECT_EQ(report_to_json(one, e).dump(), report_to_json(three, e).dump());
}

TEST(Compare, NeedsTwoStrategies) {
    const DemandStream s = drifting_stream();
    EXPECT_THROW(compare_strategies(s, NaiveLearner{}, {StrategyConfig{}}), std::invalid_argument);
}

TEST(Report, CsvLayouts) {
    const DemandStream s = drifting_stream();
    StrategyConfig a, b;
    b.kind = StrategyKind::periodic_update;
    b.period = Period::quarter;
    const auto report = compare_strategies(s, NaiveLearner{}, {a, b});
    std::ostringstream summary, dm, actions;
    write_summary_csv(summary, report);
    write_dm_csv(dm, report);
    write_action_log(actions, report.runs[1], s.epoch());
    EXPECT_EQ(summary.str().substr(0, summary.str().find('\n')), "strategy,smape,rmse,updates,retrains,actions");
    EXPECT_NE(summary.str().find("static,"), std::string::npos);
    EXPECT_NE(summary.str().find("(2/-)"), std::string::npos);
    EXPECT_EQ(dm.str().substr(0, dm.str().find('\n')), "strategy_a,strategy_b,statistic,p_value");
    EXPECT_NE(actions.str().find("2011-04-01T00:00:00Z,update,2011-01-01T00:00:00Z,2011-04-01T00:00:00Z"), std::string::npos);
}
