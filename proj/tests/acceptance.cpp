// Acceptance suite: one PASS/FAIL line per criterion. Exit status is nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "driftcast/commands.hpp"
#include "driftcast/prequential.hpp"
#include "driftcast/synthetic.hpp"
#include "support/oracles.hpp"

using namespace driftcast;

namespace {

int failures = 0;

void report(bool ok, const std::string& name, const std::string& detail) {
    std::printf("%s %s: %s\n", ok ? "PASS" : "FAIL", name.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

// ---------------------------------------------------------------------------------------------
// Strategy ordering and static degradation on the seeded drift fixture
// ---------------------------------------------------------------------------------------------

constexpr int kOrderingSeeds = 10;

SyntheticSpec drift_fixture(int seed) {
    SyntheticSpec s;
    s.seed = 1000 + static_cast<std::uint64_t>(seed);
    s.n_zones = 4;
    s.years = 4.0;
    s.base_level = {200.0, 300.0, 500.0, 800.0};
    s.drift_kind = DriftKind::incremental_ramp;
    s.drift_start_years = 2.5;
    s.drift_magnitude = -0.4;
    s.noise = NoiseKind::poisson;
    return s;
}

MlpConfig fixture_learner(int seed) {
    MlpConfig c;
    c.hidden_units = 32;
    c.dropout_rate = 0.0;
    c.learning_rate = 0.01;
    c.epochs_train = 8;
    c.epochs_update = 5;
    c.batch_size = 128;
    c.seed = 7 + static_cast<std::uint64_t>(seed);
    return c;
}

std::vector<StrategyConfig> fixture_strategies() {
    auto make = [](std::string name, StrategyKind kind, Period p = Period::year, std::optional<DetectorKind> d = std::nullopt) {
        StrategyConfig c;
        c.name = std::move(name);
        c.kind = kind;
        c.period = p;
        c.detector = d;
        c.lambda_years = 2;
        c.tau_years = 1.0;
        return c;
    };
    return {make("static", StrategyKind::static_model),
            make("quarterly_update", StrategyKind::periodic_update, Period::quarter),
            make("quarterly_retrain", StrategyKind::periodic_retrain, Period::quarter),
            make("yearly_update", StrategyKind::periodic_update, Period::year),
            make("yearly_retrain", StrategyKind::periodic_retrain, Period::year),
            make("triggered_update", StrategyKind::triggered_update, Period::year, DetectorKind::adwin),
            make("triggered_retrain", StrategyKind::triggered_retrain, Period::year, DetectorKind::adwin),
            make("switching", StrategyKind::switching, Period::year, DetectorKind::adwin)};
}

std::size_t index_of(const EvaluationReport& r, const std::string& name) {
    for (std::size_t i = 0; i < r.strategies.size(); ++i) {
        if (r.strategies[i].name == name) return i;
    }
    throw std::logic_error("missing strategy " + name);
}

void strategy_criteria() {
    const auto configs = fixture_strategies();
    std::vector<EvaluationReport> reports;
    const auto t0 = std::chrono::steady_clock::now();
    for (int seed = 0; seed < kOrderingSeeds; ++seed) {
        const DemandStream stream = generate_synthetic(drift_fixture(seed));
        reports.push_back(compare_strategies(stream, MlpLearner(fixture_learner(seed)), configs));
        const auto& r = reports.back();
        std::printf("  seed %d:", seed);
        for (const auto& s : r.strategies) std::printf(" %s=%.3f%s", s.name.c_str(), s.smape, action_counts(s).c_str());
        std::printf("\n");
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    // (a) every adaptive strategy beats static in at least 9 of 10 seeds
    bool all_a = true;
    std::string detail_a;
    for (const auto& c : configs) {
        if (c.kind == StrategyKind::static_model) continue;
        int wins = 0;
        for (const auto& r : reports) wins += r.strategies[index_of(r, c.name)].smape < r.strategies[index_of(r, "static")].smape;
        all_a = all_a && wins >= 9;
        detail_a += fmt("%s %d/10; ", c.name.c_str(), wins);
    }
    report(all_a, "strategy_ordering_adaptive_beats_static", detail_a + "need >= 9/10 each");

    int sw_wins = 0;
    for (const auto& r : reports) {
        sw_wins += r.strategies[index_of(r, "switching")].smape <= r.strategies[index_of(r, "triggered_retrain")].smape;
    }
    report(sw_wins >= 8, "strategy_ordering_switching_vs_triggered_retrain", fmt("switching <= triggered_retrain in %d/10 seeds, need >= 8", sw_wins));
    report(seconds <= 300.0, "strategy_ordering_runtime", fmt("%.1f s for %d seeds x %zu strategies, limit 300 s", seconds, kOrderingSeeds, configs.size()));

    // Static degradation: yearly sMAPE of the first and final forecast years, averaged over the seeds.
    auto year_values = [&](const std::string& name) {
        double first = 0.0, last = 0.0;
        for (const auto& r : reports) {
            const auto& ys = r.rolling[index_of(r, name)].yearly_smape;
            first += ys.front().value;
            last += ys.back().value;
        }
        return std::pair{first / kOrderingSeeds, last / kOrderingSeeds};
    };
    const auto [st_first, st_last] = year_values("static");
    const auto [sw_first, sw_last] = year_values("switching");
    const double st_rise = st_last / st_first - 1.0;
    const double sw_rise = sw_last / sw_first - 1.0;
    int per_seed = 0;
    for (const auto& r : reports) {
        const auto& s = r.rolling[index_of(r, "static")].yearly_smape;
        const auto& w = r.rolling[index_of(r, "switching")].yearly_smape;
        const double a = s.back().value / s.front().value - 1.0, b = w.back().value / w.front().value - 1.0;
        per_seed += a >= 0.20 && b <= 0.5 * a;
    }
    report(st_rise >= 0.20, "static_degradation_static_rises",
           fmt("seed-mean yearly sMAPE %.3f -> %.3f (%+.1f%%), need >= +20%%", st_first, st_last, 100.0 * st_rise));
    report(sw_rise <= 0.5 * st_rise, "static_degradation_switching_contained",
           fmt("switching %.3f -> %.3f (%+.1f%%), limit half of static = %+.1f%%; per-seed holds in %d/10", sw_first, sw_last,
               100.0 * sw_rise, 50.0 * st_rise, per_seed));
}

// ---------------------------------------------------------------------------------------------
// Detectors
// ---------------------------------------------------------------------------------------------

void detector_delay(DetectorKind kind) {
    const std::string name(to_string(kind));
    int on_time = 0;
    std::vector<int> delays;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        Rng rng(derive_seed(seed, "delay"));
        auto d = make_detector(kind);
        int delay = -1;
        for (int i = 0; i < 2500; ++i) {
            const bool error = rng.bernoulli(i < 2000 ? 0.1 : 0.5);
            if (d->update(error ? 1.0 : 0.0) == DriftStatus::drift && i >= 2000) {
                delay = i - 2000;
                break;
            }
        }
        if (delay >= 0) {
            ++on_time;
            delays.push_back(delay);
        }
    }
    std::sort(delays.begin(), delays.end());
    const int median = delays.empty() ? -1 : delays[delays.size() / 2];
    report(on_time >= 95, "detector_delay_" + name, fmt("%d/100 runs signal within 500 steps (median delay %d), need >= 95", on_time, median));

    int quiet = 0, worst = 0;
    long total = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        Rng rng(derive_seed(seed, "false-alarm"));
        auto d = make_detector(kind);
        int alarms = 0;
        for (int i = 0; i < 100000; ++i) alarms += d->update(rng.bernoulli(0.2) ? 1.0 : 0.0) == DriftStatus::drift;
        quiet += alarms <= 5;
        worst = std::max(worst, alarms);
        total += alarms;
    }
    report(quiet >= 90, "detector_false_alarms_" + name,
           fmt("%d/100 runs with <= 5 drifts over 100k stationary steps (mean %.2f, max %d), need >= 90", quiet, total / 100.0, worst));
}

void adwin_oracle() {
    int agree = 0, both = 0;
    std::string first_bad;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        Rng rng(derive_seed(seed, "adwin-oracle"));
        const int length = 2000 + static_cast<int>(rng.below(3001));
        const int change = 500 + static_cast<int>(rng.below(1500));
        const double p0 = rng.uniform(0.05, 0.45);
        const double p1 = std::min(0.95, p0 + rng.uniform(0.2, 0.45));
        Adwin fast;
        oracle::ExhaustiveAdwin slow(fast.delta());
        int t_fast = -1, t_slow = -1;
        std::uint64_t bucket = 0;
        for (int i = 0; i < length && (t_fast < 0 || t_slow < 0); ++i) {
            const double x = rng.bernoulli(i < change ? p0 : p1) ? 1.0 : 0.0;
            if (t_fast < 0 && fast.update(x) == DriftStatus::drift) {
                t_fast = i;
                bucket = fast.dropped().front();
            }
            if (t_slow < 0 && slow.update(x)) t_slow = i;
        }
        bool ok;
        if (t_fast < 0 && t_slow < 0) {
            ok = true;
        } else if (t_fast < 0 || t_slow < 0) {
            ok = false;
        } else {
            ++both;
            ok = std::abs(t_fast - t_slow) <= static_cast<int>(bucket);
        }
        agree += ok;
        if (!ok && first_bad.empty()) first_bad = fmt(" first mismatch seed %llu: bucketed %d exhaustive %d bucket %llu", static_cast<unsigned long long>(seed), t_fast, t_slow, static_cast<unsigned long long>(bucket));
    }
    report(agree == 100, "adwin_oracle_equivalence", fmt("%d/100 streams within one dropped bucket (%d with detections)", agree, both) + first_bad);
}

void mk_criteria() {
    Rng rng(derive_seed(0, "mk"));
    int exact = 0;
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t n = 4 + rng.below(197);
        std::vector<double> x(n);
        const bool ties = trial % 2 == 0;
        for (auto& v : x) v = ties ? static_cast<double>(rng.below(10)) : rng.normal();
        const MkResult fast = mk_statistic(x);
        const oracle::BruteMk slow = oracle::mann_kendall(x);
        exact += fast.s == slow.s && fast.var_s == slow.var_s;
    }
    report(exact == 500, "mk_exactness", fmt("%d/500 sequences with identical S and var_S (n in [4, 200])", exact));

    int evaluations = 0, drifts = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        Rng noise(derive_seed(seed, "mk-noise"));
        MannKendallStream mk(168, 0.05);
        while (mk.evaluations() < 10) {
            const std::size_t before = mk.evaluations();
            const DriftStatus s = mk.update(noise.normal());
            if (mk.evaluations() != before) {
                ++evaluations;
                drifts += s == DriftStatus::drift;
            }
        }
    }
    const double rate = static_cast<double>(drifts) / evaluations;
    report(rate >= 0.025 && rate <= 0.10, "mk_false_positive_rate", fmt("%d/%d evaluations drifted on white noise (rate %.4f), need [0.025, 0.10]", drifts, evaluations, rate));
}

void hellinger_criteria() {
    Rng rng(derive_seed(0, "hellinger"));
    int ok = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t bins = 2 + rng.below(19);
        std::vector<double> p(bins), q(bins);
        for (std::size_t k = 0; k < bins; ++k) {
            p[k] = rng.below(4) == 0 ? 0.0 : static_cast<double>(rng.below(50));
            q[k] = rng.below(4) == 0 ? 0.0 : static_cast<double>(rng.below(50));
        }
        p[rng.below(bins)] += 1.0;
        q[rng.below(bins)] += 1.0;
        const double pq = hellinger_distance(p, q), qp = hellinger_distance(q, p);
        bool same = true;
        const double sp = std::accumulate(p.begin(), p.end(), 0.0), sq = std::accumulate(q.begin(), q.end(), 0.0);
        for (std::size_t k = 0; k < bins; ++k) same = same && p[k] * sq == q[k] * sp;
        std::vector<double> scaled = p;
        for (auto& v : scaled) v *= 3.0;
        const bool good = pq == qp && pq >= 0.0 && pq <= std::sqrt(2.0) + 1e-12 && hellinger_distance(p, p) < 1e-12 &&
                          hellinger_distance(p, scaled) < 1e-7 && (same ? pq < 1e-7 : pq > 0.0);
        ok += good;
    }
    report(ok == 1000, "hellinger_properties", fmt("%d/1000 random pairs satisfy symmetry, [0, sqrt 2] bounds, zero iff equal", ok));
    const std::vector<double> a{1, 1}, b{9, 1};
    const double d = hellinger_distance(a, b);
    report(std::fabs(d - 0.4489) <= 1e-4, "hellinger_hand_example", fmt("d([1,1]/2, [9,1]/10) = %.6f, expected 0.4489 +- 1e-4", d));
}

// ---------------------------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------------------------

PredictionRecord record(double actual, double predicted, std::int64_t hour = 0) {
    return {TimeIndex{hour}, 1, actual, predicted, binarize(actual, predicted)};
}

void metric_fixtures() {
    const double s = smape(std::vector{record(100, 110)});
    const double s0 = smape(std::vector{record(0, 0)});
    const double r = rmse(std::vector{record(10, 13), record(10, 6)});
    const bool ok = std::fabs(s - 1000.0 / 105.0) <= 1e-9 && s0 == 0.0 && std::fabs(r - std::sqrt(12.5)) <= 1e-9;
    report(ok, "metric_fixtures", fmt("smape(100,110) = %.10f (9.5238095238), smape(0,0) = %g, rmse([3,-4]) = %.10f (3.5355339059)", s, s0, r));

    const Epoch e;
    Rng rng(derive_seed(0, "quarters"));
    std::vector<PredictionRecord> recs;
    for (TimeIndex t = e.at(2011, 1, 1); t < e.at(2013, 1, 1); t = t + 1 + static_cast<std::int64_t>(rng.below(5))) {
        const double y = rng.uniform(0.0, 500.0);
        recs.push_back(record(y, y + 20.0 * rng.normal(), t.hour));
    }
    const auto q = rolling_metric(recs, mse, Period::quarter, e);
    double weighted = 0.0;
    std::size_t n = 0;
    for (const auto& p : q) {
        weighted += p.value * static_cast<double>(p.count);
        n += p.count;
    }
    const double lhs = std::pow(rmse(recs), 2), rhs = weighted / static_cast<double>(n);
    report(std::fabs(lhs - rhs) <= 1e-9 * std::max(1.0, lhs) && n == recs.size(), "metric_quarterly_mse_identity",
           fmt("overall RMSE^2 = %.12f, count-weighted quarterly MSE = %.12f over %zu quarters", lhs, rhs, q.size()));
}

void dm_calibration() {
    Rng rng(derive_seed(0, "dm"));
    int rejections = 0;
    bool antisymmetric = true;
    std::vector<double> a(1000), b(1000);
    for (int sim = 0; sim < 1000; ++sim) {
        for (std::size_t i = 0; i < a.size(); ++i) {
            a[i] = std::pow(rng.normal(), 2);
            b[i] = std::pow(rng.normal(), 2);
        }
        const auto ab = diebold_mariano(a, b), ba = diebold_mariano(b, a);
        antisymmetric = antisymmetric && ab.statistic == -ba.statistic && ab.p_value == ba.p_value;
        rejections += ab.p_value < 0.01;
    }
    const double rate = rejections / 1000.0;
    report(rate >= 0.002 && rate <= 0.03, "dm_calibration", fmt("null rejection rate at 0.01 = %.3f over 1000 sims, need [0.002, 0.03]", rate));
    report(antisymmetric, "dm_antisymmetry", antisymmetric ? "DM(a,b) = -DM(b,a) and equal p-values in all 1000 sims" : "mismatch found");
}

// ---------------------------------------------------------------------------------------------
// Learner
// ---------------------------------------------------------------------------------------------

void gradient_check() {
    Rng rng(derive_seed(0, "gradcheck"));
    double worst = 0.0;
    int passed = 0;
    for (int config = 0; config < 20; ++config) {
        const std::size_t inputs = 1 + rng.below(8), hidden = 1 + rng.below(10), rows = 1 + rng.below(12);
        MlpNetwork net(inputs, hidden);
        net.initialize(rng);
        for (auto& p : net.parameters()) p += 0.1 * rng.normal();
        std::vector<double> x(rows * inputs), y(rows);
        for (auto& v : x) v = rng.normal();
        for (auto& v : y) v = rng.normal();
        const auto analytic = net.gradient(x, y);
        const std::vector<double> theta(net.parameters().begin(), net.parameters().end());
        const auto numeric = oracle::finite_difference(
            [&](const std::vector<double>& th) {
                MlpNetwork copy = net;
                std::copy(th.begin(), th.end(), copy.parameters().begin());
                return copy.loss(x, y);
            },
            theta, 1e-6);
        double diff = 0.0, na = 0.0, nn = 0.0;
        for (std::size_t i = 0; i < theta.size(); ++i) {
            diff += std::pow(analytic[i] - numeric[i], 2);
            na += analytic[i] * analytic[i];
            nn += numeric[i] * numeric[i];
        }
        const double rel = std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nn), 1e-300});
        worst = std::max(worst, rel);
        passed += rel <= 1e-5;
    }
    report(passed == 20, "mlp_gradient_check", fmt("%d/20 configurations, worst relative error %.3e, limit 1e-5", passed, worst));
}

// ---------------------------------------------------------------------------------------------
// Strategies and CLI
// ---------------------------------------------------------------------------------------------

void action_counts_criterion() {
    const Epoch e;
    DemandStream stream(e, TimeIndex{0}, e.at(2018, 7, 1).hour, {1});
    for (std::int64_t h = 0; h < stream.hours(); ++h) stream.set(TimeIndex{h}, 0, 10 + h % 24);
    StrategyConfig yearly;
    yearly.kind = StrategyKind::periodic_retrain;
    yearly.period = Period::year;
    StrategyConfig quarterly;
    quarterly.kind = StrategyKind::periodic_update;
    quarterly.period = Period::quarter;
    const RunResult y = prequential_run(stream, NaiveLearner{}, yearly);
    const RunResult q = prequential_run(stream, NaiveLearner{}, quarterly);
    const bool ok = y.forecast_start == e.at(2011, 1, 1) && y.final_state.retrains == 7 && y.final_state.updates == 0 &&
                    q.final_state.updates == 30 && q.final_state.retrains == 0;
    report(ok, "action_counts", fmt("forecast %s..%s: yearly retrain (%llu/%llu), quarterly update (%llu/%llu); expected (0/7) and (30/0)",
                                    e.format(y.forecast_start).c_str(), e.format(y.forecast_end).c_str(),
                                    static_cast<unsigned long long>(y.final_state.updates), static_cast<unsigned long long>(y.final_state.retrains),
                                    static_cast<unsigned long long>(q.final_state.updates), static_cast<unsigned long long>(q.final_state.retrains)));
}

void determinism_criterion() {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "driftcast_acceptance_determinism";
    fs::remove_all(dir);
    fs::create_directories(dir);
    {
        std::ofstream cfg(dir / "config.json");
        cfg << R"({
  "seed": 2024,
  "stream": {"synthetic": {"n_zones": 3, "years": 3, "base_level": [150, 300, 600],
                           "drift_kind": "incremental_ramp", "drift_start_years": 2.0, "drift_magnitude": -0.4}},
  "learner": {"kind": "mlp", "hidden_units": 16, "dropout_rate": 0.5, "learning_rate": 0.01,
              "epochs_train": 3, "epochs_update": 2},
  "strategies": [
    {"kind": "static"},
    {"kind": "periodic_update", "period": "quarter"},
    {"kind": "triggered_retrain", "detector": "stepd"},
    {"kind": "switching", "detector": "adwin"}
  ]
})";
    }
    std::ostringstream out, err;
    const int a = cmd_run((dir / "config.json").string(), {std::nullopt, (dir / "a").string(), std::nullopt}, false, true, out, err);
    const int b = cmd_run((dir / "config.json").string(), {std::nullopt, (dir / "b").string(), std::nullopt}, false, true, out, err);
    auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    const std::string ra = slurp(dir / "a" / "report.json"), rb = slurp(dir / "b" / "report.json");
    const bool ok = a == 0 && b == 0 && !ra.empty() && ra == rb;
    report(ok, "end_to_end_determinism", fmt("two compare runs: exit %d/%d, report.json %zu bytes, identical=%s", a, b, ra.size(), ra == rb ? "yes" : "no") +
                                             (err.str().empty() ? "" : " stderr: " + err.str()));
    fs::remove_all(dir);
}

}  // namespace

int main() {
    log::set_sink([](log::Level level, const std::string& msg) {
        if (level >= log::Level::error) std::fprintf(stderr, "%s\n", msg.c_str());
    });
    metric_fixtures();
    dm_calibration();
    hellinger_criteria();
    mk_criteria();
    gradient_check();
    action_counts_criterion();
    detector_delay(DetectorKind::adwin);
    detector_delay(DetectorKind::stepd);
    adwin_oracle();
    determinism_criterion();
    strategy_criteria();
    std::printf("%s: %d criteria failed\n", failures ? "FAIL" : "PASS", failures);
    return failures ? 1 : 0;
}
