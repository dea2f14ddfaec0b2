#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "driftcast/commands.hpp"

using namespace driftcast;
namespace fs = std::filesystem;

namespace {

class TempDir {
public:
    TempDir() {
        path_ = fs::temp_directory_path() / ("driftcast_test_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
                                             "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    const fs::path& path() const { return path_; }
    fs::path operator/(const std::string& name) const { return path_ / name; }

private:
    fs::path path_;
};

void write(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

std::string read(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

const char* kTinyConfig = R"({
  "seed": 3,
  "stream": {"synthetic": {"n_zones": 2, "years": 2.3, "base_level": [50, 80],
                           "drift_kind": "incremental_ramp", "drift_start_years": 2.0, "drift_magnitude": -0.4}},
  "learner": {"kind": "seasonal_naive"},
  "strategies": [
    {"kind": "static"},
    {"name": "quarterly", "kind": "periodic_retrain", "period": "quarter"},
    {"kind": "switching", "detector": "hdddm"}
  ]
})";

std::vector<std::string> config_errors(const std::string& text) {
    try {
        parse_run_config(text);
    } catch (const ConfigError& e) {
        return e.errors();
    }
    return {};
}

}  // namespace

TEST(Config, ParsesAFullDocument) {
    const RunConfig c = parse_run_config(std::string(kTinyConfig));
    EXPECT_EQ(c.seed, 3u);
    ASSERT_TRUE(c.stream.synthetic);
    EXPECT_EQ(c.stream.synthetic->n_zones, 2);
    EXPECT_EQ(c.learner.kind, LearnerKind::seasonal_naive);
    ASSERT_EQ(c.strategies.size(), 3u);
    EXPECT_EQ(c.strategies[1].label(), "quarterly");
    EXPECT_EQ(c.strategies[1].period, Period::quarter);
    EXPECT_EQ(c.strategies[2].label(), "switching_hdddm");
    EXPECT_EQ(c.seeded_synthetic()->seed, derive_seed(3, "synthetic"));
    EXPECT_EQ(c.seeded_learner().mlp.seed, derive_seed(3, "learner"));
    EXPECT_EQ(c.source.dump(), nlohmann::ordered_json::parse(kTinyConfig).dump());
}

TEST(Config, MissingDetectorNamesTheStrategy) {
    const auto errors = config_errors(R"({"seed": 1, "stream": {"path": "x.csv"},
        "strategies": [{"kind": "static"}, {"name": "drift-retrain", "kind": "triggered_retrain"}]})");
    ASSERT_EQ(errors.size(), 1u);
    EXPECT_EQ(errors[0], "/strategies/1/detector: required for triggered_retrain strategy 'drift-retrain'");
}

TEST(Config, ErrorsCarryJsonPointers) {
    const auto errors = config_errors(R"({"seed": -4, "stream": {"path": "x.csv", "synthetic": {}},
        "learner": {"hidden_units": 0, "bogus": 1},
        "strategies": [{"kind": "periodic_update"}, {"kind": "sometimes"}],
        "detectors": {"adwin": {"delta": 2}},
        "metric_mode": "median"})");
    const std::vector<std::string> expected_paths{"/seed", "/stream", "/learner/bogus", "/learner/hidden_units",
                                                  "/detectors/adwin/delta", "/strategies/0/period",
                                                  "/strategies/1/kind", "/metric_mode"};
    ASSERT_EQ(errors.size(), expected_paths.size());
    for (const auto& path : expected_paths) {
        const bool found = std::any_of(errors.begin(), errors.end(), [&](const std::string& e) { return e.rfind(path + ":", 0) == 0; });
        EXPECT_TRUE(found) << path;
    }
}

TEST(Config, RejectsNestedSeedsAndBadJson) {
    auto errors = config_errors(R"({"seed": 1, "stream": {"synthetic": {"seed": 4}}, "strategies": [{"kind": "static"}],
                                   "learner": {"seed": 2}})");
    ASSERT_EQ(errors.size(), 2u);
    errors = config_errors("{not json");
    ASSERT_EQ(errors.size(), 1u);
    EXPECT_EQ(errors[0].rfind("/:", 0), 0u);
}

TEST(Cli, DryRunPrintsThePlanWithoutRunning) {
    TempDir dir;
    write(dir / "c.json", kTinyConfig);
    std::ostringstream out, err;
    EXPECT_EQ(cmd_run((dir / "c.json").string(), {std::nullopt, (dir / "out").string(), std::nullopt}, true, true, out, err), 0);
    EXPECT_NE(out.str().find("strategies 3"), std::string::npos);
    EXPECT_NE(out.str().find("quarterly  kind=periodic_retrain period=quarter"), std::string::npos);
    EXPECT_FALSE(fs::exists(dir / "out"));
}

TEST(Cli, InvalidConfigExitsNonZero) {
    TempDir dir;
    write(dir / "c.json", R"({"seed": 1, "stream": {"path": "x.csv"}, "strategies": [{"name": "t", "kind": "triggered_update"}]})");
    std::ostringstream out, err;
    EXPECT_EQ(cmd_run((dir / "c.json").string(), {}, true, false, out, err), 2);
    EXPECT_NE(err.str().find("/strategies/0/detector: required for triggered_update strategy 't'"), std::string::npos);
}

TEST(Cli, CompareWritesAllArtifactsDeterministically) {
    TempDir dir;
    write(dir / "c.json", kTinyConfig);
    std::ostringstream out, err;
    ASSERT_EQ(cmd_run((dir / "c.json").string(), {std::nullopt, (dir / "a").string(), std::nullopt}, false, true, out, err), 0)
        << err.str();
    ASSERT_EQ(cmd_run((dir / "c.json").string(), {std::nullopt, (dir / "b").string(), 2u}, false, true, out, err), 0);
    for (const char* f : {"report.json", "summary.csv", "rolling.csv", "dm.csv", "actions_quarterly.csv", "verdicts_static.csv",
                          "actions_switching_hdddm.csv"}) {
        ASSERT_TRUE(fs::exists(dir / "a" / f)) << f;
        EXPECT_EQ(read(dir / "a" / f), read(dir / "b" / f)) << f;
    }
    const auto report = nlohmann::json::parse(read(dir / "a" / "report.json"));
    EXPECT_EQ(report["artifact"], "driftcast");
    EXPECT_EQ(report["version"], kArtifactVersion);
    EXPECT_EQ(report["seed"], 3);
    EXPECT_EQ(report["config"], nlohmann::json::parse(kTinyConfig));
    EXPECT_EQ(report["strategies"].size(), 3u);
    EXPECT_EQ(report["strategies"][1]["retrains"], 1);  // 2011-04-01
    EXPECT_EQ(report["diebold_mariano"].size(), 3u);
}

TEST(Cli, SeedOverrideChangesTheStreamAndIsRecorded) {
    TempDir dir;
    write(dir / "c.json", kTinyConfig);
    std::ostringstream out, err;
    ASSERT_EQ(cmd_run((dir / "c.json").string(), {std::nullopt, (dir / "a").string(), std::nullopt}, false, true, out, err), 0);
    ASSERT_EQ(cmd_run((dir / "c.json").string(), {9u, (dir / "b").string(), std::nullopt}, false, true, out, err), 0);
    const auto a = nlohmann::json::parse(read(dir / "a" / "report.json"));
    const auto b = nlohmann::json::parse(read(dir / "b" / "report.json"));
    EXPECT_EQ(b["seed"], 9);
    EXPECT_EQ(b["overrides"]["seed"], 9);
    EXPECT_NE(a["strategies"][0]["rmse"], b["strategies"][0]["rmse"]);
}

TEST(Cli, RunAcceptsASingleStrategyCompareDoesNot) {
    TempDir dir;
    write(dir / "c.json", R"({"seed": 1, "stream": {"synthetic": {"n_zones": 1, "years": 2.1, "base_level": [30]}},
                             "learner": {"kind": "naive"}, "strategies": [{"kind": "static"}]})");
    std::ostringstream out, err;
    EXPECT_EQ(cmd_run((dir / "c.json").string(), {std::nullopt, (dir / "o").string(), std::nullopt}, false, true, out, err), 2);
    EXPECT_EQ(cmd_run((dir / "c.json").string(), {std::nullopt, (dir / "o").string(), std::nullopt}, false, false, out, err), 0);
    EXPECT_TRUE(fs::exists(dir / "o" / "report.json"));
}

TEST(Cli, UnwritableOutputFails) {
    TempDir dir;
    write(dir / "c.json", kTinyConfig);
    write(dir / "blocker", "file, not a directory");
    std::ostringstream out, err;
    EXPECT_EQ(cmd_run((dir / "c.json").string(), {std::nullopt, (dir / "blocker" / "sub").string(), std::nullopt}, false, true, out,
                      err),
              1);
}

TEST(Cli, OutputDirFallsBackToEnvironment) {
    RunConfig c;
    ::setenv(kOutputDirEnv, "/tmp/from-env", 1);
    EXPECT_EQ(resolve_output_dir(c, {}), "/tmp/from-env");
    c.output_dir = "from-config";
    EXPECT_EQ(resolve_output_dir(c, {}), "from-config");
    EXPECT_EQ(resolve_output_dir(c, {std::nullopt, std::string("from-flag"), std::nullopt}), "from-flag");
    ::unsetenv(kOutputDirEnv);
}

TEST(Cli, GenerateIsDeterministicAndWritesGroundTruth) {
    TempDir dir;
    write(dir / "spec.json", R"({"seed": 5, "n_zones": 4, "years": 3, "base_level": [10, 20, 30, 40],
                                "drift_kind": "step", "drift_start_years": 1.5, "drift_magnitude": -0.5})");
    std::ostringstream out, err;
    ASSERT_EQ(cmd_generate((dir / "spec.json").string(), (dir / "a.csv").string(), std::nullopt, out, err), 0) << err.str();
    ASSERT_EQ(cmd_generate((dir / "spec.json").string(), (dir / "b.csv").string(), std::nullopt, out, err), 0);
    EXPECT_EQ(read(dir / "a.csv"), read(dir / "b.csv"));
    std::istringstream lines(read(dir / "a.csv"));
    std::string line;
    std::size_t rows = 0;
    while (std::getline(lines, line)) ++rows;
    EXPECT_EQ(rows, 1u + 3u * 8760u * 4u);
    const auto truth = nlohmann::json::parse(read(dir / "a.csv.truth.json"));
    EXPECT_EQ(truth["drift_kind"], "step");
    EXPECT_EQ(truth["drift_magnitude"], -0.5);
    EXPECT_EQ(truth["seed"], 5);
}

TEST(Cli, IngestCountsAndReportsReasonCodes) {
    TempDir dir;
    std::ostringstream csv;
    csv << "pickup_datetime,zone_id,trip_distance\n";
    for (int i = 0; i < 100; ++i) {
        csv << "2009-01-0" << 1 + i % 3 << " " << (i % 24 < 10 ? "0" : "") << i % 24 << ":15:00," << 1 + i % 25 << ",1.0\n";
    }
    csv << "2009-01-01 00:00:00,3,-2\n";
    csv << "oops\n";
    write(dir / "trips.csv", csv.str());
    IngestOptions o;
    o.inputs = {(dir / "trips.csv").string()};
    o.output = (dir / "stream.csv").string();
    o.top_k = 20;
    std::ostringstream out, err;
    ASSERT_EQ(cmd_ingest(o, out, err), 0) << err.str();
    EXPECT_NE(out.str().find("accepted 100"), std::string::npos);
    EXPECT_NE(out.str().find("negative_distance 1"), std::string::npos);
    EXPECT_NE(out.str().find("malformed_row 1"), std::string::npos);
    EXPECT_NE(err.str().find("rejected (negative_distance)"), std::string::npos);
    std::ifstream in(dir / "stream.csv");
    const DemandStream s = read_stream_csv(in);
    EXPECT_EQ(s.zone_count(), 20u);

    IngestOptions all = o;
    all.top_k.reset();
    all.output = (dir / "all.csv").string();
    ASSERT_EQ(cmd_ingest(all, out, err), 0);
    std::ifstream in_all(dir / "all.csv");
    const DemandStream full = read_stream_csv(in_all);
    std::int64_t total = 0;
    for (TimeIndex t = full.begin_time(); t < full.end_time(); ++t) total += full.total_at(t);
    EXPECT_EQ(total, 100);
}

TEST(Cli, IngestFailsWithoutAcceptedRows) {
    TempDir dir;
    write(dir / "trips.csv", "pickup_datetime,zone_id,trip_distance\n2009-01-01 00:00:00,3,-2\n");
    IngestOptions o;
    o.inputs = {(dir / "trips.csv").string()};
    o.output = (dir / "stream.csv").string();
    std::ostringstream out, err;
    EXPECT_EQ(cmd_ingest(o, out, err), 1);
    EXPECT_FALSE(fs::exists(dir / "stream.csv"));
    o.inputs = {(dir / "missing.csv").string()};
    EXPECT_EQ(cmd_ingest(o, out, err), 1);
}

TEST(Config, ShippedExampleParses) {
    const auto text = detail::read_text(std::string(DRIFTCAST_DOCS_DIR) + "/example_config.json");
    ASSERT_TRUE(text);
    const RunConfig c = parse_run_config(*text);
    EXPECT_EQ(c.strategies.size(), 6u);
    EXPECT_EQ(c.strategies.back().label(), "switching_mk");
}

TEST(Cli, SwitchingBeatsStaticOnTheDriftFixture) {
    TempDir dir;
    std::ostringstream out, err;
    ASSERT_EQ(cmd_run(std::string(DRIFTCAST_TEST_DATA_DIR) + "/smoke_config.json", {std::nullopt, dir.path().string(), std::nullopt}, false,
                      true, out, err),
              0)
        << err.str();
    const auto report = nlohmann::json::parse(read(dir.path() / "report.json"));
    double static_smape = -1.0, switching_smape = -1.0;
    for (const auto& row : report["strategies"]) {
        if (row["kind"] == "static") static_smape = row["smape"].get<double>();
        if (row["kind"] == "switching") switching_smape = row["smape"].get<double>();
    }
    ASSERT_GT(static_smape, 0.0);
    ASSERT_GT(switching_smape, 0.0);
    EXPECT_LT(switching_smape, static_smape);
}
