#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "driftcast/config.hpp"
#include "driftcast/ingest.hpp"
#include "driftcast/prequential.hpp"
#include "driftcast/report.hpp"
#include "driftcast/synthetic.hpp"

namespace driftcast {

inline constexpr const char* kOutputDirEnv = "DRIFTCAST_OUTPUT_DIR";

namespace detail {

/// Writes through a temporary file and renames, so a failed write never leaves a partial artifact.
inline bool write_file(const std::filesystem::path& path, const std::function<void(std::ostream&)>& body, std::ostream& err) {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) {
            err << "error: cannot write " << path.string() << '\n';
            return false;
        }
        body(out);
        out.flush();
        if (!out) {
            err << "error: write failed for " << path.string() << '\n';
            return false;
        }
    }
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        err << "error: cannot move " << tmp.string() << " into place: " << ec.message() << '\n';
        return false;
    }
    return true;
}

inline std::optional<std::string> read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace detail

struct IngestOptions {
    std::vector<std::string> inputs;
    CsvSchema schema;
    std::optional<std::size_t> top_k;
    std::string output;
    std::string epoch = "2009-01-01";
    std::size_t max_reported_rejections = 20;
};

inline int cmd_ingest(const IngestOptions& o, std::ostream& out, std::ostream& err) {
    const auto epoch_at = Epoch{}.parse(o.epoch);
    if (!epoch_at) {
        err << "error: bad --epoch '" << o.epoch << "'\n";
        return 2;
    }
    const Epoch epoch{Epoch{}.day() + std::chrono::days{epoch_at->hour / kHoursPerDay}};
    TripAggregator agg;
    std::size_t reported = 0;
    for (const auto& input : o.inputs) {
        std::ifstream in(input, std::ios::binary);
        if (!in) {
            err << "error: cannot read " << input << '\n';
            return 1;
        }
        try {
            read_trip_csv(in, o.schema, agg, epoch, [&](const RejectedRow& row) {
                if (reported++ < o.max_reported_rejections) {
                    err << input << ":" << row.line << ": rejected (" << reason_code(row.reason) << ")\n";
                }
            });
        } catch (const std::exception& e) {
            err << "error: " << input << ": " << e.what() << '\n';
            return 1;
        }
    }
    const IngestStats& stats = agg.stats();
    out << "accepted " << stats.accepted << '\n';
    out << "rejected " << stats.rejected_total() << '\n';
    for (std::size_t i = 0; i < kRejectReasonCount; ++i) {
        if (stats.rejected[i]) out << "  " << reason_code(static_cast<RejectReason>(i)) << ' ' << stats.rejected[i] << '\n';
    }
    if (stats.accepted == 0) {
        err << "error: no rows accepted\n";
        return 1;
    }
    const DemandStream stream = agg.finish(o.top_k, epoch);
    if (!detail::write_file(o.output, [&](std::ostream& f) { write_stream_csv(f, stream); }, err)) return 1;
    out << "wrote " << o.output << " (" << stream.zone_count() << " zones, " << stream.hours() << " hours)\n";
    return 0;
}

inline std::string truth_path(const std::string& output) { return output + ".truth.json"; }

/// Reads a synthetic spec JSON, writes the stream CSV and a ground-truth sidecar.
inline int cmd_generate(const std::string& spec_path, const std::string& output, std::optional<std::uint64_t> seed,
                        std::ostream& out, std::ostream& err) {
    const auto text = detail::read_text(spec_path);
    if (!text) {
        err << "error: cannot read " << spec_path << '\n';
        return 1;
    }
    SyntheticSpec spec;
    try {
        spec = nlohmann::json::parse(*text).get<SyntheticSpec>();
    } catch (const std::exception& e) {
        err << "error: " << spec_path << ": " << e.what() << '\n';
        return 2;
    }
    if (seed) spec.seed = *seed;
    if (const auto errors = spec.validate(); !errors.empty()) {
        for (const auto& e : errors) err << "error: /" << e << '\n';
        return 2;
    }
    const DemandStream stream = generate_synthetic(spec);
    bool ok = detail::write_file(output, [&](std::ostream& f) { write_stream_csv(f, stream); }, err);
    ok = ok && detail::write_file(truth_path(output), [&](std::ostream& f) { f << drift_ground_truth(spec).dump(2) << '\n'; }, err);
    if (!ok) return 1;
    out << "wrote " << output << " (" << stream.zone_count() << " zones, " << stream.hours() << " hours) and "
        << truth_path(output) << '\n';
    return 0;
}

/// Command-line values that take precedence over the config file.
struct RunOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> output_dir;
    std::optional<unsigned> jobs;
};

/// Only overrides that change results; output location and job count do not.
inline nlohmann::ordered_json overrides_json(const RunOverrides& o) {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    if (o.seed) j["seed"] = *o.seed;
    return j;
}

inline std::string resolve_output_dir(const RunConfig& c, const RunOverrides& o) {
    if (o.output_dir) return *o.output_dir;
    if (!c.output_dir.empty()) return c.output_dir;
    if (const char* env = std::getenv(kOutputDirEnv); env && *env) return env;
    return "driftcast-out";
}

inline DemandStream load_stream(const RunConfig& c) {
    if (c.stream.synthetic) return generate_synthetic(*c.seeded_synthetic());
    std::ifstream in(*c.stream.path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read stream " + *c.stream.path);
    const auto t = Epoch{}.parse(c.stream.epoch);
    return read_stream_csv(in, Epoch{Epoch{}.day() + std::chrono::days{t->hour / kHoursPerDay}});
}

inline void print_plan(const RunConfig& c, const std::string& output_dir, std::ostream& out) {
    out << "seed " << c.seed << " (learner " << c.learner_seed() << ", synthetic " << c.synthetic_seed() << ")\n";
    if (c.stream.synthetic) {
        const auto& s = *c.stream.synthetic;
        out << "stream synthetic: " << s.n_zones << " zones, " << s.years << " years, drift "
            << nlohmann::json(s.drift_kind).get<std::string>() << '\n';
    } else {
        out << "stream " << *c.stream.path << '\n';
    }
    out << "learner " << nlohmann::json(c.learner.kind).get<std::string>() << '\n';
    out << "metric_mode " << to_string(c.metric_mode) << ", detector_mode " << (c.per_zone_detectors ? "per_zone" : "pooled")
        << ", jobs " << c.jobs << '\n';
    out << "strategies " << c.strategies.size() << ":\n";
    for (const auto& s : c.strategies) {
        out << "  " << s.label() << "  kind=" << to_string(s.kind);
        if (is_periodic(s.kind)) out << " period=" << to_string(s.period);
        if (s.detector) out << " detector=" << to_string(*s.detector);
        out << " lambda=" << s.lambda_years << "y";
        if (s.kind == StrategyKind::switching) out << " tau=" << s.tau_years << "y";
        out << '\n';
    }
    out << "output " << output_dir << '\n';
}

/// Runs the configured strategies and writes report.json, summary.csv, rolling.csv, dm.csv and
/// per-strategy action and verdict logs. Returns 0 only when every artifact was written.
inline int execute_run(RunConfig config, const RunOverrides& overrides, bool dry_run, bool require_pair, std::ostream& out,
                       std::ostream& err) {
    if (overrides.seed) config.seed = *overrides.seed;
    if (overrides.jobs) config.jobs = *overrides.jobs;
    if (require_pair && config.strategies.size() < 2) {
        err << "error: /strategies: compare needs at least two strategies\n";
        return 2;
    }
    const std::string output_dir = resolve_output_dir(config, overrides);
    if (dry_run) {
        print_plan(config, output_dir, out);
        return 0;
    }

    EvaluationReport report;
    Epoch epoch;
    try {
        const DemandStream stream = load_stream(config);
        epoch = stream.epoch();
        const auto prototype = config.seeded_learner().make();
        RunOptions run;
        run.per_zone_detectors = config.per_zone_detectors;
        if (config.forecast_start) run.forecast_start = epoch.parse(*config.forecast_start);
        if (config.forecast_end) run.forecast_end = epoch.parse(*config.forecast_end);
        if (config.strategies.size() >= 2) {
            report = compare_strategies(stream, *prototype, config.strategies, config.detectors, {run, config.metric_mode, config.jobs});
        } else {
            std::vector<RunResult> runs;
            runs.push_back(prequential_run(stream, *prototype, config.strategies.front(), config.detectors, run));
            report = assemble_report(std::move(runs), config.metric_mode, epoch);
        }
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }

    nlohmann::ordered_json provenance;
    provenance["seed"] = config.seed;
    provenance["sub_seeds"] = {{"learner", config.learner_seed()}, {"synthetic", config.synthetic_seed()}};
    provenance["config"] = config.source;
    provenance["overrides"] = overrides_json(overrides);
    const nlohmann::ordered_json doc = report_to_json(report, epoch, provenance);

    namespace fs = std::filesystem;
    const fs::path dir(output_dir);
    bool ok = true;
    ok &= detail::write_file(dir / "report.json", [&](std::ostream& f) { f << doc.dump(2) << '\n'; }, err);
    ok &= detail::write_file(dir / "summary.csv", [&](std::ostream& f) { write_summary_csv(f, report); }, err);
    ok &= detail::write_file(dir / "rolling.csv", [&](std::ostream& f) { write_rolling_csv(f, report, epoch); }, err);
    ok &= detail::write_file(dir / "dm.csv", [&](std::ostream& f) { write_dm_csv(f, report); }, err);
    for (const auto& r : report.runs) {
        const std::string stem = file_stem(r.strategy);
        ok &= detail::write_file(dir / ("actions_" + stem + ".csv"), [&](std::ostream& f) { write_action_log(f, r, epoch); }, err);
        ok &= detail::write_file(dir / ("verdicts_" + stem + ".csv"), [&](std::ostream& f) { write_verdict_log(f, r, epoch); }, err);
        if (config.write_predictions) {
            ok &= detail::write_file(dir / ("predictions_" + stem + ".csv"),
                                     [&](std::ostream& f) { write_predictions_csv(f, r, epoch); }, err);
        }
    }
    if (!ok) return 1;

    out << "strategy                          sMAPE        RMSE  actions\n";
    for (const auto& s : report.strategies) {
        char line[160];
        std::snprintf(line, sizeof line, "%-28s %10.4f %11.4f  %s\n", s.name.c_str(), s.smape, s.rmse, action_counts(s).c_str());
        out << line;
    }
    out << "reports in " << dir.string() << '\n';
    return 0;
}

inline int cmd_run(const std::string& config_path, const RunOverrides& overrides, bool dry_run, bool require_pair,
                   std::ostream& out, std::ostream& err) {
    const auto text = detail::read_text(config_path);
    if (!text) {
        err << "error: cannot read " << config_path << '\n';
        return 1;
    }
    RunConfig config;
    try {
        config = parse_run_config(*text);
    } catch (const ConfigError& e) {
        for (const auto& m : e.errors()) err << "error: " << m << '\n';
        return 2;
    }
    return execute_run(std::move(config), overrides, dry_run, require_pair, out, err);
}

}  // namespace driftcast
