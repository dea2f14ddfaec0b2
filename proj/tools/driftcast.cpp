#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "driftcast/commands.hpp"

int main(int argc, char** argv) {
    using namespace driftcast;
    CLI::App app{"driftcast: demand forecasting under concept drift"};
    app.set_version_flag("--version", std::string(kArtifactVersion));
    app.require_subcommand(1);

    IngestOptions ingest;
    std::size_t top_k = 0;
    auto* ingest_cmd = app.add_subcommand("ingest", "aggregate trip CSVs into an hourly per-zone stream");
    ingest_cmd->add_option("inputs", ingest.inputs, "trip CSV files")->required()->check(CLI::ExistingFile);
    ingest_cmd->add_option("-o,--output", ingest.output, "stream CSV to write")->required();
    ingest_cmd->add_option("--top-k", top_k, "keep only the k busiest zones (0 keeps all)");
    ingest_cmd->add_option("--pickup-column", ingest.schema.pickup_column, "header of the pickup time column")->capture_default_str();
    ingest_cmd->add_option("--zone-column", ingest.schema.zone_column, "header of the pickup zone column")->capture_default_str();
    ingest_cmd->add_option("--distance-column", ingest.schema.distance_column, "header of the trip distance column")->capture_default_str();
    ingest_cmd->add_option("--epoch", ingest.epoch, "hour 0 of the time index")->capture_default_str();

    std::string spec_path;
    std::string gen_output;
    std::optional<std::uint64_t> gen_seed;
    auto* gen_cmd = app.add_subcommand("generate", "write a seeded synthetic stream and its drift ground truth");
    gen_cmd->add_option("spec", spec_path, "synthetic spec JSON")->required();
    gen_cmd->add_option("-o,--output", gen_output, "stream CSV to write")->required();
    gen_cmd->add_option("--seed", gen_seed, "override the spec seed");

    struct RunArgs {
        std::string config;
        std::optional<std::string> output_dir;
        std::optional<std::uint64_t> seed;
        std::optional<unsigned> jobs;
        bool dry_run = false;
    };
    RunArgs run_args;
    RunArgs compare_args;
    auto add_run_options = [](CLI::App* cmd, RunArgs& a) {
        cmd->add_option("-c,--config", a.config, "run config JSON")->required();
        cmd->add_option("--output-dir", a.output_dir, std::string("report directory (default: config, then $") + kOutputDirEnv + ")");
        cmd->add_option("--seed", a.seed, "override the global seed");
        cmd->add_option("-j,--jobs", a.jobs, "parallel strategy runs")->check(CLI::Range(1u, 1024u));
        cmd->add_flag("--dry-run", a.dry_run, "validate the config and print the run matrix");
    };
    auto* run_cmd = app.add_subcommand("run", "prequential run of the configured strategies");
    add_run_options(run_cmd, run_args);
    auto* compare_cmd = app.add_subcommand("compare", "compare two or more strategies with Diebold-Mariano tests");
    add_run_options(compare_cmd, compare_args);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*ingest_cmd) {
            if (top_k > 0) ingest.top_k = top_k;
            return cmd_ingest(ingest, std::cout, std::cerr);
        }
        if (*gen_cmd) return cmd_generate(spec_path, gen_output, gen_seed, std::cout, std::cerr);
        const bool compare = static_cast<bool>(*compare_cmd);
        const RunArgs& a = compare ? compare_args : run_args;
        return cmd_run(a.config, RunOverrides{a.seed, a.output_dir, a.jobs}, a.dry_run, compare, std::cout, std::cerr);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
