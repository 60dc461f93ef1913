#include "pearl/cli.hpp"
#include "pearl/io.hpp"
#include "pearl/parallel.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char **argv) {
    namespace cli = pearl::cli;
    CLI::App app{"Adaptive physical-activity nudging engine and trial simulator"};
    app.set_version_flag("--version", std::string(pearl::engine_version()));
    app.require_subcommand(1);

    cli::SimulateOptions sim;
    std::string config, out;
    std::uint64_t seed = 0;
    auto *simulate = app.add_subcommand("simulate", "Run a synthetic trial and write its logs");
    simulate->add_option("--config", config, "JSON trial configuration (defaults when omitted)")->check(CLI::ExistingFile);
    simulate->add_option("--out", out, "Output directory")->required();
    auto *seed_opt = simulate->add_option("--seed", seed, "Seed; overrides the config");
    simulate->add_flag("--quiet", sim.quiet, "Suppress progress output");
    simulate->add_flag("--export-model", sim.export_model, "Also write the final reward model and feature importance");

    std::string log_dir, analyze_out;
    bool analyze_quiet = false;
    auto *analyze = app.add_subcommand("analyze", "Compute the period summary, DiD and GEE tables from trial logs");
    analyze->add_option("logs", log_dir, "Directory with steps.csv, decisions.csv and feedback.csv")->required();
    analyze->add_option("--out", analyze_out, "Output directory (defaults to the log directory)");
    analyze->add_flag("--quiet", analyze_quiet, "Suppress progress output");

    std::string results_dir, report_out;
    bool report_quiet = false;
    auto *report = app.add_subcommand("report", "Emit plot-ready CSVs and a text summary from results.json");
    report->add_option("results", results_dir, "Directory containing results.json")->required();
    report->add_option("--out", report_out, "Output directory (defaults to the results directory)");
    report->add_flag("--quiet", report_quiet, "Suppress progress output");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : cli::kExitConfig;
    }

    if (*simulate) {
        if (!config.empty()) sim.config = config;
        if (*seed_opt) sim.seed = seed;
        sim.out_dir = out;
        sim.threads = pearl::default_thread_count();
        return cli::cmd_simulate(sim, std::cerr);
    }
    if (*analyze) {
        const int rc = cli::cmd_analyze(log_dir, analyze_out.empty() ? log_dir : analyze_out, std::cerr);
        if (rc == 0 && !analyze_quiet) std::cerr << "wrote table3.csv, table4.csv, table6.csv, results.json\n";
        return rc;
    }
    const int rc = cli::cmd_report(results_dir, report_out.empty() ? results_dir : report_out, std::cerr);
    if (rc == 0 && !report_quiet) std::cerr << "wrote daily_means.csv, summary.txt\n";
    return rc;
}
