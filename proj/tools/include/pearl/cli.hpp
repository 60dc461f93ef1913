#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>

namespace pearl::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitIo = 3;

struct SimulateOptions {
    std::optional<std::filesystem::path> config; // defaults when absent
    std::filesystem::path out_dir;
    std::optional<std::uint64_t> seed; // overrides the config seed
    bool quiet{false};
    bool export_model{false}; // also write reward_model.json and feature_importance.csv
    int threads{1};
};

/// Runs a trial and writes steps.csv, decisions.csv, feedback.csv and manifest.json.
int cmd_simulate(const SimulateOptions &opts, std::ostream &err);

/// Reads the three CSVs from `log_dir` and writes table3.csv, table4.csv, table6.csv
/// and results.json to `out_dir`.
int cmd_analyze(const std::filesystem::path &log_dir, const std::filesystem::path &out_dir, std::ostream &err);

/// Reads results.json from `results_dir` and writes daily_means.csv and summary.txt
/// to `out_dir`.
int cmd_report(const std::filesystem::path &results_dir, const std::filesystem::path &out_dir, std::ostream &err);

} // namespace pearl::cli
