#pragma once

#include "pearl/simulator.hpp"

#include <cstdint>
#include <filesystem>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace pearl {

std::string_view engine_version();

// Every CSV starts with a schema line such as "# schema: pearl.steps/1.0". Readers
// accept any minor version of a known major version.
inline constexpr std::string_view kStepsSchema = "pearl.steps";
inline constexpr std::string_view kDecisionsSchema = "pearl.decisions";
inline constexpr std::string_view kFeedbackSchema = "pearl.feedback";
inline constexpr std::string_view kSchemaVersion = "1.0";

void write_steps_csv(std::ostream &out, const TrialLog &log);
void write_decisions_csv(std::ostream &out, const TrialLog &log);
void write_feedback_csv(std::ostream &out, const TrialLog &log);

/// Rebuilds the analysable part of a log (ids, arms, steps, decisions, feedback,
/// withdrawal) from the three CSVs. Throws SchemaError on a wrong schema line, header
/// or malformed row, and IoError when a file cannot be read.
TrialLog read_trial_csv(std::istream &steps, std::istream &decisions, std::istream &feedback);
TrialLog read_trial_dir(const std::filesystem::path &dir);

struct OutputFile {
    std::string name;
    std::uintmax_t bytes{0};
    std::string sha256;
};

struct RunManifest {
    std::string status{"running"}; // running, complete, failed
    std::uint64_t seed{0};
    std::string config_hash;
    std::string engine_version;
    std::string started_at;
    std::string finished_at;
    int threads{1};
    std::string config; // canonical resolved configuration
    std::vector<OutputFile> outputs;

    std::string to_json() const;
    static RunManifest from_json(const std::string &text);
};

/// Current UTC time as an ISO-8601 string.
std::string utc_timestamp();

/// Size and SHA-256 of a file. Throws IoError when it cannot be read.
OutputFile describe_file(const std::filesystem::path &path);

/// Writes `text` to `path` through a temporary file and rename. Throws IoError.
void write_text_file(const std::filesystem::path &path, const std::string &text);
std::string read_text_file(const std::filesystem::path &path);

} // namespace pearl
