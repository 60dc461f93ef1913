#pragma once

#include "pearl/simulator.hpp"

#include <filesystem>
#include <string>

namespace pearl {

/// Parses a JSON trial configuration. Every key is optional and defaults to the
/// TrialConfig default; unknown keys are rejected. Throws ConfigInvalid with the line
/// and column of a syntax error or the dotted path of a bad field.
TrialConfig parse_config(const std::string &text);
TrialConfig load_config(const std::filesystem::path &path);

/// Fully resolved configuration with sorted keys and no whitespace.
std::string canonical_config(const TrialConfig &cfg);
/// Indented form of the resolved configuration, parseable by parse_config.
std::string pretty_config(const TrialConfig &cfg);

/// Lowercase hex SHA-256 of canonical_config.
std::string config_hash(const TrialConfig &cfg);
std::string sha256_hex(const std::string &data);

} // namespace pearl
