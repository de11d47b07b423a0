#pragma once

#include <filesystem>
#include <set>
#include <string>
#include <string_view>

#include "foresit/trainer/config.hpp"

namespace foresit::cli {

/// A config plus the "section.key" names that were given explicitly.
struct LoadedConfig {
  trainer::TrainConfig config;
  std::set<std::string> provided;
};

/// INI-style text: [section] headers, `key = value` lines, `;` or `#` comments.
/// Throws ConfigError naming the field for unknown keys or bad values.
LoadedConfig parse_config_text(std::string_view text);
LoadedConfig load_config_file(const std::filesystem::path& path);

/// Applies "section.key=value". Throws ConfigError on malformed input.
void apply_override(LoadedConfig& cfg, std::string_view assignment);

/// Every field, grouped by section, in parse_config_text's format.
std::string serialize_config(const trainer::TrainConfig& cfg);

/// Fields that change the learning problem and may not be left implicit on
/// the command line.
inline constexpr const char* kRequiredFields[] = {"train.mode", "train.episodes", "train.seed"};
/// Throws ConfigError for the first required field missing from `provided`.
void require_fields(const LoadedConfig& cfg);

}  // namespace foresit::cli
