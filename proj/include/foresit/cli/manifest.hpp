#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "foresit/trainer/config.hpp"

namespace foresit::cli {

/// Hex SHA-1 of "blob <len>\0<content>", as git hashes file contents.
std::string git_blob_hash(std::string_view content);

/// UTC timestamp, "2024-01-31T12:00:00Z".
std::string utc_timestamp();
/// Compact form used in run directory names, "20240131T120000Z".
std::string utc_stamp_compact();

struct RunManifest {
  trainer::TrainConfig config;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string started;
  std::string finished;
  std::string command;
  std::uint64_t episodes_done = 0;
  bool interrupted = false;
  std::string final_checkpoint;
};

RunManifest make_manifest(const trainer::TrainConfig& cfg, std::string command);
nlohmann::ordered_json to_json(const RunManifest& m);
void write_manifest(const RunManifest& m, const std::filesystem::path& run_dir);

/// runs/<timestamp>-<first 12 hash chars>
std::filesystem::path default_run_dir(const std::filesystem::path& root, const RunManifest& m);

}  // namespace foresit::cli
