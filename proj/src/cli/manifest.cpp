#include "foresit/cli/manifest.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <stdexcept>

#include <openssl/sha.h>

#include "foresit/cli/config_file.hpp"

namespace foresit::cli {

std::string git_blob_hash(std::string_view content) {
  std::string blob = "blob " + std::to_string(content.size());
  blob.push_back('\0');
  blob.append(content);
  unsigned char digest[SHA_DIGEST_LENGTH];
  SHA1(reinterpret_cast<const unsigned char*>(blob.data()), blob.size(), digest);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned char b : digest) {
    out += kHex[b >> 4];
    out += kHex[b & 15];
  }
  return out;
}

namespace {

std::string format_now(const char* fmt) {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, fmt, &tm);
  return buf;
}

}  // namespace

std::string utc_timestamp() { return format_now("%Y-%m-%dT%H:%M:%SZ"); }
std::string utc_stamp_compact() { return format_now("%Y%m%dT%H%M%SZ"); }

RunManifest make_manifest(const trainer::TrainConfig& cfg, std::string command) {
  RunManifest m;
  m.config = cfg;
  m.config_hash = git_blob_hash(serialize_config(cfg));
  m.seed = cfg.seed;
  m.started = utc_timestamp();
  m.command = std::move(command);
  return m;
}

nlohmann::ordered_json to_json(const RunManifest& m) {
  nlohmann::ordered_json config = nlohmann::ordered_json::object();
  for (const auto& e : trainer::config_entries(m.config)) config[e.section][e.key] = e.value;
  nlohmann::ordered_json j;
  j["command"] = m.command;
  j["config"] = config;
  j["config_hash"] = m.config_hash;
  j["seed"] = m.seed;
  j["started"] = m.started;
  j["finished"] = m.finished.empty() ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(m.finished);
  j["episodes_done"] = m.episodes_done;
  j["interrupted"] = m.interrupted;
  j["layout"] = {{"manifest", "manifest.json"},
                 {"metrics", "metrics.jsonl"},
                 {"checkpoints", "ckpt/"},
                 {"evaluation", "eval/"}};
  j["final_checkpoint"] = m.final_checkpoint;
  return j;
}

void write_manifest(const RunManifest& m, const std::filesystem::path& run_dir) {
  const auto path = run_dir / "manifest.json";
  const auto tmp = run_dir / "manifest.json.tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << to_json(m).dump(2) << '\n';
    if (!out) throw std::runtime_error("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::filesystem::path default_run_dir(const std::filesystem::path& root, const RunManifest& m) {
  return root / (utc_stamp_compact() + "-" + m.config_hash.substr(0, 12));
}

}  // namespace foresit::cli
