#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "foresit/agent/agent_net.hpp"
#include "foresit/gridhome/layout.hpp"
#include "foresit/imagination/imagination_net.hpp"
#include "foresit/ndgrad/params.hpp"
#include "foresit/trainer/config.hpp"
#include "foresit/trainer/worker.hpp"

namespace foresit::eval {

/// Everything needed to run the frozen policy.
struct PolicySnapshot {
  trainer::Mode mode = trainer::Mode::Foresit;
  agent::AgentDims agent;
  imagination::ImaginationDims imagination;
  nd::ParamSet agent_params;
  nd::ParamSet imagination_params;
  grid::EnvConfig env;
  int int_interval = 10;
  double rnd_variance = 0.5;
};

struct EvalOptions {
  std::size_t seeds_per_pair = 5;  // episodes per (layout, target) pair
  bool greedy = false;
  std::uint64_t seed = 0;
  /// Define the >5 split on the agent's path length instead of the oracle's.
  bool split_on_agent_path = false;
  /// Replaces the policy's choice when set (scripted baselines and tests).
  trainer::ActionOverride action_override;
};

struct EpisodeRow {
  int layout_id = 0;
  int family = 0;
  int target = 0;
  std::size_t seed_index = 0;
  bool success = false;
  int length = 0;         // L: agent path length (Stop excluded)
  int oracle_length = 0;  // L^g
};

struct MetricSet {
  std::size_t episodes = 0;
  double sr = 0.0;
  double spl = 0.0;
  std::size_t long_episodes = 0;  // episodes in the >5 split
  double sr_long = 0.0;
  double spl_long = 0.0;
};

struct EvalReport {
  MetricSet overall;
  std::vector<std::pair<std::string, MetricSet>> families;  // family name -> metrics, families with episodes only
  std::vector<EpisodeRow> rows;
  EvalOptions options;
};

/// Aggregates rows into SR / SPL overall and over the >5 split.
MetricSet aggregate(const std::vector<EpisodeRow>& rows, bool split_on_agent_path);

/// Run every (layout, target present, seed index) episode with noise off and
/// the critic unused. Throws std::invalid_argument when `layouts` is empty.
EvalReport evaluate(const PolicySnapshot& policy, const std::vector<grid::RoomLayout>& layouts,
                    const EvalOptions& options);

nlohmann::ordered_json to_json(const EvalReport& report);
/// Human-readable table, metrics shown as percentages.
std::string format_table(const EvalReport& report);
/// Per-episode rows: layout_id,family,target,success,L,Lg.
void write_csv(const EvalReport& report, const std::filesystem::path& path);

/// Rolls out episodes like `evaluate` and writes one JSON line per step with
/// the latent state, the imagination in use and (on success) the selected
/// sub-goal. Requires the attention parameters to be present.
std::size_t export_states(const PolicySnapshot& policy, const std::vector<grid::RoomLayout>& layouts,
                          const EvalOptions& options, const std::filesystem::path& path);

}  // namespace foresit::eval
