#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "foresit/agent/agent_net.hpp"
#include "foresit/agent/trajectory.hpp"
#include "foresit/gridhome/env.hpp"
#include "foresit/imagination/imagination_net.hpp"
#include "foresit/rng.hpp"
#include "foresit/trainer/config.hpp"

namespace foresit::trainer {

/// Chooses the action for the current step; returning a negative value falls
/// back to the policy. Used by scripted-oracle tests.
using ActionOverride = std::function<int(const grid::Episode& episode, std::span<const double> probs)>;

struct RolloutSpec {
  Mode mode = Mode::Foresit;
  agent::AgentDims agent;
  imagination::ImaginationDims imagination;
  grid::EnvConfig env;
  int int_interval = 10;
  double rnd_variance = 0.5;
  double sigma2 = 0.0;  // conditioning noise for this episode
  bool greedy = false;
  /// Record attention and value nodes. Evaluation turns this off: the test-time
  /// policy path never touches the critic.
  bool critic = true;
};

/// One finished episode together with the tape its log lives on.
struct Rollout {
  std::unique_ptr<nd::ParamSet> theta;
  std::unique_ptr<nd::Tape> tape;
  agent::TrajectoryLog log;
  std::vector<double> s0;
  std::vector<double> goal;
  std::vector<double> imagination;                 // I used at step 0
  std::vector<std::vector<double>> imaginations;   // every I computed, in order
  grid::Pose start;
  int target = 0;
  int layout_id = 0;
  int family = 0;
  int path_length = 0;
  double episode_return = 0.0;
  bool success = false;
};

/// True at the steps where INT mode re-imagines (t = 0, k, 2k, ...).
bool reimagine_at(std::size_t t, int interval);

/// Imagination target for ATT mode: the attended state s*_T recorded at the
/// final step.
std::vector<double> att_target(const agent::TrajectoryLog& log);

/// Roll out one episode under `theta` (copied into the result so the tape stays
/// valid) and the imagination weights `w`. Noise and action sampling draw from `rng`.
Rollout run_rollout(const RolloutSpec& spec, nd::ParamSet theta, const nd::ParamSet& w, const grid::RoomLayout& layout,
                    std::uint64_t episode_seed, std::optional<int> target, Rng& rng,
                    const ActionOverride& override_action = {});

/// Index sampled from a probability vector.
int sample_action(std::span<const double> probs, Rng& rng);

}  // namespace foresit::trainer
