#pragma once

#include <cstddef>
#include <vector>

#include "foresit/ndgrad/tape.hpp"

namespace foresit::agent {

/// Per-episode record. Every per-step list has length T+1; alphas[t] has
/// length t+1. The Var entries live on the episode's tape.
struct TrajectoryLog {
  std::vector<std::vector<double>> states;    // s_0..s_T
  std::vector<std::vector<double>> attended;  // s*_0..s*_T
  std::vector<std::vector<double>> alphas;    // alpha computed at each step
  std::vector<int> actions;
  std::vector<double> rewards;
  std::vector<nd::Var> state_vars;
  std::vector<nd::Var> log_probs;  // log pi(a_t | ...)
  std::vector<nd::Var> entropies;
  std::vector<nd::Var> values;  // V(s*_t)
  bool success = false;

  std::size_t length() const noexcept { return actions.size(); }
  /// Throws std::logic_error naming the first inconsistent list.
  void validate() const;
};

struct Subgoal {
  std::size_t t_star = 0;
  std::vector<double> state;  // detached copy of s_{t*}
};

/// argmax of the final step's attention (earliest index on ties). Rejects
/// unsuccessful episodes.
Subgoal select_subgoal(const TrajectoryLog& log);

/// Index of the largest entry, earliest on ties.
std::size_t argmax_first(const std::vector<double>& values);

}  // namespace foresit::agent
