#include "foresit/agent/trajectory.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace foresit::agent {

void TrajectoryLog::validate() const {
  const std::size_t n = actions.size();
  auto check = [n](std::size_t size, const char* what) {
    if (size != n) {
      throw std::logic_error(std::string("trajectory list '") + what + "' has " + std::to_string(size) +
                             " entries, expected " + std::to_string(n));
    }
  };
  check(states.size(), "states");
  check(rewards.size(), "rewards");
  if (!alphas.empty()) check(alphas.size(), "alphas");
  check(log_probs.size(), "log_probs");
  check(entropies.size(), "entropies");
  check(values.size(), "values");
  if (!attended.empty()) check(attended.size(), "attended");
  for (std::size_t t = 0; t < alphas.size(); ++t) {
    if (alphas[t].size() != t + 1) throw std::logic_error("alpha at step " + std::to_string(t) + " has wrong length");
    double total = 0.0;
    for (double a : alphas[t]) total += a;
    if (std::abs(total - 1.0) > 1e-6) throw std::logic_error("alpha at step " + std::to_string(t) + " does not sum to 1");
  }
}

std::size_t argmax_first(const std::vector<double>& values) {
  if (values.empty()) throw std::invalid_argument("argmax of empty vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

Subgoal select_subgoal(const TrajectoryLog& log) {
  if (!log.success) throw std::logic_error("select_subgoal: episode was not successful");
  if (log.alphas.empty() || log.states.empty()) throw std::logic_error("select_subgoal: empty trajectory");
  const auto& final_alpha = log.alphas.back();
  if (final_alpha.size() != log.states.size()) {
    throw std::logic_error("select_subgoal: final attention length does not match trajectory");
  }
  const std::size_t t_star = argmax_first(final_alpha);
  return {t_star, log.states[t_star]};
}

}  // namespace foresit::agent
