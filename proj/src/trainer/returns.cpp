#include "foresit/trainer/returns.hpp"

#include <stdexcept>

namespace foresit::trainer {

std::vector<double> compute_returns(std::span<const double> rewards, double gamma, double bootstrap) {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("gamma must lie in (0, 1]");
  std::vector<double> out(rewards.size());
  double next = bootstrap;
  for (std::size_t i = rewards.size(); i-- > 0;) {
    next = rewards[i] + gamma * next;
    out[i] = next;
  }
  return out;
}

std::vector<double> td_advantages(std::span<const double> rewards, std::span<const double> values, double gamma,
                                  double bootstrap) {
  if (rewards.size() != values.size()) throw std::invalid_argument("rewards and values differ in length");
  std::vector<double> out(rewards.size());
  for (std::size_t t = 0; t < rewards.size(); ++t) {
    const double next = t + 1 < values.size() ? values[t + 1] : bootstrap;
    out[t] = rewards[t] + gamma * next - values[t];
  }
  return out;
}

}  // namespace foresit::trainer
