#pragma once

#include <span>
#include <vector>

namespace foresit::trainer {

/// R_t = r_t + gamma * R_{t+1}, with R_{T+1} = bootstrap (0 on true termination).
std::vector<double> compute_returns(std::span<const double> rewards, double gamma, double bootstrap = 0.0);

/// One-step TD advantages r_t + gamma * V_{t+1} - V_t, with V_{T+1} = bootstrap.
std::vector<double> td_advantages(std::span<const double> rewards, std::span<const double> values, double gamma,
                                  double bootstrap = 0.0);

}  // namespace foresit::trainer
