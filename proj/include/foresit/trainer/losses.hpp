#pragma once

#include <span>
#include <vector>

#include "foresit/agent/trajectory.hpp"
#include "foresit/ndgrad/tape.hpp"

namespace foresit::trainer {

struct LossTerms {
  nd::Var policy;  // J*_pi
  nd::Var value;   // J*_V
  nd::Var total;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;  // sum of H_t
};

/// sum_t [ -log pi(a_t) * advantages[t] - entropy_beta * H_t ], advantages as constants.
nd::Var policy_loss(nd::Tape& tape, const agent::TrajectoryLog& log, std::span<const double> advantages,
                    double entropy_beta);
/// sum_t 1/2 (V(s*_t) - R_t)^2
nd::Var value_loss(nd::Tape& tape, const agent::TrajectoryLog& log, std::span<const double> returns);
/// One-step TD advantages read off the logged values.
std::vector<double> logged_advantages(const nd::Tape& tape, const agent::TrajectoryLog& log, double gamma,
                                      double bootstrap = 0.0);

/// Episode losses on the log's tape:
///   J*_pi = sum_t [ -log pi(a_t) * A_t - entropy_beta * H_t ]
///   J*_V  = sum_t 1/2 (V(s*_t) - R_t)^2
/// A_t = r_t + gamma V(s*_{t+1}) - V(s*_t) is read off the log as a constant,
/// so the policy term sends no gradient into the critic.
LossTerms actor_critic_losses(nd::Tape& tape, const agent::TrajectoryLog& log, std::span<const double> returns,
                              double gamma, double entropy_beta, double bootstrap = 0.0);

}  // namespace foresit::trainer
