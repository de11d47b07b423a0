#include "foresit/trainer/losses.hpp"

#include <stdexcept>
#include <string>
#include <vector>

#include "foresit/trainer/returns.hpp"

namespace foresit::trainer {

namespace {

void check_lengths(const agent::TrajectoryLog& log, std::size_t per_step, const char* what) {
  const std::size_t n = log.length();
  if (n == 0) throw std::invalid_argument("episode loss: empty trajectory");
  auto bad = [&](std::size_t size, const char* list) {
    if (size != n) {
      throw std::invalid_argument(std::string("episode loss: ") + list + " has " + std::to_string(size) +
                                  " entries, trajectory has " + std::to_string(n) + " actions");
    }
  };
  bad(log.rewards.size(), "rewards");
  bad(log.log_probs.size(), "log_probs");
  bad(log.entropies.size(), "entropies");
  bad(log.values.size(), "values");
  bad(per_step, what);
}

}  // namespace

std::vector<double> logged_advantages(const nd::Tape& tape, const agent::TrajectoryLog& log, double gamma,
                                      double bootstrap) {
  std::vector<double> values(log.values.size());
  for (std::size_t t = 0; t < values.size(); ++t) values[t] = tape.scalar(log.values[t]);
  return td_advantages(log.rewards, values, gamma, bootstrap);
}

nd::Var policy_loss(nd::Tape& tape, const agent::TrajectoryLog& log, std::span<const double> advantages,
                    double entropy_beta) {
  check_lengths(log, advantages.size(), "advantages");
  const std::size_t n = log.length();
  std::vector<double> coeff(n);
  for (std::size_t t = 0; t < n; ++t) coeff[t] = -advantages[t];
  const std::vector<double> neg_beta(n, -entropy_beta);
  const nd::Var log_probs = tape.concat(log.log_probs);
  const nd::Var entropies = tape.concat(log.entropies);
  return tape.add(tape.dot(log_probs, tape.constant(coeff)), tape.dot(entropies, tape.constant(neg_beta)));
}

nd::Var value_loss(nd::Tape& tape, const agent::TrajectoryLog& log, std::span<const double> returns) {
  check_lengths(log, returns.size(), "returns");
  const std::vector<double> half(log.length(), 0.5);
  const nd::Var err = tape.sub(tape.concat(log.values), tape.constant(returns));
  return tape.dot(tape.mul(err, err), tape.constant(half));
}

LossTerms actor_critic_losses(nd::Tape& tape, const agent::TrajectoryLog& log, std::span<const double> returns,
                              double gamma, double entropy_beta, double bootstrap) {
  check_lengths(log, returns.size(), "returns");
  const auto adv = logged_advantages(tape, log, gamma, bootstrap);
  LossTerms out;
  out.policy = policy_loss(tape, log, adv, entropy_beta);
  out.value = value_loss(tape, log, returns);
  out.total = tape.add(out.policy, out.value);
  out.policy_loss = tape.scalar(out.policy);
  out.value_loss = tape.scalar(out.value);
  for (nd::Var h : log.entropies) out.entropy += tape.scalar(h);
  return out;
}

}  // namespace foresit::trainer
