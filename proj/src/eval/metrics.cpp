#include "foresit/eval/metrics.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace foresit::eval {

double spl_term(bool success, int oracle_length, int agent_length) {
  if (oracle_length < 0 || agent_length < 0) {
    throw std::invalid_argument("path lengths must be non-negative (L^g " + std::to_string(oracle_length) + ", L " +
                                std::to_string(agent_length) + ")");
  }
  if (!success) return 0.0;
  if (oracle_length == 0) return 1.0;
  return static_cast<double>(oracle_length) / static_cast<double>(std::max(agent_length, oracle_length));
}

double spl(const std::vector<bool>& successes, std::span<const int> oracle_lengths, std::span<const int> agent_lengths) {
  if (successes.size() != oracle_lengths.size() || successes.size() != agent_lengths.size()) {
    throw std::invalid_argument("spl: " + std::to_string(successes.size()) + " successes, " +
                                std::to_string(oracle_lengths.size()) + " oracle lengths, " +
                                std::to_string(agent_lengths.size()) + " agent lengths");
  }
  if (successes.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < successes.size(); ++i) total += spl_term(successes[i], oracle_lengths[i], agent_lengths[i]);
  return total / static_cast<double>(successes.size());
}

double success_rate(const std::vector<bool>& successes) {
  if (successes.empty()) return 0.0;
  std::size_t n = 0;
  for (bool s : successes) n += s ? 1 : 0;
  return static_cast<double>(n) / static_cast<double>(successes.size());
}

}  // namespace foresit::eval
