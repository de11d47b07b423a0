#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace foresit::eval {

/// Contribution of one episode to SPL: s * L^g / max(L, L^g). A successful
/// episode with L^g = 0 counts as 1.
double spl_term(bool success, int oracle_length, int agent_length);

/// Mean SPL over episodes. Throws std::invalid_argument on length mismatch or
/// negative lengths.
double spl(const std::vector<bool>& successes, std::span<const int> oracle_lengths, std::span<const int> agent_lengths);

/// Fraction of successes; 0 for an empty list.
double success_rate(const std::vector<bool>& successes);

}  // namespace foresit::eval
