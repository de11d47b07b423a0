#include "foresit/imagination/noise.hpp"

#include <algorithm>
#include <stdexcept>

namespace foresit::imagination {

double noise_variance(double sigma2_max, double success_rate) {
  if (sigma2_max < 0.0) throw std::invalid_argument("sigma2_max must be non-negative");
  if (success_rate < 0.0 || success_rate > 1.0) throw std::invalid_argument("success rate must lie in [0, 1]");
  return std::max(sigma2_max - success_rate, 0.0);
}

}  // namespace foresit::imagination
