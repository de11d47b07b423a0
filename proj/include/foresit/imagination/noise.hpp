#pragma once

namespace foresit::imagination {

/// sigma^2 = max(sigma2_max - sr, 0).
double noise_variance(double sigma2_max, double success_rate);

struct NoiseSchedule {
  double sigma2_max = 0.9;

  double variance(double success_rate) const { return noise_variance(sigma2_max, success_rate); }
};

}  // namespace foresit::imagination
