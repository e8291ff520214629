#include "noisenet/simnet/link.hpp"

#include <algorithm>
#include <cmath>

namespace noisenet::simnet {

double LinkState::success_prob(const LinkParams& p) const {
  if (!connected(p)) return 0.0;
  return 1.0 / (1.0 + std::exp(-(signal_quality_pct - p.q0) / p.s));
}

bool link_transfer(const LinkState& link, std::uint64_t, Rng& rng, const LinkParams& params) {
  const double p = link.success_prob(params);
  if (p <= 0.0) return false;
  return rng.uniform() < p;
}

double ou_step(double x, double mean, double reversion_per_s, double stationary_sd, double dt_s, Rng& rng, double lo,
               double hi) {
  // Exact discretization of dX = -k (X - m) dt + sigma dW.
  const double a = std::exp(-reversion_per_s * dt_s);
  const double sd = stationary_sd * std::sqrt(1.0 - a * a);
  return std::clamp(mean + (x - mean) * a + sd * rng.normal(), lo, hi);
}

}  // namespace noisenet::simnet
