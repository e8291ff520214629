#pragma once

#include <cstdint>

#include "noisenet/common/rng.hpp"

namespace noisenet::simnet {

struct LinkParams {
  /// Logistic success map: p = 1 / (1 + exp(-(quality - q0) / s)).
  double q0 = 30.0;
  double s = 8.0;
  /// Below this quality the node is not associated at all.
  double disconnect_quality = 0.0;
};

struct LinkState {
  double signal_strength_pct = 0.0;
  double signal_quality_pct = 0.0;
  bool ap_up = true;

  bool connected(const LinkParams& p) const { return ap_up && signal_quality_pct >= p.disconnect_quality; }
  double success_prob(const LinkParams& p) const;
};

/// One Bernoulli draw per attempted transfer.
bool link_transfer(const LinkState& link, std::uint64_t item_bytes, Rng& rng, const LinkParams& params = {});

/// Bounded mean-reverting (Ornstein-Uhlenbeck) step, clamped to [lo, hi].
double ou_step(double x, double mean, double reversion_per_s, double stationary_sd, double dt_s, Rng& rng,
               double lo = 0.0, double hi = 100.0);

}  // namespace noisenet::simnet
