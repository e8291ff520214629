#pragma once

#include <cstdint>
#include <string>

#include "noisenet/acoustics/minute_file.hpp"

namespace noisenet::simnet {

/// Synthetic urban soundscape used for full-payload runs: a diurnal ambient
/// with block-to-block jitter and occasional loud events.
struct SoundscapeParams {
  double ambient_dba = 52.0;
  /// Peak-to-mean swing of the daily cycle (quietest around 04:00 UTC).
  double diurnal_db = 6.0;
  double block_sd_db = 1.5;
  double events_per_minute = 0.5;
  double event_db_lo = 12.0;
  double event_db_hi = 25.0;
  double event_s_lo = 2.0;
  double event_s_hi = 8.0;
};

/// Minute file with levels that are a pure function of (seed, sensor, minute).
/// Slow blocks are the energy mean of their eight fast blocks.
acoustics::SplMinuteFile synthesize_minute(const std::string& sensor_id, Timestamp minute_start, std::uint64_t seed,
                                           const SoundscapeParams& params = {});

}  // namespace noisenet::simnet
