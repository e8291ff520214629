#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "noisenet/common/time.hpp"

namespace noisenet::monitor {

class UndefinedAmbient : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LevelSample {
  Timestamp ts{};
  double dba = 0;
};

inline constexpr Millis kAmbientWindow = std::chrono::hours(24);
inline constexpr std::size_t kMinAmbientSamples = 3600;

/// Linear-interpolated percentile (p in [0, 100]) of unsorted values.
double percentile(std::vector<double> values, double p);

/// L90: the level exceeded 90% of the time, i.e. the 10th percentile of the
/// 1 s A-weighted levels. Throws UndefinedAmbient for fewer than an hour of samples.
double ambient_level(std::span<const LevelSample> samples);

/// L90 over the samples in [end - 24 h, end).
double ambient_level_at(std::span<const LevelSample> samples, Timestamp end);

/// 100 * (seconds with dBA > ambient + margin) / 3600 over [hour, hour + 1 h).
double exceedance_fraction(std::span<const LevelSample> samples, Timestamp hour, double ambient_db,
                           double margin_db = 10.0);

}  // namespace noisenet::monitor
