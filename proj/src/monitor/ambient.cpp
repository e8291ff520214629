#include "noisenet/monitor/ambient.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "noisenet/common/errors.hpp"

namespace noisenet::monitor {

double percentile(std::vector<double> values, double p) {
  if (values.empty()) throw DomainError("percentile of an empty set");
  if (!(p >= 0.0 && p <= 100.0)) throw DomainError("percentile outside [0, 100]");
  std::sort(values.begin(), values.end());
  const double pos = p / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + (values[hi] - values[lo]) * frac;
}

double ambient_level(std::span<const LevelSample> samples) {
  if (samples.size() < kMinAmbientSamples) {
    throw UndefinedAmbient(fmt::format("ambient needs at least {} one-second levels, got {}", kMinAmbientSamples,
                                       samples.size()));
  }
  std::vector<double> v;
  v.reserve(samples.size());
  for (const auto& s : samples) v.push_back(s.dba);
  return percentile(std::move(v), 10.0);
}

double ambient_level_at(std::span<const LevelSample> samples, Timestamp end) {
  const auto begin = end - kAmbientWindow;
  const auto lo = std::lower_bound(samples.begin(), samples.end(), begin,
                                   [](const LevelSample& s, Timestamp t) { return s.ts < t; });
  const auto hi = std::lower_bound(samples.begin(), samples.end(), end,
                                   [](const LevelSample& s, Timestamp t) { return s.ts < t; });
  return ambient_level(samples.subspan(static_cast<std::size_t>(lo - samples.begin()), static_cast<std::size_t>(hi - lo)));
}

double exceedance_fraction(std::span<const LevelSample> samples, Timestamp hour, double ambient_db, double margin_db) {
  std::size_t above = 0;
  for (const auto& s : samples) {
    if (s.ts >= hour && s.ts < hour + kHour && s.dba > ambient_db + margin_db) ++above;
  }
  return 100.0 * static_cast<double>(std::min<std::size_t>(above, 3600)) / 3600.0;
}

}  // namespace noisenet::monitor
