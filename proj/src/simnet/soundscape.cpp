#include "noisenet/simnet/soundscape.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "noisenet/acoustics/bands.hpp"
#include "noisenet/acoustics/weighting.hpp"
#include "noisenet/common/rng.hpp"

namespace noisenet::simnet {

namespace {

using acoustics::SplBlock;
using acoustics::kOctaveBands;
using acoustics::kThirdOctaveBands;

struct Spectrum {
  std::array<double, kThirdOctaveBands> shape{};
  std::array<double, kThirdOctaveBands> a_gain{};
  std::array<double, kThirdOctaveBands> c_gain{};
};

const Spectrum& spectrum() {
  static const Spectrum s = [] {
    Spectrum out;
    const auto centers = acoustics::band_centers(acoustics::BandKind::ThirdOctave);
    for (std::size_t i = 0; i < kThirdOctaveBands; ++i) {
      // Broad traffic-like hump around 500 Hz.
      out.shape[i] = -3.0 * std::abs(std::log2(centers[i] / 500.0));
      out.a_gain[i] = acoustics::weighting_gain_db(centers[i], acoustics::Weighting::A);
      out.c_gain[i] = acoustics::weighting_gain_db(centers[i], acoustics::Weighting::C);
    }
    return out;
  }();
  return s;
}

double energy_sum_db(const double* levels, std::size_t n, const double* gains = nullptr) {
  double e = 0;
  for (std::size_t i = 0; i < n; ++i) e += std::pow(10.0, (levels[i] + (gains ? gains[i] : 0.0)) / 10.0);
  return 10.0 * std::log10(e);
}

double energy_mean(double acc, std::size_t n) { return 10.0 * std::log10(acc / static_cast<double>(n)); }

double finish(double db) { return acoustics::quantize_level(std::clamp(db, 32.0, 120.0)); }

/// Unquantized block: band levels scaled so the A-weighted sum hits target_dba.
SplBlock make_block(Timestamp t, double target_dba, Rng& rng) {
  const auto& sp = spectrum();
  SplBlock b;
  b.time = t;
  b.integration = acoustics::Integration::Fast;
  std::array<double, kThirdOctaveBands> bands{};
  for (std::size_t i = 0; i < kThirdOctaveBands; ++i) bands[i] = sp.shape[i] + rng.normal(0.0, 1.0);
  const double shift = target_dba - energy_sum_db(bands.data(), bands.size(), sp.a_gain.data());
  for (auto& v : bands) v += shift;
  b.third_octave_db = bands;
  for (std::size_t k = 0; k < kOctaveBands; ++k) b.octave_db[k] = energy_sum_db(bands.data() + 3 * k, 3);
  b.level_z_db = energy_sum_db(bands.data(), bands.size());
  b.level_a_db = target_dba;
  b.level_c_db = energy_sum_db(bands.data(), bands.size(), sp.c_gain.data());
  return b;
}

template <class F>
void for_each_level(SplBlock& b, F&& f) {
  f(b.level_z_db);
  f(b.level_a_db);
  f(b.level_c_db);
  for (auto& v : b.octave_db) f(v);
  for (auto& v : b.third_octave_db) f(v);
}

}  // namespace

acoustics::SplMinuteFile synthesize_minute(const std::string& sensor_id, Timestamp minute_start, std::uint64_t seed,
                                           const SoundscapeParams& p) {
  std::uint64_t sensor_hash = 1469598103934665603ULL;
  for (unsigned char c : sensor_id) sensor_hash = (sensor_hash ^ c) * 1099511628211ULL;
  Rng rng(derive_seed(derive_seed(seed, sensor_hash), static_cast<std::uint64_t>(to_unix_ms(minute_start))));

  const double hour_of_day =
      static_cast<double>((minute_start - floor_day(minute_start)).count()) / static_cast<double>(kHour.count());
  const double ambient = p.ambient_dba - p.diurnal_db * std::cos(2.0 * std::numbers::pi * (hour_of_day - 4.0) / 24.0);

  // Events as (start fast-block, length, boost).
  std::array<double, acoustics::kFastBlocksPerMinute> boost{};
  // Poisson event count by inversion.
  int events = 0;
  {
    const double u = rng.uniform();
    double term = std::exp(-p.events_per_minute);
    double cdf = term;
    while (u > cdf && events < 32) {
      ++events;
      term *= p.events_per_minute / events;
      cdf += term;
    }
  }
  for (int e = 0; e < events; ++e) {
    const auto start = rng.below(acoustics::kFastBlocksPerMinute);
    const auto len = static_cast<std::size_t>(rng.uniform(p.event_s_lo, p.event_s_hi) * 8.0);
    const double db = rng.uniform(p.event_db_lo, p.event_db_hi);
    for (std::size_t i = start; i < std::min(start + len, boost.size()); ++i) {
      boost[i] = 10.0 * std::log10(std::pow(10.0, boost[i] / 10.0) + std::pow(10.0, db / 10.0));
    }
  }

  std::vector<SplBlock> fast;
  fast.reserve(acoustics::kFastBlocksPerMinute);
  for (std::size_t i = 0; i < acoustics::kFastBlocksPerMinute; ++i) {
    const auto t = minute_start + Millis{125 * static_cast<std::int64_t>(i)};
    fast.push_back(make_block(t, ambient + rng.normal(0.0, p.block_sd_db) + boost[i], rng));
  }
  std::vector<SplBlock> slow;
  slow.reserve(acoustics::kSlowBlocksPerMinute);
  for (std::size_t s = 0; s < acoustics::kSlowBlocksPerMinute; ++s) {
    SplBlock acc{};
    for_each_level(acc, [](double& v) { v = 0.0; });
    for (std::size_t j = 0; j < acoustics::kFastPerSlow; ++j) {
      SplBlock f = fast[s * acoustics::kFastPerSlow + j];
      // Accumulate energies field by field.
      std::vector<double> energies;
      for_each_level(f, [&](double& v) { energies.push_back(std::pow(10.0, v / 10.0)); });
      std::size_t k = 0;
      for_each_level(acc, [&](double& v) { v += energies[k++]; });
    }
    for_each_level(acc, [](double& v) { v = energy_mean(v, acoustics::kFastPerSlow); });
    acc.time = minute_start + Millis{1000 * static_cast<std::int64_t>(s)};
    acc.integration = acoustics::Integration::Slow;
    slow.push_back(acc);
  }
  for (auto& b : fast) for_each_level(b, [](double& v) { v = finish(v); });
  for (auto& b : slow) for_each_level(b, [](double& v) { v = finish(v); });
  return acoustics::assemble_minute_file(std::move(slow), std::move(fast), sensor_id, minute_start);
}

}  // namespace noisenet::simnet
