#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <vector>

#include "noisenet/common/rng.hpp"

namespace testsupport {

/// Sum of sinusoids sampled at 48 kHz, rounded to int16.
struct Tone {
  double freq_hz;
  double amplitude;  // in int16 units
  double phase = 0.0;
};

inline std::vector<std::int16_t> synth(const std::vector<Tone>& tones, std::size_t n, std::size_t offset = 0) {
  std::vector<std::int16_t> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i + offset) / 48000.0;
    double v = 0.0;
    for (const auto& tone : tones) v += tone.amplitude * std::sin(2.0 * std::numbers::pi * tone.freq_hz * t + tone.phase);
    out[i] = static_cast<std::int16_t>(std::lround(std::clamp(v, -32768.0, 32767.0)));
  }
  return out;
}

/// Mean square of samples normalized to full scale 32768.
inline double mean_square(const std::vector<std::int16_t>& x) {
  double s = 0.0;
  for (auto v : x) s += (v / 32768.0) * (v / 32768.0);
  return s / static_cast<double>(x.size());
}

/// Brute-force one-sided DFT energy of the bins whose frequency lies in [lo, hi).
inline double dft_band_energy(const std::vector<std::int16_t>& x, double lo, double hi) {
  const std::size_t n = x.size();
  double total = 0.0;
  for (std::size_t k = 1; k < n / 2; ++k) {
    const double f = static_cast<double>(k) * 48000.0 / static_cast<double>(n);
    if (f < lo || f >= hi) continue;
    std::complex<double> acc{0.0, 0.0};
    for (std::size_t i = 0; i < n; ++i) {
      const double angle = -2.0 * std::numbers::pi * static_cast<double>(k * i % n) / static_cast<double>(n);
      acc += (x[i] / 32768.0) * std::complex<double>(std::cos(angle), std::sin(angle));
    }
    total += 2.0 * std::norm(acc) / (static_cast<double>(n) * static_cast<double>(n));
  }
  return total;
}

}  // namespace testsupport
