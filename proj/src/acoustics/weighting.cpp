#include "noisenet/acoustics/weighting.hpp"

#include <cmath>

#include <fmt/format.h>

#include "noisenet/common/errors.hpp"

namespace noisenet::acoustics {

namespace {

// IEC 61672-1 pole frequencies (Hz).
constexpr double kF1 = 20.598997;
constexpr double kF2 = 107.65265;
constexpr double kF3 = 737.86223;
constexpr double kF4 = 12194.217;

double response_a_db(double f) {
  const double f2 = f * f;
  const double num = kF4 * kF4 * f2 * f2;
  const double den = (f2 + kF1 * kF1) * std::sqrt((f2 + kF2 * kF2) * (f2 + kF3 * kF3)) * (f2 + kF4 * kF4);
  return 20.0 * std::log10(num / den);
}

double response_c_db(double f) {
  const double f2 = f * f;
  const double num = kF4 * kF4 * f2;
  const double den = (f2 + kF1 * kF1) * (f2 + kF4 * kF4);
  return 20.0 * std::log10(num / den);
}

}  // namespace

double weighting_gain_db(double freq_hz, Weighting weighting) {
  if (!std::isfinite(freq_hz) || freq_hz <= 0.0) {
    throw DomainError(fmt::format("weighting frequency must be finite and > 0, got {}", freq_hz));
  }
  switch (weighting) {
    case Weighting::A: {
      static const double a1000 = response_a_db(1000.0);
      return response_a_db(freq_hz) - a1000;
    }
    case Weighting::C: {
      static const double c1000 = response_c_db(1000.0);
      return response_c_db(freq_hz) - c1000;
    }
    case Weighting::Z:
      return 0.0;
  }
  return 0.0;
}

double weighting_power_gain(double freq_hz, Weighting weighting) {
  if (freq_hz == 0.0) return weighting == Weighting::Z ? 1.0 : 0.0;
  return std::pow(10.0, weighting_gain_db(freq_hz, weighting) / 10.0);
}

}  // namespace noisenet::acoustics
