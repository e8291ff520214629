#include "noisenet/acoustics/levels.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>

#include <fmt/format.h>
#include <unsupported/Eigen/FFT>

#include "noisenet/acoustics/weighting.hpp"
#include "noisenet/common/errors.hpp"

namespace noisenet::acoustics {

namespace {

constexpr double kFullScale = 32768.0;

/// Per-bin weights and band membership for one FFT length (one-sided spectrum).
struct SpectrumPlan {
  std::size_t n;
  std::vector<double> fold;  // 1 for DC/Nyquist, 2 otherwise
  std::vector<double> gain_a;
  std::vector<double> gain_c;
  std::vector<int> octave_of_bin;  // -1 if outside all bands
  std::vector<int> third_of_bin;

  explicit SpectrumPlan(std::size_t length) : n(length) {
    const std::size_t bins = n / 2 + 1;
    fold.resize(bins);
    gain_a.resize(bins);
    gain_c.resize(bins);
    octave_of_bin.assign(bins, -1);
    third_of_bin.assign(bins, -1);
    const auto octave = band_edges(BandKind::Octave);
    const auto third = band_edges(BandKind::ThirdOctave);
    for (std::size_t k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * kSampleRateHz / static_cast<double>(n);
      fold[k] = (k == 0 || k == n / 2) ? 1.0 : 2.0;
      gain_a[k] = weighting_power_gain(f, Weighting::A);
      gain_c[k] = weighting_power_gain(f, Weighting::C);
      for (std::size_t b = 0; b < octave.size(); ++b) {
        if (f >= octave[b].lower_hz && f < octave[b].upper_hz) octave_of_bin[k] = static_cast<int>(b);
      }
      for (std::size_t b = 0; b < third.size(); ++b) {
        if (f >= third[b].lower_hz && f < third[b].upper_hz) third_of_bin[k] = static_cast<int>(b);
      }
    }
  }
};

const SpectrumPlan& plan_for(std::size_t n) {
  static const SpectrumPlan slow{kSamplesPerSecond};
  static const SpectrumPlan fast{kSamplesPerFastBlock};
  return n == kSamplesPerSecond ? slow : fast;
}

/// Mean-square energies (full-scale units) of one window.
struct Energies {
  double z = 0.0;
  double a = 0.0;
  double c = 0.0;
  std::array<double, kOctaveBands> octave{};
  std::array<double, kThirdOctaveBands> third{};
};

Energies window_energies(std::span<const std::int16_t> samples) {
  const auto& plan = plan_for(samples.size());
  std::vector<double> x(samples.size());
  std::transform(samples.begin(), samples.end(), x.begin(),
                 [](std::int16_t s) { return static_cast<double>(s) / kFullScale; });
  std::vector<std::complex<double>> spectrum;
  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  fft.fwd(spectrum, x);

  const double norm = 1.0 / (static_cast<double>(plan.n) * static_cast<double>(plan.n));
  Energies e;
  for (std::size_t k = 0; k < spectrum.size(); ++k) {
    const double p = std::norm(spectrum[k]) * plan.fold[k] * norm;
    e.z += p;
    e.a += p * plan.gain_a[k];
    e.c += p * plan.gain_c[k];
    if (plan.octave_of_bin[k] >= 0) e.octave[static_cast<std::size_t>(plan.octave_of_bin[k])] += p;
    if (plan.third_of_bin[k] >= 0) e.third[static_cast<std::size_t>(plan.third_of_bin[k])] += p;
  }
  return e;
}

double to_db(double energy, double offset_db) {
  if (energy <= 0.0) return -std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(energy) + offset_db;
}

SplBlock to_block(const Energies& e, Timestamp time, Integration integration, double offset_db) {
  SplBlock b;
  b.time = time;
  b.integration = integration;
  b.level_z_db = to_db(e.z, offset_db);
  b.level_a_db = to_db(e.a, offset_db);
  b.level_c_db = to_db(e.c, offset_db);
  for (std::size_t i = 0; i < kOctaveBands; ++i) b.octave_db[i] = to_db(e.octave[i], offset_db);
  for (std::size_t i = 0; i < kThirdOctaveBands; ++i) b.third_octave_db[i] = to_db(e.third[i], offset_db);
  return b;
}

void finish(SplBlock& b, const Calibration& cal) {
  auto fix = [&](double& v) { v = quantize_level(std::clamp(v, cal.floor_db, cal.ceiling_db)); };
  fix(b.level_z_db);
  fix(b.level_a_db);
  fix(b.level_c_db);
  for (auto& v : b.octave_db) fix(v);
  for (auto& v : b.third_octave_db) fix(v);
}

}  // namespace

double quantize_level(double db) { return std::round(db * 100.0) / 100.0; }

BlockLevels compute_block_levels_raw(const AudioFrame& frame, const Calibration& cal) {
  if (frame.samples.empty()) throw DomainError("audio frame is empty");
  if (frame.sample_rate_hz != kSampleRateHz) {
    throw DomainError(fmt::format("sample rate must be {} Hz, got {}", kSampleRateHz, frame.sample_rate_hz));
  }
  if (frame.samples.size() != kSamplesPerSecond) {
    throw DomainError(fmt::format("frame must cover exactly 1 s ({} samples), got {}", kSamplesPerSecond,
                                  frame.samples.size()));
  }
  if (!std::isfinite(cal.offset_db) || !(cal.floor_db < cal.ceiling_db)) {
    throw DomainError("calibration needs a finite offset and floor < ceiling");
  }

  const std::span<const std::int16_t> all(frame.samples);
  BlockLevels out;
  double fast_a = 0.0;
  double fast_c = 0.0;
  for (std::size_t i = 0; i < kFastPerSlow; ++i) {
    const auto e = window_energies(all.subspan(i * kSamplesPerFastBlock, kSamplesPerFastBlock));
    fast_a += e.a;
    fast_c += e.c;
    out.fast[i] = to_block(e, frame.start_time + Millis{125 * static_cast<std::int64_t>(i)}, Integration::Fast,
                           cal.offset_db);
  }
  auto slow = window_energies(all);
  slow.a = fast_a / kFastPerSlow;
  slow.c = fast_c / kFastPerSlow;
  out.slow = to_block(slow, frame.start_time, Integration::Slow, cal.offset_db);
  return out;
}

BlockLevels compute_block_levels(const AudioFrame& frame, const Calibration& cal) {
  auto levels = compute_block_levels_raw(frame, cal);
  finish(levels.slow, cal);
  for (auto& b : levels.fast) finish(b, cal);
  return levels;
}

}  // namespace noisenet::acoustics
