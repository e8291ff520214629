#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "noisenet/acoustics/bands.hpp"
#include "noisenet/common/time.hpp"

namespace noisenet::acoustics {

inline constexpr int kSampleRateHz = 48000;
inline constexpr std::size_t kSamplesPerSecond = 48000;
inline constexpr std::size_t kSamplesPerFastBlock = 6000;  // 125 ms
inline constexpr std::size_t kFastPerSlow = 8;

struct AudioFrame {
  std::vector<std::int16_t> samples;
  int sample_rate_hz = kSampleRateHz;
  Timestamp start_time{};
};

struct Calibration {
  /// dB added to dBFS (full scale = 32768) to obtain SPL.
  double offset_db = 0.0;
  double floor_db = 32.0;
  double ceiling_db = 120.0;
};

enum class Integration { Fast, Slow };

struct SplBlock {
  Timestamp time{};
  Integration integration = Integration::Slow;
  double level_z_db = 0.0;
  double level_a_db = 0.0;
  double level_c_db = 0.0;
  std::array<double, kOctaveBands> octave_db{};
  std::array<double, kThirdOctaveBands> third_octave_db{};

  friend bool operator==(const SplBlock&, const SplBlock&) = default;
};

struct BlockLevels {
  SplBlock slow;
  std::array<SplBlock, kFastPerSlow> fast;
};

/// Levels for one second of audio: one slow block from the 1 s spectrum and
/// eight fast blocks from the 125 ms sub-window spectra. Weighted slow levels
/// are the energy average of the weighted fast levels. Not clamped or rounded.
BlockLevels compute_block_levels_raw(const AudioFrame& frame, const Calibration& cal);

/// compute_block_levels_raw, clamped to [floor_db, ceiling_db] and rounded to 0.01 dB.
/// Throws DomainError for an empty frame, a frame that is not exactly 1 s,
/// or a sample rate other than 48 kHz.
BlockLevels compute_block_levels(const AudioFrame& frame, const Calibration& cal);

/// Rounds to the 0.01 dB grid used on the wire.
double quantize_level(double db);

}  // namespace noisenet::acoustics
