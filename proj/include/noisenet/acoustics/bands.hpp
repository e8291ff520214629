#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace noisenet::acoustics {

enum class BandKind { Octave, ThirdOctave };

inline constexpr std::size_t kOctaveBands = 10;
inline constexpr std::size_t kThirdOctaveBands = 30;

/// Exact base-10 centre frequencies: 1 kHz * 10^(k/10) for third octaves
/// (25 Hz .. 20 kHz) and 1 kHz * 10^(3k/10) for octaves (31.5 Hz .. 16 kHz).
std::vector<double> band_centers(BandKind kind);

/// Nominal labels ("31.5", "63", ...) used in CSV column names.
std::span<const std::string_view> band_labels(BandKind kind);

struct BandEdges {
  double lower_hz;
  double upper_hz;
};

/// Contiguous edges: centre * 10^(-/+ 1/20) (third octave) or 10^(-/+ 3/20) (octave).
std::vector<BandEdges> band_edges(BandKind kind);

}  // namespace noisenet::acoustics
