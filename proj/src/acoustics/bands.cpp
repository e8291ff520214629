#include "noisenet/acoustics/bands.hpp"

#include <array>
#include <cmath>

namespace noisenet::acoustics {

namespace {

constexpr std::array<std::string_view, kOctaveBands> kOctaveLabels = {
    "31.5", "63", "125", "250", "500", "1000", "2000", "4000", "8000", "16000"};

constexpr std::array<std::string_view, kThirdOctaveBands> kThirdOctaveLabels = {
    "25",   "31.5", "40",   "50",   "63",   "80",   "100",  "125",   "160",   "200",
    "250",  "315",  "400",  "500",  "630",  "800",  "1000", "1250",  "1600",  "2000",
    "2500", "3150", "4000", "5000", "6300", "8000", "10000", "12500", "16000", "20000"};

// Exponent index ranges relative to 1 kHz.
constexpr int kThirdFirst = -16;
constexpr int kOctaveFirst = -5;

}  // namespace

std::vector<double> band_centers(BandKind kind) {
  std::vector<double> centers;
  if (kind == BandKind::ThirdOctave) {
    for (int k = 0; k < static_cast<int>(kThirdOctaveBands); ++k) {
      const int n = kThirdFirst + k;
      centers.push_back(n == 0 ? 1000.0 : 1000.0 * std::pow(10.0, n / 10.0));
    }
  } else {
    for (int k = 0; k < static_cast<int>(kOctaveBands); ++k) {
      const int n = kOctaveFirst + k;
      centers.push_back(n == 0 ? 1000.0 : 1000.0 * std::pow(10.0, 3.0 * n / 10.0));
    }
  }
  return centers;
}

std::span<const std::string_view> band_labels(BandKind kind) {
  if (kind == BandKind::ThirdOctave) return kThirdOctaveLabels;
  return kOctaveLabels;
}

std::vector<BandEdges> band_edges(BandKind kind) {
  const double half_width = kind == BandKind::ThirdOctave ? 1.0 / 20.0 : 3.0 / 20.0;
  const double ratio = std::pow(10.0, half_width);
  std::vector<BandEdges> edges;
  for (double fc : band_centers(kind)) edges.push_back({fc / ratio, fc * ratio});
  return edges;
}

}  // namespace noisenet::acoustics
