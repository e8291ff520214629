#pragma once

namespace noisenet::acoustics {

enum class Weighting { A, C, Z };

/// Frequency weighting gain from the IEC 61672-1 analytic pole definitions,
/// normalized so that A and C are exactly 0 dB at 1 kHz. Z is flat.
/// Throws DomainError unless freq_hz is finite and positive.
double weighting_gain_db(double freq_hz, Weighting weighting);

/// Linear power gain, 10^(dB/10); 0 at DC for A and C.
double weighting_power_gain(double freq_hz, Weighting weighting);

}  // namespace noisenet::acoustics
