#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace noisenet::node::flac {

/// Encodes mono 16-bit PCM as a native FLAC stream (STREAMINFO with MD5,
/// fixed-blocksize frames, CONSTANT / FIXED / VERBATIM subframes with
/// partitioned Rice residuals).
std::vector<std::uint8_t> encode(std::span<const std::int16_t> pcm, int sample_rate_hz, std::uint32_t block_size = 4096);

struct Decoded {
  std::vector<std::int16_t> samples;
  int sample_rate_hz = 0;
};

/// Decodes streams produced by encode (and other mono 16-bit FLAC that uses
/// no LPC subframes). Verifies frame CRCs and the STREAMINFO MD5; throws
/// FormatError on any mismatch.
Decoded decode(std::span<const std::uint8_t> stream);

}  // namespace noisenet::node::flac
