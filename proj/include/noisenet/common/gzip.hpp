#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace noisenet::gzip {

/// gzip (RFC 1952) with a zeroed header mtime so output is reproducible.
std::vector<std::uint8_t> compress(std::span<const std::uint8_t> data, int level = 6);
std::vector<std::uint8_t> decompress(std::span<const std::uint8_t> data);

}  // namespace noisenet::gzip
