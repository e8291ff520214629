#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace noisenet::tar {

struct Member {
  std::string name;
  std::vector<std::uint8_t> data;
  std::int64_t mtime_s = 0;
};

/// Serializes members as a POSIX ustar archive (regular files only, mode 0644,
/// uid/gid 0) terminated by two zero blocks. Output is a pure function of the input.
std::vector<std::uint8_t> write(const std::vector<Member>& members);

/// Parses a ustar archive. Throws FormatError on a bad checksum, a truncated
/// member or a missing end-of-archive marker.
std::vector<Member> read(std::span<const std::uint8_t> archive);

}  // namespace noisenet::tar
