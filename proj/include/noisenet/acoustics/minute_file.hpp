#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "noisenet/acoustics/levels.hpp"

namespace noisenet::acoustics {

inline constexpr std::size_t kSlowBlocksPerMinute = 60;
inline constexpr std::size_t kFastBlocksPerMinute = 480;

class AssemblyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SplMinuteFile {
  std::string sensor_id;
  Timestamp minute_start{};
  std::vector<SplBlock> slow_blocks;
  std::vector<SplBlock> fast_blocks;
  /// Uncompressed ustar with members slow.csv and fast.csv.
  std::vector<std::uint8_t> bytes;

  std::string file_name() const;
};

/// "<sensor_id>_<minute_start_unix_s>.tar"
std::string minute_file_name(const std::string& sensor_id, Timestamp minute_start);

/// CSV header shared by slow.csv and fast.csv.
std::string minute_csv_header();

/// Validates 60 slow + 480 fast contiguous blocks (any input order) and
/// serializes them. Throws AssemblyError on missing, duplicate or misaligned blocks.
SplMinuteFile assemble_minute_file(std::vector<SplBlock> slow_blocks, std::vector<SplBlock> fast_blocks,
                                   const std::string& sensor_id, Timestamp minute_start);

struct ParsedMinute {
  std::vector<SplBlock> slow_blocks;
  std::vector<SplBlock> fast_blocks;
};

/// Inverse of assemble_minute_file. Throws FormatError if the tar or either
/// CSV is malformed or the row counts are not 60 / 480.
ParsedMinute parse_minute_file(std::span<const std::uint8_t> bytes);

/// True iff parse_minute_file succeeds.
bool is_readable_minute_file(std::span<const std::uint8_t> bytes) noexcept;

}  // namespace noisenet::acoustics
