#include "noisenet/acoustics/minute_file.hpp"

#include <algorithm>
#include <string_view>

#include <fmt/format.h>

#include "noisenet/common/errors.hpp"
#include "noisenet/common/io.hpp"
#include "noisenet/common/tar.hpp"

namespace noisenet::acoustics {

namespace {

constexpr std::size_t kColumns = 1 + 3 + kOctaveBands + kThirdOctaveBands;

void check_series(std::vector<SplBlock>& blocks, std::size_t expected, Millis step, Integration integration,
                  Timestamp minute_start, std::string_view what) {
  std::sort(blocks.begin(), blocks.end(), [](const SplBlock& a, const SplBlock& b) { return a.time < b.time; });
  for (std::size_t i = 1; i < blocks.size(); ++i) {
    if (blocks[i].time == blocks[i - 1].time) {
      throw AssemblyError(fmt::format("duplicate {} block at {} ms", what, to_unix_ms(blocks[i].time)));
    }
  }
  if (blocks.size() != expected) {
    throw AssemblyError(fmt::format("need {} {} blocks, got {}", expected, what, blocks.size()));
  }
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const auto want = minute_start + step * static_cast<std::int64_t>(i);
    if (blocks[i].time != want) {
      throw AssemblyError(fmt::format("{} block {} at {} ms, expected {} ms", what, i, to_unix_ms(blocks[i].time),
                                      to_unix_ms(want)));
    }
    if (blocks[i].integration != integration) {
      throw AssemblyError(fmt::format("{} block {} has the wrong integration time", what, i));
    }
  }
}

std::string render_csv(const std::vector<SplBlock>& blocks) {
  std::string out = minute_csv_header();
  out.reserve(blocks.size() * 320);
  auto it = std::back_inserter(out);
  for (const auto& b : blocks) {
    fmt::format_to(it, "{},{:.2f},{:.2f},{:.2f}", to_unix_ms(b.time), b.level_z_db, b.level_a_db, b.level_c_db);
    for (double v : b.octave_db) fmt::format_to(it, ",{:.2f}", v);
    for (double v : b.third_octave_db) fmt::format_to(it, ",{:.2f}", v);
    out.push_back('\n');
  }
  return out;
}

std::vector<SplBlock> parse_csv(std::string_view text, Integration integration, std::size_t expected_rows) {
  const auto header = minute_csv_header();
  if (text.substr(0, header.size()) != header) throw FormatError("minute CSV header mismatch");
  text.remove_prefix(header.size());
  std::vector<SplBlock> blocks;
  blocks.reserve(expected_rows);
  while (!text.empty()) {
    const auto eol = text.find('\n');
    if (eol == std::string_view::npos) throw FormatError("minute CSV row not newline-terminated");
    const auto fields = split(text.substr(0, eol), ',');
    text.remove_prefix(eol + 1);
    if (fields.size() != kColumns) {
      throw FormatError(fmt::format("minute CSV row has {} columns, expected {}", fields.size(), kColumns));
    }
    SplBlock b;
    b.integration = integration;
    b.time = from_unix_ms(parse_int(fields[0]));
    b.level_z_db = parse_double(fields[1]);
    b.level_a_db = parse_double(fields[2]);
    b.level_c_db = parse_double(fields[3]);
    for (std::size_t i = 0; i < kOctaveBands; ++i) b.octave_db[i] = parse_double(fields[4 + i]);
    for (std::size_t i = 0; i < kThirdOctaveBands; ++i) b.third_octave_db[i] = parse_double(fields[4 + kOctaveBands + i]);
    blocks.push_back(b);
  }
  if (blocks.size() != expected_rows) {
    throw FormatError(fmt::format("minute CSV has {} rows, expected {}", blocks.size(), expected_rows));
  }
  return blocks;
}

}  // namespace

std::string minute_file_name(const std::string& sensor_id, Timestamp minute_start) {
  return fmt::format("{}_{}.tar", sensor_id, to_unix_ms(minute_start) / 1000);
}

std::string SplMinuteFile::file_name() const { return minute_file_name(sensor_id, minute_start); }

std::string minute_csv_header() {
  std::string header = "ts_ms,dBZ,dBA,dBC";
  for (auto label : band_labels(BandKind::Octave)) header += fmt::format(",oct_{}", label);
  for (auto label : band_labels(BandKind::ThirdOctave)) header += fmt::format(",tob_{}", label);
  header.push_back('\n');
  return header;
}

SplMinuteFile assemble_minute_file(std::vector<SplBlock> slow_blocks, std::vector<SplBlock> fast_blocks,
                                   const std::string& sensor_id, Timestamp minute_start) {
  if (sensor_id.empty() || sensor_id.find_first_of("/_") != std::string::npos) {
    throw AssemblyError(fmt::format("invalid sensor id '{}'", sensor_id));
  }
  check_series(slow_blocks, kSlowBlocksPerMinute, kSecond, Integration::Slow, minute_start, "slow");
  check_series(fast_blocks, kFastBlocksPerMinute, Millis{125}, Integration::Fast, minute_start, "fast");

  const auto mtime = to_unix_ms(minute_start) / 1000;
  const auto slow_csv = render_csv(slow_blocks);
  const auto fast_csv = render_csv(fast_blocks);
  std::vector<tar::Member> members{
      {"slow.csv", {slow_csv.begin(), slow_csv.end()}, mtime},
      {"fast.csv", {fast_csv.begin(), fast_csv.end()}, mtime},
  };
  SplMinuteFile file;
  file.sensor_id = sensor_id;
  file.minute_start = minute_start;
  file.slow_blocks = std::move(slow_blocks);
  file.fast_blocks = std::move(fast_blocks);
  file.bytes = tar::write(members);
  return file;
}

ParsedMinute parse_minute_file(std::span<const std::uint8_t> bytes) {
  const auto members = tar::read(bytes);
  const tar::Member* slow = nullptr;
  const tar::Member* fast = nullptr;
  for (const auto& m : members) {
    if (m.name == "slow.csv") slow = &m;
    else if (m.name == "fast.csv") fast = &m;
  }
  if (slow == nullptr || fast == nullptr) throw FormatError("minute file lacks slow.csv or fast.csv");
  ParsedMinute parsed;
  parsed.slow_blocks = parse_csv({reinterpret_cast<const char*>(slow->data.data()), slow->data.size()},
                                 Integration::Slow, kSlowBlocksPerMinute);
  parsed.fast_blocks = parse_csv({reinterpret_cast<const char*>(fast->data.data()), fast->data.size()},
                                 Integration::Fast, kFastBlocksPerMinute);
  return parsed;
}

bool is_readable_minute_file(std::span<const std::uint8_t> bytes) noexcept {
  try {
    parse_minute_file(bytes);
    return true;
  } catch (...) {
    return false;
  }
}

}  // namespace noisenet::acoustics
