#include "noisenet/common/tar.hpp"

#include <algorithm>
#include <cstring>

#include <fmt/format.h>

#include "noisenet/common/errors.hpp"

namespace noisenet::tar {

namespace {

constexpr std::size_t kBlock = 512;

void put_octal(std::uint8_t* field, std::size_t width, std::uint64_t value) {
  // width-1 digits followed by NUL
  const auto text = fmt::format("{:0{}o}", value, width - 1);
  if (text.size() != width - 1) throw FormatError("tar numeric field overflow");
  std::memcpy(field, text.data(), width - 1);
  field[width - 1] = 0;
}

std::uint64_t get_octal(const std::uint8_t* field, std::size_t width) {
  std::uint64_t value = 0;
  std::size_t i = 0;
  while (i < width && (field[i] == ' ' || field[i] == 0)) ++i;
  for (; i < width && field[i] >= '0' && field[i] <= '7'; ++i) value = value * 8 + (field[i] - '0');
  return value;
}

std::uint32_t header_checksum(const std::uint8_t* header) {
  std::uint32_t sum = 0;
  for (std::size_t i = 0; i < kBlock; ++i) sum += (i >= 148 && i < 156) ? ' ' : header[i];
  return sum;
}

}  // namespace

std::vector<std::uint8_t> write(const std::vector<Member>& members) {
  std::vector<std::uint8_t> out;
  for (const auto& m : members) {
    if (m.name.empty() || m.name.size() > 100) {
      throw FormatError(fmt::format("tar member name '{}' must be 1..100 bytes", m.name));
    }
    std::uint8_t header[kBlock] = {};
    std::memcpy(header, m.name.data(), m.name.size());
    put_octal(header + 100, 8, 0644);
    put_octal(header + 108, 8, 0);
    put_octal(header + 116, 8, 0);
    put_octal(header + 124, 12, m.data.size());
    put_octal(header + 136, 12, static_cast<std::uint64_t>(std::max<std::int64_t>(m.mtime_s, 0)));
    header[156] = '0';
    std::memcpy(header + 257, "ustar", 6);
    std::memcpy(header + 263, "00", 2);
    const auto sum = header_checksum(header);
    const auto sum_text = fmt::format("{:06o}", sum);
    std::memcpy(header + 148, sum_text.data(), 6);
    header[154] = 0;
    header[155] = ' ';
    out.insert(out.end(), header, header + kBlock);
    out.insert(out.end(), m.data.begin(), m.data.end());
    out.resize(out.size() + (kBlock - m.data.size() % kBlock) % kBlock, 0);
  }
  out.resize(out.size() + 2 * kBlock, 0);
  return out;
}

std::vector<Member> read(std::span<const std::uint8_t> archive) {
  std::vector<Member> members;
  std::size_t pos = 0;
  while (true) {
    if (pos + kBlock > archive.size()) throw FormatError("tar archive truncated (no end marker)");
    const auto* header = archive.data() + pos;
    if (std::all_of(header, header + kBlock, [](std::uint8_t b) { return b == 0; })) {
      return members;
    }
    if (get_octal(header + 148, 8) != header_checksum(header)) {
      throw FormatError(fmt::format("tar header checksum mismatch at offset {}", pos));
    }
    const auto size = get_octal(header + 124, 12);
    const char type = static_cast<char>(header[156]);
    pos += kBlock;
    if (pos + size > archive.size()) throw FormatError("tar member truncated");
    if (type == '0' || type == 0) {
      Member m;
      const auto* name_end = std::find(header, header + 100, 0);
      m.name.assign(header, name_end);
      if (std::memcmp(header + 257, "ustar", 5) == 0 && header[345] != 0) {
        const auto* prefix_end = std::find(header + 345, header + 500, 0);
        m.name = std::string(header + 345, prefix_end) + "/" + m.name;
      }
      m.mtime_s = static_cast<std::int64_t>(get_octal(header + 136, 12));
      m.data.assign(archive.begin() + static_cast<std::ptrdiff_t>(pos),
                    archive.begin() + static_cast<std::ptrdiff_t>(pos + size));
      members.push_back(std::move(m));
    }
    pos += size + (kBlock - size % kBlock) % kBlock;
  }
}

}  // namespace noisenet::tar
