#include "noisenet/common/time.hpp"

#include <charconv>

#include <fmt/format.h>

#include "noisenet/common/errors.hpp"

namespace noisenet {

namespace {

int parse_fixed(std::string_view text, std::size_t pos, std::size_t len) {
  int value = 0;
  const auto* first = text.data() + pos;
  const auto [ptr, ec] = std::from_chars(first, first + len, value);
  if (ec != std::errc{} || ptr != first + len) {
    throw FormatError(fmt::format("bad timestamp '{}'", text));
  }
  return value;
}

}  // namespace

std::string utc_date(Timestamp t) {
  const std::chrono::year_month_day ymd{std::chrono::floor<std::chrono::days>(t)};
  return fmt::format("{:04d}-{:02d}-{:02d}", static_cast<int>(ymd.year()),
                     static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
}

std::string iso8601(Timestamp t) {
  const auto day = std::chrono::floor<std::chrono::days>(t);
  const std::chrono::hh_mm_ss hms{std::chrono::floor<std::chrono::seconds>(t - day)};
  return fmt::format("{}T{:02d}:{:02d}:{:02d}Z", utc_date(t), hms.hours().count(),
                     hms.minutes().count(), hms.seconds().count());
}

Timestamp parse_iso8601(std::string_view text) {
  if (text.size() < 10 || text[4] != '-' || text[7] != '-') {
    throw FormatError(fmt::format("bad timestamp '{}'", text));
  }
  const std::chrono::year_month_day ymd{std::chrono::year{parse_fixed(text, 0, 4)},
                                        std::chrono::month{static_cast<unsigned>(parse_fixed(text, 5, 2))},
                                        std::chrono::day{static_cast<unsigned>(parse_fixed(text, 8, 2))}};
  if (!ymd.ok()) throw FormatError(fmt::format("bad calendar date '{}'", text));
  Timestamp t{std::chrono::sys_days{ymd}};
  if (text.size() == 10) return t;
  if (text.size() < 19 || (text[10] != 'T' && text[10] != ' ') || text[13] != ':' || text[16] != ':') {
    throw FormatError(fmt::format("bad timestamp '{}'", text));
  }
  if (text.size() > 20 || (text.size() == 20 && text[19] != 'Z')) {
    throw FormatError(fmt::format("bad timestamp '{}'", text));
  }
  const int h = parse_fixed(text, 11, 2);
  const int m = parse_fixed(text, 14, 2);
  const int s = parse_fixed(text, 17, 2);
  if (h > 23 || m > 59 || s > 60) throw FormatError(fmt::format("bad time of day '{}'", text));
  return t + std::chrono::hours{h} + std::chrono::minutes{m} + std::chrono::seconds{s};
}

Millis parse_duration(std::string_view text) {
  std::size_t unit_pos = text.find_first_not_of("0123456789.");
  if (unit_pos == 0 || unit_pos == std::string_view::npos) {
    throw FormatError(fmt::format("duration '{}' needs a unit (ms, s, m, h, d)", text));
  }
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + unit_pos, value);
  if (ec != std::errc{} || ptr != text.data() + unit_pos) {
    throw FormatError(fmt::format("bad duration '{}'", text));
  }
  const auto unit = text.substr(unit_pos);
  double scale = 0.0;
  if (unit == "ms") scale = 1.0;
  else if (unit == "s") scale = 1e3;
  else if (unit == "m") scale = 60e3;
  else if (unit == "h") scale = 3600e3;
  else if (unit == "d") scale = 86400e3;
  else throw FormatError(fmt::format("unknown duration unit in '{}'", text));
  return Millis{static_cast<std::int64_t>(std::llround(value * scale))};
}

}  // namespace noisenet
