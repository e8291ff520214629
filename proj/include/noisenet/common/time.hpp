#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <string_view>

namespace noisenet {

using Millis = std::chrono::milliseconds;
/// UTC instant with millisecond resolution.
using Timestamp = std::chrono::sys_time<Millis>;

constexpr Millis kSecond{1000};
constexpr Millis kMinute{60 * 1000};
constexpr Millis kHour{60 * 60 * 1000};
constexpr Millis kDay{24 * 60 * 60 * 1000};

constexpr std::int64_t to_unix_ms(Timestamp t) { return t.time_since_epoch().count(); }
constexpr Timestamp from_unix_ms(std::int64_t ms) { return Timestamp{Millis{ms}}; }

/// "YYYY-MM-DD" of the UTC day containing t.
std::string utc_date(Timestamp t);

/// "YYYY-MM-DDTHH:MM:SSZ".
std::string iso8601(Timestamp t);

/// Accepts "YYYY-MM-DD", "YYYY-MM-DDTHH:MM:SSZ" (the trailing Z is optional).
Timestamp parse_iso8601(std::string_view text);

/// Accepts "<n>ms", "<n>s", "<n>m", "<n>h", "<n>d"; n may be fractional.
Millis parse_duration(std::string_view text);

/// Start of the hour containing t.
inline Timestamp floor_hour(Timestamp t) { return std::chrono::floor<std::chrono::hours>(t); }
inline Timestamp floor_day(Timestamp t) { return std::chrono::floor<std::chrono::days>(t); }

}  // namespace noisenet
