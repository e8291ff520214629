#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

#include "noisenet/common/time.hpp"

namespace noisenet::node {

inline constexpr Millis kTelemetryInterval = std::chrono::seconds(3);
inline constexpr double kHealthyTmpPct = 0.1;

struct TelemetryRecord {
  std::string node_id;
  Timestamp ts{};
  double cpu_load_1min_pct = 0;
  double cpu_load_15min_pct = 0;
  double cpu_temp_c = 0;
  double ram_usage_pct = 0;
  double wifi_signal_strength_pct = 0;
  double wifi_signal_quality_pct = 0;
  double data_usage_pct = 0;
  double tmp_usage_pct = 0;
  double varlog_usage_pct = 0;
  int running_processes = 0;

  bool operator==(const TelemetryRecord&) const = default;

  std::string to_json() const;
  static TelemetryRecord from_json(std::string_view text);
};

/// The ten status variables, in column order.
inline constexpr std::array<std::string_view, 10> kTelemetryVariables = {
    "cpu_load_1min_pct",        "cpu_load_15min_pct",      "cpu_temp_c",     "ram_usage_pct",
    "wifi_signal_strength_pct", "wifi_signal_quality_pct", "data_usage_pct", "tmp_usage_pct",
    "varlog_usage_pct",         "running_processes"};

std::array<double, 10> telemetry_values(const TelemetryRecord& r);

/// "node_id,ts_ms,<ten variables>"
std::string telemetry_csv_header();
std::string to_csv_row(const TelemetryRecord& r);
/// Throws FormatError.
TelemetryRecord parse_csv_row(std::string_view line);

/// What the node would report right now; the simulator drives these.
struct NodeVitals {
  bool powered = true;
  double cpu_load_1min_pct = 0;
  double cpu_load_15min_pct = 0;
  double cpu_temp_c = 0;
  double ram_usage_pct = 0;
  double wifi_signal_strength_pct = 0;
  double wifi_signal_quality_pct = 0;
  double data_usage_pct = 0;
  double tmp_usage_pct = kHealthyTmpPct;
  double varlog_usage_pct = 0;
  int running_processes = 0;
};

/// Snapshot of the vitals, percentages clamped to [0, 100] and every value
/// rounded to 0.01 so the CSV form is exact. Nothing when unpowered.
std::optional<TelemetryRecord> telemetry_tick(const std::string& node_id, Timestamp now, const NodeVitals& vitals);

}  // namespace noisenet::node
