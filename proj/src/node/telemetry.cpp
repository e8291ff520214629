#include "noisenet/node/telemetry.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>
#include <json.hpp>

#include "noisenet/common/errors.hpp"
#include "noisenet/common/io.hpp"

namespace noisenet::node {

namespace {

double round2(double v) { return std::round(v * 100.0) / 100.0; }
double pct(double v) { return round2(std::clamp(v, 0.0, 100.0)); }

std::array<double*, 9> real_fields(TelemetryRecord& r) {
  return {&r.cpu_load_1min_pct,        &r.cpu_load_15min_pct,      &r.cpu_temp_c,     &r.ram_usage_pct,
          &r.wifi_signal_strength_pct, &r.wifi_signal_quality_pct, &r.data_usage_pct, &r.tmp_usage_pct,
          &r.varlog_usage_pct};
}

}  // namespace

std::array<double, 10> telemetry_values(const TelemetryRecord& r) {
  return {r.cpu_load_1min_pct,        r.cpu_load_15min_pct,      r.cpu_temp_c,     r.ram_usage_pct,
          r.wifi_signal_strength_pct, r.wifi_signal_quality_pct, r.data_usage_pct, r.tmp_usage_pct,
          r.varlog_usage_pct,         static_cast<double>(r.running_processes)};
}

std::string TelemetryRecord::to_json() const {
  nlohmann::ordered_json j;
  j["node_id"] = node_id;
  j["ts"] = to_unix_ms(ts);
  const auto values = telemetry_values(*this);
  for (std::size_t i = 0; i + 1 < values.size(); ++i) j[std::string(kTelemetryVariables[i])] = values[i];
  j["running_processes"] = running_processes;
  return j.dump();
}

TelemetryRecord TelemetryRecord::from_json(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    TelemetryRecord r;
    r.node_id = j.at("node_id").get<std::string>();
    r.ts = from_unix_ms(j.at("ts").get<std::int64_t>());
    auto fields = real_fields(r);
    for (std::size_t i = 0; i < fields.size(); ++i) *fields[i] = j.at(std::string(kTelemetryVariables[i])).get<double>();
    r.running_processes = j.at("running_processes").get<int>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(fmt::format("bad telemetry JSON: {}", e.what()));
  }
}

std::string telemetry_csv_header() {
  std::string h = "node_id,ts_ms";
  for (auto v : kTelemetryVariables) {
    h += ',';
    h += v;
  }
  return h;
}

std::string to_csv_row(const TelemetryRecord& r) {
  return fmt::format("{},{},{:.2f},{:.2f},{:.2f},{:.2f},{:.2f},{:.2f},{:.2f},{:.2f},{:.2f},{}", r.node_id,
                     to_unix_ms(r.ts), r.cpu_load_1min_pct, r.cpu_load_15min_pct, r.cpu_temp_c, r.ram_usage_pct,
                     r.wifi_signal_strength_pct, r.wifi_signal_quality_pct, r.data_usage_pct, r.tmp_usage_pct,
                     r.varlog_usage_pct, r.running_processes);
}

TelemetryRecord parse_csv_row(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  const auto cols = split(line, ',');
  if (cols.size() != 12) throw FormatError(fmt::format("telemetry row has {} columns, expected 12", cols.size()));
  TelemetryRecord r;
  r.node_id = std::string(cols[0]);
  r.ts = from_unix_ms(parse_int(cols[1]));
  auto fields = real_fields(r);
  for (std::size_t i = 0; i < fields.size(); ++i) *fields[i] = parse_double(cols[i + 2]);
  r.running_processes = static_cast<int>(parse_int(cols[11]));
  return r;
}

std::optional<TelemetryRecord> telemetry_tick(const std::string& node_id, Timestamp now, const NodeVitals& v) {
  if (!v.powered) return std::nullopt;
  TelemetryRecord r;
  r.node_id = node_id;
  r.ts = now;
  r.cpu_load_1min_pct = pct(v.cpu_load_1min_pct);
  r.cpu_load_15min_pct = pct(v.cpu_load_15min_pct);
  r.cpu_temp_c = round2(v.cpu_temp_c);
  r.ram_usage_pct = pct(v.ram_usage_pct);
  r.wifi_signal_strength_pct = pct(v.wifi_signal_strength_pct);
  r.wifi_signal_quality_pct = pct(v.wifi_signal_quality_pct);
  r.data_usage_pct = pct(v.data_usage_pct);
  r.tmp_usage_pct = pct(v.tmp_usage_pct);
  r.varlog_usage_pct = pct(v.varlog_usage_pct);
  r.running_processes = std::max(0, v.running_processes);
  return r;
}

}  // namespace noisenet::node
