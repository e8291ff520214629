#include "noisenet/monitor/yield.hpp"

#include <algorithm>
#include <filesystem>

#include <fmt/format.h>
#include <json.hpp>

#include "noisenet/acoustics/minute_file.hpp"
#include "noisenet/common/errors.hpp"
#include "noisenet/common/io.hpp"

namespace noisenet::monitor {

namespace {

/// Minute start encoded in "<sensor>_<unix_s>.tar", if the name belongs to sensor.
std::optional<Timestamp> minute_of(const std::string& file, const std::string& sensor) {
  const auto us = file.rfind('_');
  if (us == std::string::npos || file.size() < 5 || file.compare(file.size() - 4, 4, ".tar") != 0) return std::nullopt;
  if (file.compare(0, us, sensor) != 0 || us != sensor.size()) return std::nullopt;
  try {
    const auto s = parse_int(std::string_view(file).substr(us + 1, file.size() - 4 - us - 1));
    if (s % 60 != 0) return std::nullopt;
    return from_unix_ms(s * 1000);
  } catch (const FormatError&) {
    return std::nullopt;
  }
}

void scan_day(const ingest::Store& store, const ingest::DayKey& key, YieldIndex& out) {
  const auto day = store.read_day(key, true);
  for (const auto& r : day.rows) {
    const auto minute = minute_of(r.file, key.sensor_id);
    if (!minute) continue;
    bool ok = r.stub;
    if (!ok) {
      const auto it = day.bodies.find(r.file);
      ok = it != day.bodies.end() && acoustics::is_readable_minute_file(it->second);
    }
    auto& bucket = ok ? out.readable : out.corrupt;
    ++bucket[key.sensor_id][floor_hour(*minute)];
  }
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

void summarize(YieldMatrix& m) {
  m.mean = mean_of(m.totals);
  m.median = median_of(m.totals);
  m.min = m.totals.empty() ? 0.0 : *std::min_element(m.totals.begin(), m.totals.end());
  m.max = m.totals.empty() ? 0.0 : *std::max_element(m.totals.begin(), m.totals.end());
}

}  // namespace

double yield_pct(std::size_t readable_files) {
  return 100.0 * static_cast<double>(std::min<std::size_t>(readable_files, kMinutesPerHour)) / kMinutesPerHour;
}

std::size_t YieldIndex::readable_in(const std::string& sensor, Timestamp hour) const {
  const auto s = readable.find(sensor);
  if (s == readable.end()) return 0;
  const auto h = s->second.find(floor_hour(hour));
  return h == s->second.end() ? 0 : h->second;
}

YieldIndex scan_store(const ingest::Store& store, const std::optional<std::set<std::string>>& sensors) {
  YieldIndex out;
  for (const auto& key : store.list_days(node::ItemKind::Spl)) {
    if (sensors && sensors->count(key.sensor_id) == 0) continue;
    scan_day(store, key, out);
  }
  return out;
}

double compute_yield(const ingest::Store& store, const std::string& sensor_id, Timestamp hour) {
  const auto key = ingest::Store::day_of(node::ItemKind::Spl, sensor_id, hour);
  if (!std::filesystem::exists(store.day_dir(key)) && !std::filesystem::exists(store.day_tar(key))) return 0.0;
  YieldIndex index;
  scan_day(store, key, index);
  return index.yield(sensor_id, hour);
}

YieldMatrix yield_matrix(const YieldIndex& index, const std::vector<std::string>& sensors, Timestamp from,
                         Timestamp to) {
  YieldMatrix m;
  for (auto h = floor_hour(from); h < to; h += kHour) m.hours.push_back(h);
  std::vector<std::pair<double, std::string>> order;
  std::map<std::string, std::vector<double>> rows;
  for (const auto& s : sensors) {
    auto& row = rows[s];
    for (const auto h : m.hours) row.push_back(index.yield(s, h));
    order.emplace_back(mean_of(row), s);
  }
  std::sort(order.begin(), order.end());
  for (auto& [total, s] : order) {
    m.sensors.push_back(s);
    m.totals.push_back(total);
    m.cells.push_back(std::move(rows[s]));
  }
  summarize(m);
  return m;
}

YieldMatrix yield_matrix(const ingest::Store& store, const std::vector<std::string>& sensors, Timestamp from,
                         Timestamp to) {
  return yield_matrix(scan_store(store, std::set<std::string>(sensors.begin(), sensors.end())), sensors, from, to);
}

std::string yield_matrix_csv(const YieldMatrix& m) {
  std::string out = "sensor_id,total";
  for (const auto h : m.hours) fmt::format_to(std::back_inserter(out), ",{}", to_unix_ms(h));
  out.push_back('\n');
  for (std::size_t i = 0; i < m.sensors.size(); ++i) {
    fmt::format_to(std::back_inserter(out), "{},{}", m.sensors[i], m.totals[i]);
    for (double v : m.cells[i]) fmt::format_to(std::back_inserter(out), ",{}", v);
    out.push_back('\n');
  }
  return out;
}

std::string yield_summary_json(const YieldMatrix& m) {
  nlohmann::ordered_json j;
  j["sensors"] = m.sensors.size();
  j["hours"] = m.hours.size();
  j["min"] = m.min;
  j["max"] = m.max;
  j["mean"] = m.mean;
  j["median"] = m.median;
  j["per_sensor"] = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < m.sensors.size(); ++i) j["per_sensor"][m.sensors[i]] = m.totals[i];
  return j.dump(2) + "\n";
}

YieldMatrix parse_yield_matrix_csv(std::string_view text) {
  YieldMatrix m;
  const auto lines = split(text, '\n');
  if (lines.empty()) throw FormatError("empty yield matrix");
  const auto header = split(lines[0], ',');
  if (header.size() < 2 || header[0] != "sensor_id" || header[1] != "total") throw FormatError("bad yield matrix header");
  for (std::size_t k = 2; k < header.size(); ++k) m.hours.push_back(from_unix_ms(parse_int(header[k])));
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto cols = split(lines[i], ',');
    if (cols.size() != header.size()) throw FormatError(fmt::format("yield matrix row {} has {} columns", i, cols.size()));
    m.sensors.emplace_back(cols[0]);
    m.totals.push_back(parse_double(cols[1]));
    std::vector<double> row;
    for (std::size_t k = 2; k < cols.size(); ++k) row.push_back(parse_double(cols[k]));
    m.cells.push_back(std::move(row));
  }
  summarize(m);
  return m;
}

}  // namespace noisenet::monitor
