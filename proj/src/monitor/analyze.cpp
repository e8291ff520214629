#include "noisenet/monitor/analyze.hpp"

#include <fstream>

#include <fmt/format.h>
#include <json.hpp>

#include "noisenet/acoustics/minute_file.hpp"
#include "noisenet/common/errors.hpp"
#include "noisenet/common/io.hpp"
#include "noisenet/monitor/ambient.hpp"

namespace fs = std::filesystem;

namespace noisenet::monitor {

namespace {

/// Slow A-weighted levels of every readable minute-file body, per sensor, in time order.
std::map<std::string, std::vector<LevelSample>> slow_levels(const ingest::Store& store,
                                                            const std::set<std::string>& sensors) {
  std::map<std::string, std::vector<LevelSample>> out;
  for (const auto& key : store.list_days(node::ItemKind::Spl)) {
    if (sensors.count(key.sensor_id) == 0) continue;
    const auto day = store.read_day(key, true);
    for (const auto& [file, body] : day.bodies) {
      try {
        const auto parsed = acoustics::parse_minute_file(body);
        auto& v = out[key.sensor_id];
        for (const auto& b : parsed.slow_blocks) v.push_back({b.time, b.level_a_db});
      } catch (const FormatError&) {
      }
    }
  }
  for (auto& [s, v] : out) {
    std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.ts < b.ts; });
  }
  return out;
}

}  // namespace

AnalyzeResult analyze_run(const fs::path& run_dir, const std::vector<AlertRule>& rules) {
  const auto manifest_path = run_dir / "manifest.json";
  if (!fs::exists(manifest_path)) throw IoError(manifest_path.string(), "no manifest");
  const auto manifest = nlohmann::json::parse(read_text(manifest_path));
  const auto start = from_unix_ms(manifest.at("start_ms").get<std::int64_t>());
  const auto end = from_unix_ms(manifest.at("end_ms").get<std::int64_t>());
  const auto nodes = manifest.at("nodes").get<std::vector<std::string>>();
  const std::set<std::string> node_set(nodes.begin(), nodes.end());

  AnalyzeResult result;
  const ingest::Store store(run_dir / "store");
  const auto index = scan_store(store, node_set);
  for (const auto& [s, hours] : index.corrupt) {
    for (const auto& [h, n] : hours) result.corrupt_files += n;
  }
  result.matrix = yield_matrix(index, nodes, start, end);
  write_text_atomic(run_dir / "yield_matrix.csv", yield_matrix_csv(result.matrix));
  write_text_atomic(run_dir / "yield_summary.json", yield_summary_json(result.matrix));

  std::string alerts;
  const auto telemetry = run_dir / "telemetry.csv";
  if (fs::exists(telemetry)) {
    AlertEngine engine(rules);
    std::ifstream in(telemetry, std::ios::binary);
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      if (header) {
        if (line != node::telemetry_csv_header()) throw FormatError(telemetry.string() + ": bad header");
        header = false;
        continue;
      }
      for (const auto& e : engine.feed(node::parse_csv_row(line))) {
        alerts += e.to_json() + "\n";
        ++result.alerts;
      }
    }
  }
  write_text_atomic(run_dir / "alerts.jsonl", alerts);

  std::string exceedance = "sensor_id,hour_ms,ambient_db,exceedance_pct\n";
  for (const auto& [sensor, samples] : slow_levels(store, node_set)) {
    std::set<Timestamp> hours;
    for (const auto& s : samples) hours.insert(floor_hour(s.ts));
    for (const auto h : hours) {
      double ambient = 0;
      try {
        ambient = ambient_level_at(samples, h + kHour);
      } catch (const UndefinedAmbient&) {
        continue;
      }
      fmt::format_to(std::back_inserter(exceedance), "{},{},{:.2f},{:.4f}\n", sensor, to_unix_ms(h), ambient,
                     exceedance_fraction(samples, h, ambient));
      ++result.exceedance_rows;
    }
  }
  write_text_atomic(run_dir / "exceedance.csv", exceedance);
  return result;
}

}  // namespace noisenet::monitor
