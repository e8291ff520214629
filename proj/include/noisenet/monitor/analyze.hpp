#pragma once

#include <filesystem>
#include <vector>

#include "noisenet/monitor/alerts.hpp"
#include "noisenet/monitor/yield.hpp"

namespace noisenet::monitor {

struct AnalyzeResult {
  YieldMatrix matrix;
  std::size_t alerts = 0;
  std::size_t exceedance_rows = 0;
  std::size_t corrupt_files = 0;
};

/// Reads <run_dir>/manifest.json, the store and telemetry.csv and writes
/// yield_matrix.csv, yield_summary.json, alerts.jsonl and exceedance.csv.
/// Exceedance rows exist only for sensor-hours whose minute files carry levels.
AnalyzeResult analyze_run(const std::filesystem::path& run_dir,
                          const std::vector<AlertRule>& rules = default_alert_rules());

}  // namespace noisenet::monitor
