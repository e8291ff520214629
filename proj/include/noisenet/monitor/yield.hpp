#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "noisenet/common/time.hpp"
#include "noisenet/ingest/store.hpp"

namespace noisenet::monitor {

inline constexpr int kMinutesPerHour = 60;

/// 100 * readable / 60.
double yield_pct(std::size_t readable_files);

/// Readable minute-files per sensor and hour, from one pass over the store.
/// A file counts when its tar parses and both CSVs have full row counts;
/// index-only stubs (simulated payloads) count as readable.
struct YieldIndex {
  std::map<std::string, std::map<Timestamp, std::size_t>> readable;
  std::map<std::string, std::map<Timestamp, std::size_t>> corrupt;

  std::size_t readable_in(const std::string& sensor, Timestamp hour) const;
  double yield(const std::string& sensor, Timestamp hour) const { return yield_pct(readable_in(sensor, hour)); }
};

/// Only the listed sensors when given.
YieldIndex scan_store(const ingest::Store& store, const std::optional<std::set<std::string>>& sensors = std::nullopt);

/// Yield of one sensor-hour; a missing day is 0%.
double compute_yield(const ingest::Store& store, const std::string& sensor_id, Timestamp hour);

struct YieldMatrix {
  /// Ordered by ascending total.
  std::vector<std::string> sensors;
  std::vector<Timestamp> hours;
  /// cells[i][j]: sensors[i] at hours[j].
  std::vector<std::vector<double>> cells;
  std::vector<double> totals;
  double mean = 0;
  double median = 0;
  double min = 0;
  double max = 0;
};

/// Hours are [floor_hour(from), to) in one-hour steps.
YieldMatrix yield_matrix(const YieldIndex& index, const std::vector<std::string>& sensors, Timestamp from,
                         Timestamp to);
YieldMatrix yield_matrix(const ingest::Store& store, const std::vector<std::string>& sensors, Timestamp from,
                         Timestamp to);

/// "sensor_id,total,<hour ms>..." then one row per sensor.
std::string yield_matrix_csv(const YieldMatrix& m);
/// {"sensors", "hours", "min", "max", "mean", "median", "per_sensor": {...}}
std::string yield_summary_json(const YieldMatrix& m);
/// Reads a matrix written by yield_matrix_csv (summary statistics recomputed).
YieldMatrix parse_yield_matrix_csv(std::string_view text);

}  // namespace noisenet::monitor
