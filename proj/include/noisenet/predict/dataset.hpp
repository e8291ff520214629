#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "noisenet/monitor/yield.hpp"
#include "noisenet/node/telemetry.hpp"
#include "noisenet/predict/downtime.hpp"

namespace noisenet::predict {

inline constexpr std::size_t kFeatures = node::kTelemetryVariables.size();
using Features = std::array<double, kFeatures>;

enum class Label : int { Stable = 0, Prefail = 1 };
std::string_view label_name(Label l);
Label parse_label(std::string_view s);

struct ExtractOptions {
  /// The prefail window is [downtime start - lead, downtime start - lead + 1 h).
  int lead_hours = 1;
  double downtime_threshold_hours = kDefaultDowntimeThresholdHours;
  /// Hours of 100% yield required on each side of a stable window.
  int stability_hours = 48;
};

struct WindowSpec {
  std::string sensor_id;
  Label label = Label::Stable;
  Timestamp t0{};
  bool operator==(const WindowSpec&) const = default;
};

/// Which hours become instances, decided from yields alone.
struct Selection {
  /// Sorted by (sensor, t0).
  std::vector<WindowSpec> windows;
  std::vector<DowntimeInterval> downtimes;
  std::map<std::string, std::size_t> prefail_per_sensor;
  std::map<std::string, std::size_t> stable_candidates;
  /// Prefail windows without enough stable candidates to match.
  std::map<std::string, std::size_t> shortfall;

  /// (sensor, hour) of every window, for a telemetry capture pass.
  std::set<std::pair<std::string, Timestamp>> capture_set() const;
};

/// All eligible prefail windows plus, per sensor, a seeded sample without
/// replacement of stable windows of the same size (or every candidate, with
/// the difference reported as shortfall).
Selection select_windows(const monitor::YieldMatrix& matrix, std::uint64_t seed, const ExtractOptions& options = {});

struct Instance {
  std::size_t id = 0;
  std::string sensor_id;
  Label label = Label::Stable;
  Timestamp t0{};
  /// Time-ordered. May be short or empty when telemetry did not arrive.
  std::vector<Timestamp> ts;
  std::vector<Features> rows;
};

struct Dataset {
  std::vector<Instance> instances;

  std::size_t count(Label l) const;
  std::size_t rows(Label l) const;
};

/// Bags telemetry into the selected windows; records may arrive in any order.
class RowCollector {
 public:
  explicit RowCollector(const Selection& selection);
  void add(const node::TelemetryRecord& record);
  Dataset finish();

 private:
  Dataset dataset_;
  std::map<std::pair<std::string, Timestamp>, std::size_t> slot_;
};

Dataset extract_instances(const monitor::YieldMatrix& matrix, const std::vector<node::TelemetryRecord>& telemetry,
                          std::uint64_t seed, const ExtractOptions& options = {});

/// instances.csv: instance_id,sensor_id,label,t0_ms,rows
/// rows.csv: instance_id,ts_ms,<ten telemetry variables>
void write_dataset(const std::filesystem::path& dir, const Dataset& dataset);
Dataset read_dataset(const std::filesystem::path& dir);

}  // namespace noisenet::predict
