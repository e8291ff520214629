#pragma once

#include <string>
#include <vector>

#include "noisenet/common/time.hpp"
#include "noisenet/monitor/yield.hpp"

namespace noisenet::predict {

inline constexpr double kDefaultDowntimeThresholdHours = 6.0;

/// A maximal run of 0% yield hours, [start, end).
struct DowntimeInterval {
  std::string sensor_id;
  Timestamp start{};
  Timestamp end{};
  /// Strictly longer than the threshold.
  bool eligible = false;

  double hours() const { return std::chrono::duration<double, std::ratio<3600>>(end - start).count(); }
  bool operator==(const DowntimeInterval&) const = default;
};

/// hours[i] is the start of the hour whose yield is yields[i]; hours are consecutive.
std::vector<DowntimeInterval> detect_downtime(const std::string& sensor_id, const std::vector<Timestamp>& hours,
                                              const std::vector<double>& yields,
                                              double threshold_hours = kDefaultDowntimeThresholdHours);

/// Every sensor of the matrix, in matrix order.
std::vector<DowntimeInterval> detect_downtime(const monitor::YieldMatrix& matrix,
                                              double threshold_hours = kDefaultDowntimeThresholdHours);

}  // namespace noisenet::predict
