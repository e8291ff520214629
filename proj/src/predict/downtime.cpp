#include "noisenet/predict/downtime.hpp"

#include "noisenet/common/errors.hpp"

namespace noisenet::predict {

std::vector<DowntimeInterval> detect_downtime(const std::string& sensor_id, const std::vector<Timestamp>& hours,
                                              const std::vector<double>& yields, double threshold_hours) {
  if (hours.size() != yields.size()) throw DomainError("hours and yields differ in length");
  std::vector<DowntimeInterval> out;
  for (std::size_t i = 0; i < yields.size();) {
    if (yields[i] != 0.0) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < yields.size() && yields[j] == 0.0) ++j;
    DowntimeInterval d{sensor_id, hours[i], hours[j - 1] + kHour, false};
    d.eligible = d.hours() > threshold_hours;
    out.push_back(std::move(d));
    i = j;
  }
  return out;
}

std::vector<DowntimeInterval> detect_downtime(const monitor::YieldMatrix& matrix, double threshold_hours) {
  std::vector<DowntimeInterval> out;
  for (std::size_t s = 0; s < matrix.sensors.size(); ++s) {
    for (auto& d : detect_downtime(matrix.sensors[s], matrix.hours, matrix.cells[s], threshold_hours)) {
      out.push_back(std::move(d));
    }
  }
  return out;
}

}  // namespace noisenet::predict
