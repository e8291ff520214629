#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "noisenet/node/telemetry.hpp"

namespace noisenet::monitor {

enum class Comparator { Greater, GreaterEqual, Less, LessEqual };

struct AlertRule {
  std::string name;
  std::string metric;
  Comparator comparator = Comparator::Greater;
  double threshold = 0;
  Millis sustain{};
  /// A silence longer than this restarts the sustain timer.
  Millis max_gap = std::chrono::minutes(1);
};

/// "<metric> <op> <threshold> for <duration>", e.g. "ram_usage_pct > 25 for 10m".
/// Throws ConfigError for an unknown metric, bad operator or nonpositive sustain.
AlertRule parse_alert_rule(std::string_view text, std::string name = {});
void validate_rule(const AlertRule& rule);

/// RAM > 25% for 10 min, CPU > 90% for 5 min, /tmp >= 90% for 10 min,
/// data partition >= 95% for 1 min.
std::vector<AlertRule> default_alert_rules();

struct AlertEvent {
  std::string node_id;
  std::string rule;
  std::string metric;
  Timestamp breach_start{};
  Timestamp fired_at{};
  double value = 0;

  std::string to_json() const;
  bool operator==(const AlertEvent&) const = default;
};

/// Streaming evaluation, one breach episode -> at most one alert. An episode
/// ends at a non-breaching sample or a silence longer than max_gap.
class AlertEngine {
 public:
  explicit AlertEngine(std::vector<AlertRule> rules);

  /// Records of one node must arrive in time order.
  std::vector<AlertEvent> feed(const node::TelemetryRecord& record);
  const std::vector<AlertRule>& rules() const { return rules_; }

 private:
  struct State {
    std::optional<Timestamp> breach_start;
    std::optional<Timestamp> last_seen;
    bool fired = false;
  };
  std::vector<AlertRule> rules_;
  std::vector<std::size_t> metric_index_;
  std::map<std::string, std::vector<State>> state_;
};

std::vector<AlertEvent> evaluate_alerts(const std::vector<node::TelemetryRecord>& stream,
                                        const std::vector<AlertRule>& rules);

}  // namespace noisenet::monitor
