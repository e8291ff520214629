#include "noisenet/monitor/alerts.hpp"

#include <algorithm>

#include <fmt/format.h>
#include <json.hpp>

#include "noisenet/common/errors.hpp"
#include "noisenet/common/io.hpp"

namespace noisenet::monitor {

namespace {

std::optional<std::size_t> metric_position(std::string_view metric) {
  const auto& vars = node::kTelemetryVariables;
  const auto it = std::find(vars.begin(), vars.end(), metric);
  if (it == vars.end()) return std::nullopt;
  return static_cast<std::size_t>(it - vars.begin());
}

bool breaches(Comparator c, double v, double threshold) {
  switch (c) {
    case Comparator::Greater: return v > threshold;
    case Comparator::GreaterEqual: return v >= threshold;
    case Comparator::Less: return v < threshold;
    case Comparator::LessEqual: return v <= threshold;
  }
  return false;
}

}  // namespace

void validate_rule(const AlertRule& rule) {
  if (!metric_position(rule.metric)) throw ConfigError("metric", fmt::format("unknown metric '{}'", rule.metric));
  if (rule.sustain.count() <= 0) throw ConfigError("sustain", "sustain must be positive");
  if (rule.max_gap.count() <= 0) throw ConfigError("max_gap", "max_gap must be positive");
}

AlertRule parse_alert_rule(std::string_view text, std::string name) {
  std::vector<std::string_view> tok;
  for (auto t : split(text, ' ')) {
    if (!t.empty()) tok.push_back(t);
  }
  if (tok.size() != 5 || tok[3] != "for") {
    throw ConfigError("rule", fmt::format("expected '<metric> <op> <threshold> for <duration>', got '{}'", text));
  }
  AlertRule r;
  r.metric = std::string(tok[0]);
  if (tok[1] == ">") r.comparator = Comparator::Greater;
  else if (tok[1] == ">=") r.comparator = Comparator::GreaterEqual;
  else if (tok[1] == "<") r.comparator = Comparator::Less;
  else if (tok[1] == "<=") r.comparator = Comparator::LessEqual;
  else throw ConfigError("comparator", fmt::format("unknown operator '{}'", tok[1]));
  try {
    r.threshold = parse_double(tok[2]);
  } catch (const FormatError& e) {
    throw ConfigError("threshold", e.what());
  }
  try {
    r.sustain = parse_duration(tok[4]);
  } catch (const std::exception& e) {
    throw ConfigError("sustain", e.what());
  }
  r.name = name.empty() ? std::string(text) : std::move(name);
  validate_rule(r);
  return r;
}

std::vector<AlertRule> default_alert_rules() {
  return {parse_alert_rule("ram_usage_pct > 25 for 10m", "ram_high"),
          parse_alert_rule("cpu_load_1min_pct > 90 for 5m", "cpu_high"),
          parse_alert_rule("tmp_usage_pct >= 90 for 10m", "tmp_full"),
          parse_alert_rule("data_usage_pct >= 95 for 1m", "data_full")};
}

std::string AlertEvent::to_json() const {
  nlohmann::ordered_json j;
  j["node_id"] = node_id;
  j["rule"] = rule;
  j["metric"] = metric;
  j["breach_start_ms"] = to_unix_ms(breach_start);
  j["fired_at_ms"] = to_unix_ms(fired_at);
  j["fired_at"] = iso8601(fired_at);
  j["value"] = value;
  return j.dump();
}

AlertEngine::AlertEngine(std::vector<AlertRule> rules) : rules_(std::move(rules)) {
  for (const auto& r : rules_) {
    validate_rule(r);
    metric_index_.push_back(*metric_position(r.metric));
  }
}

std::vector<AlertEvent> AlertEngine::feed(const node::TelemetryRecord& record) {
  std::vector<AlertEvent> fired;
  auto& states = state_[record.node_id];
  states.resize(rules_.size());
  const auto values = node::telemetry_values(record);
  for (std::size_t i = 0; i < rules_.size(); ++i) {
    const auto& rule = rules_[i];
    auto& st = states[i];
    const double v = values[metric_index_[i]];
    const bool gap = st.last_seen && record.ts - *st.last_seen > rule.max_gap;
    st.last_seen = record.ts;
    if (!breaches(rule.comparator, v, rule.threshold)) {
      st.breach_start.reset();
      st.fired = false;
      continue;
    }
    if (!st.breach_start || gap) {
      st.breach_start = record.ts;
      st.fired = false;
    }
    if (!st.fired && record.ts - *st.breach_start >= rule.sustain) {
      st.fired = true;
      fired.push_back({record.node_id, rule.name, rule.metric, *st.breach_start, record.ts, v});
    }
  }
  return fired;
}

std::vector<AlertEvent> evaluate_alerts(const std::vector<node::TelemetryRecord>& stream,
                                        const std::vector<AlertRule>& rules) {
  std::vector<const node::TelemetryRecord*> order;
  order.reserve(stream.size());
  for (const auto& r : stream) order.push_back(&r);
  std::stable_sort(order.begin(), order.end(), [](const auto* a, const auto* b) { return a->ts < b->ts; });
  AlertEngine engine(rules);
  std::vector<AlertEvent> out;
  for (const auto* r : order) {
    for (auto& e : engine.feed(*r)) out.push_back(std::move(e));
  }
  return out;
}

}  // namespace noisenet::monitor
