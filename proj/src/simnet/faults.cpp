#include "noisenet/simnet/faults.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include "noisenet/common/errors.hpp"

namespace noisenet::simnet {

namespace {
constexpr std::pair<FaultKind, std::string_view> kNames[] = {
    {FaultKind::WifiDegradation, "wifi_degradation"}, {FaultKind::ApOutage, "ap_outage"},
    {FaultKind::PowerFailure, "power_failure"},       {FaultKind::TmpLeak, "tmp_leak"},
    {FaultKind::MemoryLeak, "memory_leak"},           {FaultKind::ScriptCrash, "script_crash"},
    {FaultKind::ServerOutage, "server_outage"}};
}  // namespace

std::string_view fault_name(FaultKind kind) {
  for (const auto& [k, n] : kNames) {
    if (k == kind) return n;
  }
  return "?";
}

FaultKind parse_fault_kind(std::string_view name) {
  for (const auto& [k, n] : kNames) {
    if (n == name) return k;
  }
  throw DomainError(fmt::format("unknown fault kind '{}'", name));
}

double FaultSpec::param(const std::string& key, double fallback) const {
  const auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

std::string faults_to_json(const std::vector<FaultSpec>& faults) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& f : faults) {
    nlohmann::ordered_json j;
    j["kind"] = fault_name(f.kind);
    j["target"] = f.target;
    j["onset"] = iso8601(f.onset);
    j["onset_ms"] = to_unix_ms(f.onset);
    j["duration_ms"] = f.duration.count();
    j["params"] = nlohmann::ordered_json::object();
    for (const auto& [k, v] : f.params) j["params"][k] = v;
    arr.push_back(std::move(j));
  }
  return arr.dump(2);
}

std::vector<FaultSpec> faults_from_json(std::string_view text) {
  std::vector<FaultSpec> out;
  try {
    for (const auto& j : nlohmann::json::parse(text)) {
      FaultSpec f;
      f.kind = parse_fault_kind(j.at("kind").get<std::string>());
      f.target = j.at("target").get<std::string>();
      f.onset = from_unix_ms(j.at("onset_ms").get<std::int64_t>());
      f.duration = Millis{j.at("duration_ms").get<std::int64_t>()};
      for (const auto& [k, v] : j.at("params").items()) f.params[k] = v.get<double>();
      out.push_back(std::move(f));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(fmt::format("bad fault ledger: {}", e.what()));
  }
  return out;
}

namespace {

Millis draw(const DurationRange& r, Rng& rng) {
  if (r.max <= r.min) return r.min;
  const auto span = static_cast<std::uint64_t>((r.max - r.min).count());
  return r.min + Millis{static_cast<std::int64_t>(rng.below(span + 1))};
}

}  // namespace

std::vector<FaultSpec> generate_faults(const FaultGeneratorConfig& config, const std::vector<std::string>& node_ids,
                                       Timestamp start, Timestamp end, Rng& rng) {
  double total = 0;
  for (const auto& [k, w] : config.mix) {
    if (w < 0) throw DomainError("fault mix weights must be nonnegative");
    if (config.durations.count(k) == 0) {
      throw DomainError(fmt::format("no duration range for generated fault kind {}", fault_name(k)));
    }
    total += w;
  }
  std::vector<FaultSpec> out;
  if (total <= 0) return out;
  for (std::size_t i = 0; i < node_ids.size(); ++i) {
    Rng node_rng(derive_seed(rng(), i));
    Timestamp t = start + config.first_after;
    for (;;) {
      double pick = node_rng.uniform() * total;
      FaultKind kind = config.mix.begin()->first;
      for (const auto& [k, w] : config.mix) {
        kind = k;
        if (pick < w) break;
        pick -= w;
      }
      FaultSpec f;
      f.kind = kind;
      f.target = node_ids[i];
      f.onset = t;
      f.duration = draw(config.durations.at(kind), node_rng);
      if (const auto p = config.params.find(kind); p != config.params.end()) f.params = p->second;
      if (f.end() > end) break;
      out.push_back(f);
      t = f.end() + draw(config.gap, node_rng);
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const FaultSpec& a, const FaultSpec& b) { return a.onset < b.onset; });
  return out;
}

}  // namespace noisenet::simnet
