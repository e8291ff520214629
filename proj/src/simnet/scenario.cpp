#include "noisenet/simnet/scenario.hpp"

#include <cmath>
#include <set>

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include "noisenet/common/errors.hpp"
#include "noisenet/common/io.hpp"

namespace noisenet::simnet {

namespace {

using Path = std::string;

Path join(const Path& base, const std::string& key) { return base.empty() ? key : base + "." + key; }
Path index(const Path& base, std::size_t i) { return fmt::format("{}[{}]", base, i); }

std::string scalar(const YAML::Node& n, const Path& path) {
  if (!n.IsScalar()) throw ConfigError(path, "expected a scalar");
  return n.Scalar();
}

double number(const YAML::Node& n, const Path& path) {
  const auto s = scalar(n, path);
  try {
    return parse_double(s);
  } catch (const FormatError&) {
    throw ConfigError(path, fmt::format("expected a number, got '{}'", s));
  }
}

double number_in(const YAML::Node& n, const Path& path, double lo, double hi) {
  const double v = number(n, path);
  if (!(v >= lo && v <= hi)) throw ConfigError(path, fmt::format("must be in [{}, {}]", lo, hi));
  return v;
}

std::uint64_t count(const YAML::Node& n, const Path& path) {
  const double v = number(n, path);
  if (!(v >= 0) || v != std::floor(v) || v > 1.8e19) throw ConfigError(path, "expected a nonnegative integer");
  return static_cast<std::uint64_t>(v);
}

bool boolean(const YAML::Node& n, const Path& path) {
  const auto s = scalar(n, path);
  if (s == "true" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "no" || s == "off") return false;
  throw ConfigError(path, fmt::format("expected a boolean, got '{}'", s));
}

Millis duration(const YAML::Node& n, const Path& path) {
  const auto s = scalar(n, path);
  try {
    return parse_duration(s);
  } catch (const std::exception&) {
    throw ConfigError(path, fmt::format("expected a duration like 90s, 15m, 6h or 7d, got '{}'", s));
  }
}

Timestamp timestamp(const YAML::Node& n, const Path& path) {
  const auto s = scalar(n, path);
  try {
    return parse_iso8601(s);
  } catch (const std::exception&) {
    throw ConfigError(path, fmt::format("expected an ISO-8601 UTC time, got '{}'", s));
  }
}

/// Absolute ISO time, or an offset from the scenario start.
Timestamp onset_time(const YAML::Node& n, const Path& path, Timestamp start) {
  const auto s = scalar(n, path);
  try {
    return start + parse_duration(s);
  } catch (const std::exception&) {
    return timestamp(n, path);
  }
}

std::pair<double, double> range(const YAML::Node& n, const Path& path, double lo, double hi) {
  if (n.IsSequence()) {
    if (n.size() != 2) throw ConfigError(path, "expected [low, high]");
    const double a = number_in(n[0], index(path, 0), lo, hi);
    const double b = number_in(n[1], index(path, 1), lo, hi);
    if (b < a) throw ConfigError(path, "high below low");
    return {a, b};
  }
  const double v = number_in(n, path, lo, hi);
  return {v, v};
}

DurationRange duration_range(const YAML::Node& n, const Path& path) {
  if (!n.IsSequence() || n.size() != 2) throw ConfigError(path, "expected [min, max] durations");
  DurationRange r{duration(n[0], index(path, 0)), duration(n[1], index(path, 1))};
  if (r.min <= Millis::zero()) throw ConfigError(index(path, 0), "must be positive");
  if (r.max < r.min) throw ConfigError(path, "max below min");
  return r;
}

void reject_unknown(const YAML::Node& n, const Path& path, std::initializer_list<const char*> known) {
  if (!n.IsMap()) throw ConfigError(path.empty() ? "<root>" : path, "expected a mapping");
  for (const auto& kv : n) {
    const auto key = kv.first.Scalar();
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw ConfigError(join(path, key), "unknown field");
  }
}

std::map<std::string, double> params_map(const YAML::Node& n, const Path& path) {
  std::map<std::string, double> out;
  if (!n) return out;
  if (!n.IsMap()) throw ConfigError(path, "expected a mapping of numbers");
  for (const auto& kv : n) {
    const auto key = kv.first.Scalar();
    const auto p = join(path, key);
    if (kv.second.IsScalar() && (kv.second.Scalar() == "true" || kv.second.Scalar() == "false")) {
      out[key] = boolean(kv.second, p) ? 1.0 : 0.0;
    } else if (kv.second.IsScalar()) {
      // Durations are accepted for convenience and stored in hours.
      const auto s = kv.second.Scalar();
      if (!s.empty() && std::isalpha(static_cast<unsigned char>(s.back()))) {
        out[key] = std::chrono::duration<double, std::ratio<3600>>(duration(kv.second, p)).count();
      } else {
        out[key] = number(kv.second, p);
      }
    } else {
      throw ConfigError(p, "expected a number");
    }
  }
  return out;
}

FaultKind fault_kind(const YAML::Node& n, const Path& path) {
  const auto s = scalar(n, path);
  try {
    return parse_fault_kind(s);
  } catch (const DomainError& e) {
    throw ConfigError(path, e.what());
  }
}

void parse_nodes(const YAML::Node& n, ScenarioConfig& c) {
  const Path path = "nodes";
  if (!n) throw ConfigError(path, "required");
  if (n.IsSequence()) {
    for (std::size_t i = 0; i < n.size(); ++i) {
      const auto p = index(path, i);
      reject_unknown(n[i], p, {"id", "wifi_strength", "wifi_quality"});
      NodeSpec s;
      if (!n[i]["id"]) throw ConfigError(join(p, "id"), "required");
      s.id = scalar(n[i]["id"], join(p, "id"));
      if (n[i]["wifi_strength"]) std::tie(s.strength_lo, s.strength_hi) = range(n[i]["wifi_strength"], join(p, "wifi_strength"), 0, 100);
      if (n[i]["wifi_quality"]) std::tie(s.quality_lo, s.quality_hi) = range(n[i]["wifi_quality"], join(p, "wifi_quality"), 0, 100);
      c.nodes.push_back(s);
    }
    return;
  }
  reject_unknown(n, path, {"count", "prefix", "wifi_strength", "wifi_quality"});
  if (!n["count"]) throw ConfigError(join(path, "count"), "required");
  const auto k = count(n["count"], join(path, "count"));
  const std::string prefix = n["prefix"] ? scalar(n["prefix"], join(path, "prefix")) : "N";
  NodeSpec proto;
  if (n["wifi_strength"]) std::tie(proto.strength_lo, proto.strength_hi) = range(n["wifi_strength"], join(path, "wifi_strength"), 0, 100);
  if (n["wifi_quality"]) std::tie(proto.quality_lo, proto.quality_hi) = range(n["wifi_quality"], join(path, "wifi_quality"), 0, 100);
  const int width = k >= 100 ? 3 : 2;
  for (std::uint64_t i = 1; i <= k; ++i) {
    NodeSpec s = proto;
    s.id = fmt::format("{}{:0{}}", prefix, i, width);
    c.nodes.push_back(s);
  }
}

FaultGeneratorConfig parse_generator(const YAML::Node& n) {
  const Path path = "fault_generator";
  reject_unknown(n, path, {"first_after", "gap", "mix", "durations", "params"});
  FaultGeneratorConfig g;
  if (n["first_after"]) g.first_after = duration(n["first_after"], join(path, "first_after"));
  if (n["gap"]) g.gap = duration_range(n["gap"], join(path, "gap"));
  if (!n["mix"] || !n["mix"].IsMap()) throw ConfigError(join(path, "mix"), "required mapping of kind: weight");
  for (const auto& kv : n["mix"]) {
    const auto p = join(join(path, "mix"), kv.first.Scalar());
    g.mix[fault_kind(kv.first, p)] = number_in(kv.second, p, 0, 1e9);
  }
  if (n["durations"]) {
    for (const auto& kv : n["durations"]) {
      const auto p = join(join(path, "durations"), kv.first.Scalar());
      g.durations[fault_kind(kv.first, p)] = duration_range(kv.second, p);
    }
  }
  if (n["params"]) {
    for (const auto& kv : n["params"]) {
      const auto p = join(join(path, "params"), kv.first.Scalar());
      g.params[fault_kind(kv.first, p)] = params_map(kv.second, p);
    }
  }
  for (const auto& [k, w] : g.mix) {
    if (w > 0 && g.durations.count(k) == 0) {
      throw ConfigError(join(join(path, "durations"), std::string(fault_name(k))), "required for a kind in the mix");
    }
    if (k == FaultKind::ServerOutage && w > 0) {
      throw ConfigError(join(join(path, "mix"), "server_outage"), "server outages cannot be generated per node");
    }
  }
  return g;
}

}  // namespace

ScenarioConfig parse_scenario(const std::string& yaml_text) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::Exception& e) {
    throw ConfigError("<root>", fmt::format("YAML syntax error at line {}: {}", e.mark.line + 1, e.msg));
  }
  reject_unknown(root, "", {"name", "seed", "start", "horizon", "servers", "nodes", "link", "node", "store",
                            "telemetry", "faults", "fault_generator"});
  ScenarioConfig c;
  if (root["name"]) c.name = scalar(root["name"], "name");
  if (root["seed"]) c.seed = count(root["seed"], "seed");
  if (!root["start"]) throw ConfigError("start", "required");
  c.start = timestamp(root["start"], "start");
  if (!root["horizon"]) throw ConfigError("horizon", "required");
  c.horizon = duration(root["horizon"], "horizon");
  if (root["servers"]) {
    const auto s = root["servers"];
    if (!s.IsSequence()) throw ConfigError("servers", "expected a list of server ids");
    c.servers.clear();
    for (std::size_t i = 0; i < s.size(); ++i) c.servers.push_back(scalar(s[i], index("servers", i)));
  }
  parse_nodes(root["nodes"], c);

  if (const auto l = root["link"]) {
    reject_unknown(l, "link", {"q0", "s", "disconnect_quality", "uplink_bytes_per_s", "ack_loss_prob", "reversion",
                               "noise_sd"});
    if (l["q0"]) c.link.params.q0 = number_in(l["q0"], "link.q0", 0, 100);
    if (l["s"]) c.link.params.s = number_in(l["s"], "link.s", 1e-6, 1e6);
    if (l["disconnect_quality"]) c.link.params.disconnect_quality = number_in(l["disconnect_quality"], "link.disconnect_quality", 0, 100);
    if (l["uplink_bytes_per_s"]) c.link.uplink_bytes_per_s = number_in(l["uplink_bytes_per_s"], "link.uplink_bytes_per_s", 1, 1e12);
    if (l["ack_loss_prob"]) c.link.ack_loss_prob = number_in(l["ack_loss_prob"], "link.ack_loss_prob", 0, 1);
    if (l["reversion"]) c.link.reversion = duration(l["reversion"], "link.reversion");
    if (l["noise_sd"]) c.link.noise_sd = number_in(l["noise_sd"], "link.noise_sd", 0, 100);
  }
  if (const auto n = root["node"]) {
    reject_unknown(n, "node", {"cache_capacity_bytes", "spl_minute_bytes", "audio_snippet_bytes", "status_bytes",
                               "snippet_gap_min", "snippet_gap_max", "tmp_leak_hours"});
    if (n["cache_capacity_bytes"]) c.node.cache_capacity_bytes = count(n["cache_capacity_bytes"], "node.cache_capacity_bytes");
    if (n["spl_minute_bytes"]) c.node.spl_minute_bytes = count(n["spl_minute_bytes"], "node.spl_minute_bytes");
    if (n["audio_snippet_bytes"]) c.node.audio_snippet_bytes = count(n["audio_snippet_bytes"], "node.audio_snippet_bytes");
    if (n["status_bytes"]) c.node.status_bytes = count(n["status_bytes"], "node.status_bytes");
    if (n["snippet_gap_min"]) c.node.snippet_gap_min = duration(n["snippet_gap_min"], "node.snippet_gap_min");
    if (n["snippet_gap_max"]) c.node.snippet_gap_max = duration(n["snippet_gap_max"], "node.snippet_gap_max");
    if (n["tmp_leak_hours"]) c.node.tmp_leak_hours = number_in(n["tmp_leak_hours"], "node.tmp_leak_hours", 1e-3, 1e6);
  }
  if (const auto s = root["store"]) {
    reject_unknown(s, "store", {"payload", "audio", "flush_interval", "archive_interval"});
    if (s["payload"]) {
      const auto m = scalar(s["payload"], "store.payload");
      if (m == "index") c.store.payload = PayloadMode::Index;
      else if (m == "full") c.store.payload = PayloadMode::Full;
      else throw ConfigError("store.payload", fmt::format("expected 'index' or 'full', got '{}'", m));
    }
    if (s["audio"]) c.store.audio = boolean(s["audio"], "store.audio");
    if (s["flush_interval"]) c.store.flush_interval = duration(s["flush_interval"], "store.flush_interval");
    if (s["archive_interval"]) c.store.archive_interval = duration(s["archive_interval"], "store.archive_interval");
  }
  if (root["telemetry"]) {
    const auto t = scalar(root["telemetry"], "telemetry");
    if (t == "all") c.telemetry = TelemetryCapture::All;
    else if (t == "none") c.telemetry = TelemetryCapture::None;
    else throw ConfigError("telemetry", fmt::format("expected 'all' or 'none', got '{}'", t));
  }
  if (const auto f = root["faults"]) {
    if (!f.IsSequence()) throw ConfigError("faults", "expected a list");
    for (std::size_t i = 0; i < f.size(); ++i) {
      const auto p = index("faults", i);
      reject_unknown(f[i], p, {"kind", "target", "onset", "duration", "params"});
      for (const char* req : {"kind", "target", "onset", "duration"}) {
        if (!f[i][req]) throw ConfigError(join(p, req), "required");
      }
      FaultSpec spec;
      spec.kind = fault_kind(f[i]["kind"], join(p, "kind"));
      spec.target = scalar(f[i]["target"], join(p, "target"));
      spec.onset = onset_time(f[i]["onset"], join(p, "onset"), c.start);
      spec.duration = duration(f[i]["duration"], join(p, "duration"));
      spec.params = params_map(f[i]["params"], join(p, "params"));
      c.faults.push_back(std::move(spec));
    }
  }
  if (root["fault_generator"]) c.generator = parse_generator(root["fault_generator"]);
  validate_scenario(c);
  return c;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) { return parse_scenario(read_text(path)); }

namespace {

std::string num(double v) { return fmt::format("{}", v); }
std::string dur(Millis d) { return fmt::format("{}ms", d.count()); }
std::string quoted(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  return out + "\"";
}

void emit_params(std::string& out, const std::map<std::string, double>& params, const std::string& indent) {
  for (const auto& [k, v] : params) out += fmt::format("{}{}: {}\n", indent, k, num(v));
}

}  // namespace

std::string scenario_to_yaml(const ScenarioConfig& c) {
  std::string out;
  out += fmt::format("name: {}\n", quoted(c.name));
  if (c.seed) out += fmt::format("seed: {}\n", *c.seed);
  out += fmt::format("start: {}\n", quoted(iso8601(c.start)));
  out += fmt::format("horizon: {}\n", dur(c.horizon));
  out += "servers:\n";
  for (const auto& s : c.servers) out += fmt::format("  - {}\n", quoted(s));
  out += "nodes:\n";
  for (const auto& n : c.nodes) {
    out += fmt::format("  - id: {}\n    wifi_strength: [{}, {}]\n    wifi_quality: [{}, {}]\n", quoted(n.id),
                       num(n.strength_lo), num(n.strength_hi), num(n.quality_lo), num(n.quality_hi));
  }
  const auto& l = c.link;
  out += fmt::format(
      "link:\n  q0: {}\n  s: {}\n  disconnect_quality: {}\n  uplink_bytes_per_s: {}\n  ack_loss_prob: {}\n"
      "  reversion: {}\n  noise_sd: {}\n",
      num(l.params.q0), num(l.params.s), num(l.params.disconnect_quality), num(l.uplink_bytes_per_s),
      num(l.ack_loss_prob), dur(l.reversion), num(l.noise_sd));
  const auto& n = c.node;
  out += fmt::format(
      "node:\n  cache_capacity_bytes: {}\n  spl_minute_bytes: {}\n  audio_snippet_bytes: {}\n  status_bytes: {}\n"
      "  snippet_gap_min: {}\n  snippet_gap_max: {}\n  tmp_leak_hours: {}\n",
      n.cache_capacity_bytes, n.spl_minute_bytes, n.audio_snippet_bytes, n.status_bytes, dur(n.snippet_gap_min),
      dur(n.snippet_gap_max), num(n.tmp_leak_hours));
  out += fmt::format("store:\n  payload: {}\n  audio: {}\n  flush_interval: {}\n  archive_interval: {}\n",
                     c.store.payload == PayloadMode::Full ? "full" : "index", c.store.audio ? "true" : "false",
                     dur(c.store.flush_interval), dur(c.store.archive_interval));
  out += fmt::format("telemetry: {}\n", c.telemetry == TelemetryCapture::All ? "all" : "none");
  if (!c.faults.empty()) {
    out += "faults:\n";
    for (const auto& f : c.faults) {
      out += fmt::format("  - kind: {}\n    target: {}\n    onset: {}\n    duration: {}\n", fault_name(f.kind),
                         quoted(f.target), dur(f.onset - c.start), dur(f.duration));
      if (!f.params.empty()) {
        out += "    params:\n";
        emit_params(out, f.params, "      ");
      }
    }
  }
  if (c.generator) {
    const auto& g = *c.generator;
    out += fmt::format("fault_generator:\n  first_after: {}\n  gap: [{}, {}]\n  mix:\n", dur(g.first_after),
                       dur(g.gap.min), dur(g.gap.max));
    for (const auto& [k, w] : g.mix) out += fmt::format("    {}: {}\n", fault_name(k), num(w));
    if (!g.durations.empty()) {
      out += "  durations:\n";
      for (const auto& [k, r] : g.durations) {
        out += fmt::format("    {}: [{}, {}]\n", fault_name(k), dur(r.min), dur(r.max));
      }
    }
    if (!g.params.empty()) {
      out += "  params:\n";
      for (const auto& [k, p] : g.params) {
        out += fmt::format("    {}:\n", fault_name(k));
        emit_params(out, p, "      ");
      }
    }
  }
  return out;
}

void validate_scenario(const ScenarioConfig& c) {
  if (c.horizon <= Millis::zero()) throw ConfigError("horizon", "must be positive");
  if (c.nodes.empty()) throw ConfigError("nodes", "at least one node is required");
  if (c.servers.size() != 2) throw ConfigError("servers", "exactly two ingestion servers are required");
  if (c.servers[0] == c.servers[1]) throw ConfigError("servers", "server ids must differ");
  std::set<std::string> ids;
  for (std::size_t i = 0; i < c.nodes.size(); ++i) {
    const auto& id = c.nodes[i].id;
    if (id.empty() || id.find_first_of("/_,\\ \t") != std::string::npos) {
      throw ConfigError(index("nodes", i) + ".id", fmt::format("invalid node id '{}'", id));
    }
    if (!ids.insert(id).second) throw ConfigError(index("nodes", i) + ".id", fmt::format("duplicate node id '{}'", id));
  }
  for (const auto& s : c.servers) {
    if (ids.count(s) || s == "network" || s == "storage") throw ConfigError("servers", fmt::format("server id '{}' clashes", s));
  }
  if (c.node.snippet_gap_min <= Millis::zero()) throw ConfigError("node.snippet_gap_min", "must be positive");
  if (c.node.snippet_gap_max < c.node.snippet_gap_min) throw ConfigError("node.snippet_gap_max", "below snippet_gap_min");
  if (c.node.cache_capacity_bytes == 0) throw ConfigError("node.cache_capacity_bytes", "must be positive");
  if (c.store.flush_interval <= Millis::zero()) throw ConfigError("store.flush_interval", "must be positive");
  if (c.store.archive_interval <= Millis::zero()) throw ConfigError("store.archive_interval", "must be positive");
  if (c.link.reversion <= Millis::zero()) throw ConfigError("link.reversion", "must be positive");
  for (std::size_t i = 0; i < c.faults.size(); ++i) {
    const auto& f = c.faults[i];
    const auto p = index("faults", i);
    if (f.duration <= Millis::zero()) throw ConfigError(p + ".duration", "must be positive");
    if (f.onset < c.start || f.onset >= c.end()) throw ConfigError(p + ".onset", "outside the scenario horizon");
    if (f.kind == FaultKind::ServerOutage) {
      const bool ok = f.target == "network" || f.target == "storage" ||
                      std::find(c.servers.begin(), c.servers.end(), f.target) != c.servers.end();
      if (!ok) throw ConfigError(p + ".target", fmt::format("unknown server target '{}'", f.target));
    } else if (ids.count(f.target) == 0) {
      throw ConfigError(p + ".target", fmt::format("unknown node '{}'", f.target));
    }
  }
}

}  // namespace noisenet::simnet
