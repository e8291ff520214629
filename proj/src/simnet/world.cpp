#include "noisenet/simnet/world.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>
#include <json.hpp>

#include "noisenet/common/errors.hpp"
#include "noisenet/common/hash.hpp"
#include "noisenet/common/io.hpp"

namespace noisenet::simnet {

namespace fs = std::filesystem;
using node::ItemKind;

namespace {

constexpr Millis kTickStep = node::kTelemetryInterval;

enum EventType { kFaultEnd = 0, kFaultStart = 1, kTick = 2, kFlush = 3, kArchive = 4 };

// Independent generator streams.
enum Stream : std::uint64_t {
  kBaselineStream = 1,
  kFaultStream = 2,
  kLinkStream = 10,
  kVitalsStream = 11,
  kSnippetStream = 12,
  kUploadStream = 13,
  kAcousticStream = 14
};

constexpr const char* kSplProcess = "spl_logger";

std::vector<node::ProcessState> fresh_processes() {
  std::vector<node::ProcessState> p(4);
  p[0].name = kSplProcess;
  p[0].base_ram_pct = 3.0;
  p[0].cpu_pct = 8.0;
  p[1].name = "audio_capture";
  p[1].base_ram_pct = 2.5;
  p[1].cpu_pct = 6.0;
  p[2].name = "uploader";
  p[2].base_ram_pct = 1.5;
  p[2].cpu_pct = 2.0;
  p[3].name = "status_reporter";
  p[3].base_ram_pct = 0.5;
  p[3].cpu_pct = 0.5;
  return p;
}

Timestamp ceil_to(Timestamp t, Millis step) {
  const auto ms = to_unix_ms(t);
  const auto q = step.count();
  const auto r = ((ms % q) + q) % q;
  return r == 0 ? t : t + Millis{q - r};
}

bool on_boundary(Timestamp t, Millis step) { return to_unix_ms(t) % step.count() == 0; }

std::string json_escape(const std::string& s) { return nlohmann::json(s).dump(); }

}  // namespace

std::string WorldEvent::to_json() const {
  return fmt::format("{{\"at\":\"{}\",\"at_ms\":{},\"type\":{},\"target\":{},\"detail\":{}}}", iso8601(at),
                     to_unix_ms(at), json_escape(type), json_escape(target), json_escape(detail));
}

struct World::Event {
  Timestamp at{};
  int rank = 0;
  std::uint64_t seq = 0;
  std::size_t fault = 0;
};

bool World::EventLater::operator()(const Event& a, const Event& b) const {
  return std::tie(a.at, a.rank, a.seq) > std::tie(b.at, b.rank, b.seq);
}

struct World::Node {
  NodeSpec spec;
  std::size_t index = 0;
  node::CacheState cache;
  std::optional<node::UploadItem> status_slot;
  node::SnippetScheduler scheduler;
  std::vector<node::CaptureInterval> pending;
  std::vector<node::ProcessState> processes = fresh_processes();
  LinkState link;
  double strength_base = 0;
  double quality_base = 0;
  Rng link_rng;
  Rng vitals_rng;
  Rng snippet_rng;
  Rng upload_rng;
  std::uint64_t acoustic_seed = 0;

  double cpu_base = 0;
  double cpu1 = 0;
  double cpu15 = 0;
  double temp_base = 0;
  double sys_ram = 0;
  double varlog_base = 0;
  double varlog_per_hour = 0;
  int procs_base = 0;
  double tmp = node::kHealthyTmpPct;
  node::NodeVitals vitals;

  int power_off = 0;
  int ap_down = 0;
  int crash = 0;
  std::optional<Timestamp> tmp_leak_since;
  double tmp_leak_hours = 72;
  bool tmp_full = false;
  std::vector<std::size_t> wifi_faults;
  double mem_leak_rate = 0;
  std::optional<Timestamp> capable_since;

  enum class Capture { All, None, Windows } capture = Capture::All;
  std::set<Timestamp> windows;

  NodeSummary summary;
  std::map<Timestamp, HourLedger> hours;

  Node(const NodeSpec& s, std::uint64_t capacity, node::SnippetScheduleConfig sched)
      : spec(s), cache(capacity), scheduler(sched) {}

  bool powered() const { return power_off == 0; }
  bool capable() const { return powered() && crash == 0 && !tmp_full; }
};

World::World() = default;
World::World(World&&) noexcept = default;
World& World::operator=(World&&) noexcept = default;
World::~World() = default;

World build_world(const ScenarioConfig& config, std::uint64_t seed, WorldOptions options) {
  validate_scenario(config);
  World w;
  w.config_ = config;
  w.seed_ = seed;
  w.options_ = std::move(options);
  w.clock_ = config.start;
  if (w.options_.out_dir.empty()) throw ConfigError("out_dir", "a run directory is required");
  fs::create_directories(w.options_.out_dir);
  w.store_ = std::make_unique<ingest::Store>(w.options_.out_dir / "store");
  for (const auto& id : config.servers) {
    w.servers_.push_back(std::make_unique<ingest::IngestServer>(id, w.store_.get()));
    w.server_down_[id] = 0;
  }

  const node::SnippetScheduleConfig sched{config.node.snippet_gap_min, config.node.snippet_gap_max,
                                          std::chrono::seconds(10)};
  Rng base(derive_seed(seed, kBaselineStream));
  for (std::size_t i = 0; i < config.nodes.size(); ++i) {
    const auto& spec = config.nodes[i];
    auto n = std::make_unique<World::Node>(spec, config.node.cache_capacity_bytes, sched);
    n->index = i;
    n->strength_base = base.uniform(spec.strength_lo, spec.strength_hi);
    n->quality_base = base.uniform(spec.quality_lo, spec.quality_hi);
    n->cpu_base = base.uniform(15, 35);
    n->temp_base = base.uniform(42, 55);
    n->sys_ram = base.uniform(11, 15);
    n->varlog_base = base.uniform(18, 28);
    n->varlog_per_hour = base.uniform(0.2, 0.5);
    n->procs_base = 110 + static_cast<int>(base.below(21));
    n->link_rng = Rng(derive_seed(seed, kLinkStream * 1000003 + i));
    n->vitals_rng = Rng(derive_seed(seed, kVitalsStream * 1000003 + i));
    n->snippet_rng = Rng(derive_seed(seed, kSnippetStream * 1000003 + i));
    n->upload_rng = Rng(derive_seed(seed, kUploadStream * 1000003 + i));
    n->acoustic_seed = derive_seed(seed, kAcousticStream * 1000003 + i);
    n->link.signal_strength_pct = n->strength_base;
    n->link.signal_quality_pct = n->quality_base;
    n->cpu1 = n->cpu15 = n->cpu_base;
    n->tmp_leak_hours = config.node.tmp_leak_hours;
    n->capable_since = config.start;
    n->summary.id = spec.id;
    if (w.options_.capture_windows) {
      n->capture = World::Node::Capture::Windows;
      for (const auto& [id, hour] : *w.options_.capture_windows) {
        if (id == spec.id) n->windows.insert(floor_hour(hour));
      }
    } else {
      n->capture = config.telemetry == TelemetryCapture::All ? World::Node::Capture::All : World::Node::Capture::None;
    }
    w.node_index_[spec.id] = i;
    w.nodes_.push_back(std::move(n));
  }

  const auto telemetry_path = w.options_.out_dir / "telemetry.csv";
  w.telemetry_.open(telemetry_path, std::ios::binary | std::ios::trunc);
  if (!w.telemetry_) throw IoError(telemetry_path.string(), "cannot open for writing");
  w.telemetry_ << node::telemetry_csv_header() << '\n';

  std::vector<FaultSpec> all = config.faults;
  if (config.generator) {
    Rng frng(derive_seed(seed, kFaultStream));
    auto generated = generate_faults(*config.generator, w.node_ids(), config.start, config.end(), frng);
    all.insert(all.end(), generated.begin(), generated.end());
  }
  std::stable_sort(all.begin(), all.end(), [](const FaultSpec& a, const FaultSpec& b) { return a.onset < b.onset; });
  for (const auto& f : all) w.inject_fault(f);

  w.schedule(ceil_to(config.start, kTickStep), kTick);
  w.schedule(config.start + config.store.flush_interval, kFlush);
  w.schedule(config.start + config.store.archive_interval, kArchive);
  return w;
}

std::vector<std::string> World::node_ids() const {
  std::vector<std::string> out;
  for (const auto& n : nodes_) out.push_back(n->spec.id);
  return out;
}

std::vector<std::string> World::server_ids() const { return config_.servers; }

World::Node& World::node(const std::string& id) {
  const auto it = node_index_.find(id);
  if (it == node_index_.end()) throw DomainError(fmt::format("unknown node '{}'", id));
  return *nodes_[it->second];
}

const World::Node& World::node(const std::string& id) const {
  const auto it = node_index_.find(id);
  if (it == node_index_.end()) throw DomainError(fmt::format("unknown node '{}'", id));
  return *nodes_[it->second];
}

void World::schedule(Timestamp at, int rank, std::size_t fault) {
  queue_storage_.push_back(Event{at, rank, seq_++, fault});
  std::push_heap(queue_storage_.begin(), queue_storage_.end(), EventLater{});
}

void World::inject_fault(const FaultSpec& f) {
  if (f.duration <= Millis::zero()) throw DomainError("fault duration must be positive");
  if (f.onset < clock_) throw DomainError(fmt::format("fault onset {} is before the clock {}", iso8601(f.onset), iso8601(clock_)));
  if (f.kind == FaultKind::ServerOutage) {
    const bool ok = f.target == "network" || f.target == "storage" || server_down_.count(f.target) != 0;
    if (!ok) throw ConfigError("fault.target", fmt::format("unknown server target '{}'", f.target));
  } else if (node_index_.count(f.target) == 0) {
    throw ConfigError("fault.target", fmt::format("unknown node '{}'", f.target));
  }
  faults_.push_back(f);
  schedule(f.onset, kFaultStart, faults_.size() - 1);
  schedule(f.end(), kFaultEnd, faults_.size() - 1);
}

std::vector<FaultSpec> World::faults() const {
  auto out = faults_;
  std::stable_sort(out.begin(), out.end(), [](const FaultSpec& a, const FaultSpec& b) { return a.onset < b.onset; });
  return out;
}

void World::log(std::vector<WorldEvent>& out, Timestamp at, std::string type, std::string target, std::string detail) {
  WorldEvent e{at, std::move(type), std::move(target), std::move(detail)};
  out.push_back(e);
  events_.push_back(std::move(e));
}

std::vector<WorldEvent> World::advance(Timestamp until) {
  if (until < clock_) throw DomainError("cannot advance into the past");
  std::vector<WorldEvent> out;
  while (!queue_storage_.empty() && queue_storage_.front().at <= until) {
    std::pop_heap(queue_storage_.begin(), queue_storage_.end(), EventLater{});
    const Event e = queue_storage_.back();
    queue_storage_.pop_back();
    clock_ = e.at;
    switch (e.rank) {
      case kFaultStart:
        fault_start(faults_[e.fault], out);
        break;
      case kFaultEnd:
        fault_end(faults_[e.fault], out);
        break;
      case kTick:
        for (auto& n : nodes_) node_tick(*n, e.at, out);
        schedule(e.at + kTickStep, kTick);
        break;
      case kFlush:
        flush_servers(e.at);
        schedule(e.at + config_.store.flush_interval, kFlush);
        break;
      case kArchive:
        store_->archive_stale_days(e.at);
        schedule(e.at + config_.store.archive_interval, kArchive);
        break;
    }
  }
  clock_ = until;
  return out;
}

std::vector<WorldEvent> World::run_to_end() {
  auto out = advance(config_.end());
  flush_servers(clock_);
  telemetry_.flush();
  return out;
}

void World::flush_servers(Timestamp now) {
  if (storage_down_ > 0) return;
  for (auto& s : servers_) {
    if (server_down_.at(s->id()) == 0) s->flush(now);
  }
}

void World::update_capability(Node& n, Timestamp now) {
  if (!n.capable()) {
    n.capable_since.reset();
  } else if (!n.capable_since) {
    n.capable_since = now;
  }
}

void World::reboot(Node& n, Timestamp now) {
  n.tmp = node::kHealthyTmpPct;
  n.tmp_full = false;
  if (n.tmp_leak_since) n.tmp_leak_since = now;
  n.scheduler = node::SnippetScheduler(n.scheduler.config());
  n.pending.clear();
  n.status_slot.reset();
  n.processes = fresh_processes();
  n.cpu1 = n.cpu15 = n.cpu_base;
  n.capable_since.reset();
  update_capability(n, now);
}

void World::fault_start(const FaultSpec& f, std::vector<WorldEvent>& out) {
  const auto now = f.onset;
  log(out, now, "fault_start", f.target, std::string(fault_name(f.kind)));
  if (f.kind == FaultKind::ServerOutage) {
    std::vector<ingest::IngestServer*> hit;
    if (f.target == "storage") {
      if (storage_down_++ == 0) {
        for (auto& s : servers_) s->set_storage_online(false);
      }
    } else if (f.target == "network") {
      ++network_down_;
      for (auto& s : servers_) hit.push_back(s.get());
    } else {
      ++server_down_.at(f.target);
      for (auto& s : servers_) {
        if (s->id() == f.target) {
          s->set_up(false);
          hit.push_back(s.get());
        }
      }
    }
    if (f.param("lose_data", 0) != 0) {
      for (auto* s : hit) {
        for (const auto& item : s->drop_cache()) {
          const auto it = node_index_.find(item.sensor_id);
          if (it == node_index_.end()) continue;
          auto& n = *nodes_[it->second];
          if (item.kind == ItemKind::Spl) {
            ++n.summary.spl.server_lost;
            ++n.hours[floor_hour(item.ts)].server_lost;
          } else if (item.kind == ItemKind::Audio) {
            ++n.summary.audio.server_lost;
          }
        }
      }
    }
    return;
  }
  auto& n = node(f.target);
  switch (f.kind) {
    case FaultKind::WifiDegradation:
      n.wifi_faults.push_back(static_cast<std::size_t>(&f - faults_.data()));
      break;
    case FaultKind::ApOutage:
      ++n.ap_down;
      break;
    case FaultKind::PowerFailure:
      if (n.power_off++ == 0) {
        n.pending.clear();
        n.status_slot.reset();
        update_capability(n, now);
      }
      break;
    case FaultKind::TmpLeak:
      n.tmp_leak_since = now;
      n.tmp_leak_hours = f.param("hours_to_full", config_.node.tmp_leak_hours);
      break;
    case FaultKind::MemoryLeak:
      n.mem_leak_rate += f.param("rate_pct_per_hour", 2.0);
      break;
    case FaultKind::ScriptCrash:
      ++n.crash;
      update_capability(n, now);
      break;
    case FaultKind::ServerOutage:
      break;
  }
}

void World::fault_end(const FaultSpec& f, std::vector<WorldEvent>& out) {
  const auto now = f.end();
  log(out, now, "fault_end", f.target, std::string(fault_name(f.kind)));
  if (f.kind == FaultKind::ServerOutage) {
    if (f.target == "storage") {
      if (--storage_down_ == 0) {
        for (auto& s : servers_) s->set_storage_online(true);
      }
    } else if (f.target == "network") {
      --network_down_;
    } else if (--server_down_.at(f.target) == 0) {
      for (auto& s : servers_) {
        if (s->id() == f.target) s->set_up(true);
      }
    }
    return;
  }
  auto& n = node(f.target);
  switch (f.kind) {
    case FaultKind::WifiDegradation: {
      const auto idx = static_cast<std::size_t>(&f - faults_.data());
      std::erase(n.wifi_faults, idx);
      if (f.param("wipe_cache_on_repair", 0) != 0) {
        // The repair replaces the node's storage; whatever was cached is gone.
        for (const auto& e : n.cache.entries()) {
          if (e.kind == ItemKind::Spl) {
            ++n.summary.spl.wiped;
            ++n.hours[floor_hour(e.created_at)].wiped;
          } else {
            ++n.summary.audio.wiped;
          }
        }
        n.cache.clear();
        if (n.powered()) reboot(n, now);
        log(out, now, "repair", f.target, "cache wiped");
      }
      break;
    }
    case FaultKind::ApOutage:
      --n.ap_down;
      break;
    case FaultKind::PowerFailure:
      if (--n.power_off == 0) {
        reboot(n, now);
        log(out, now, "reboot", f.target, "power restored");
      }
      break;
    case FaultKind::TmpLeak:
      n.tmp_leak_since.reset();
      if (n.powered()) {
        reboot(n, now);
        log(out, now, "reboot", f.target, "tmp cleared");
      }
      break;
    case FaultKind::MemoryLeak:
      n.mem_leak_rate = std::max(0.0, n.mem_leak_rate - f.param("rate_pct_per_hour", 2.0));
      break;
    case FaultKind::ScriptCrash:
      --n.crash;
      update_capability(n, now);
      break;
    case FaultKind::ServerOutage:
      break;
  }
}

void World::add_to_cache(Node& n, node::CacheEntry entry, Timestamp now, std::vector<WorldEvent>& out) {
  const auto kind = entry.kind;
  const auto created = entry.created_at;
  auto& totals = kind == ItemKind::Spl ? n.summary.spl : n.summary.audio;
  ++totals.generated;
  if (kind == ItemKind::Spl) ++n.hours[floor_hour(created)].generated;
  if (!n.cache.add(std::move(entry))) {
    ++totals.refused;
    if (kind == ItemKind::Spl) ++n.hours[floor_hour(created)].refused;
  }
  for (const auto& d : node::tick_deletion_policy(n.cache)) {
    if (!n.summary.first_deletion) {
      n.summary.first_deletion = now;
      log(out, now, "first_deletion", n.spec.id,
          fmt::format("usage reached {:.0f}% of {} bytes", 100 * node::kDeletionThreshold, n.cache.capacity_bytes()));
    }
    if (d.kind == ItemKind::Spl) {
      ++n.summary.spl.deleted;
      ++n.hours[floor_hour(d.created_at)].deleted;
      if (!n.summary.first_spl_deletion) n.summary.first_spl_deletion = now;
    } else {
      ++n.summary.audio.deleted;
      n.summary.last_audio_deletion = now;
    }
  }
}

void World::generate(Node& n, Timestamp now, std::vector<WorldEvent>& out) {
  const auto& nc = config_.node;
  if (on_boundary(now, kMinute)) {
    const auto minute_start = now - kMinute;
    if (minute_start >= config_.start && n.capable_since && *n.capable_since <= minute_start) {
      const auto id = ingest::make_item_id(ItemKind::Spl, n.spec.id, minute_start);
      add_to_cache(n, node::CacheEntry{id, ItemKind::Spl, minute_start, nc.spl_minute_bytes}, now, out);
    }
    for (const auto& c : n.scheduler.schedule_minute(n.snippet_rng, now)) n.pending.push_back(c);
  }
  std::size_t done = 0;
  while (done < n.pending.size() && n.pending[done].end <= now) {
    const auto& c = n.pending[done];
    if (n.capable_since && *n.capable_since <= c.start) {
      const auto id = ingest::make_item_id(ItemKind::Audio, n.spec.id, c.start);
      add_to_cache(n, node::CacheEntry{id, ItemKind::Audio, c.start, nc.audio_snippet_bytes}, now, out);
    }
    ++done;
  }
  n.pending.erase(n.pending.begin(), n.pending.begin() + static_cast<std::ptrdiff_t>(done));
}

void World::node_tick(Node& n, Timestamp now, std::vector<WorldEvent>& out) {
  if (!n.powered()) return;
  const double dt = std::chrono::duration<double>(kTickStep).count();

  // /tmp leak.
  if (n.tmp_leak_since) {
    const double hours = std::chrono::duration<double, std::ratio<3600>>(now - *n.tmp_leak_since).count();
    n.tmp = std::min(100.0, node::kHealthyTmpPct + (100.0 - node::kHealthyTmpPct) * hours / n.tmp_leak_hours);
    if (n.tmp >= 100.0 && !n.tmp_full) {
      n.tmp_full = true;
      update_capability(n, now);
      log(out, now, "tmp_full", n.spec.id, "data generation stopped");
    }
  }

  // Link: baselines pulled towards the floors of any active degradation.
  double s_target = n.strength_base;
  double q_target = n.quality_base;
  for (const auto idx : n.wifi_faults) {
    const auto& f = faults_[idx];
    const double ramp_h = std::max(1e-9, f.param("ramp_hours", 6.0));
    const double frac =
        std::clamp(std::chrono::duration<double, std::ratio<3600>>(now - f.onset).count() / ramp_h, 0.0, 1.0);
    const double s_floor = f.params.count("strength_delta") ? n.strength_base + f.param("strength_delta", 0)
                                                            : f.param("strength_floor", 15.0);
    const double q_floor = f.params.count("quality_delta") ? n.quality_base + f.param("quality_delta", 0)
                                                           : f.param("quality_floor", 3.0);
    s_target = std::min(s_target, n.strength_base + (s_floor - n.strength_base) * frac);
    q_target = std::min(q_target, n.quality_base + (q_floor - n.quality_base) * frac);
  }
  const double k_link = 1.0 / std::chrono::duration<double>(config_.link.reversion).count();
  n.link.signal_strength_pct = ou_step(n.link.signal_strength_pct, s_target, k_link, config_.link.noise_sd, dt, n.link_rng);
  n.link.signal_quality_pct = ou_step(n.link.signal_quality_pct, q_target, k_link, config_.link.noise_sd, dt, n.link_rng);
  n.link.ap_up = n.ap_down == 0;

  generate(n, now, out);

  // Processes.
  if (n.mem_leak_rate > 0) n.processes[0].leak_ram_pct += n.mem_leak_rate * dt / 3600.0;
  if (on_boundary(now, kMinute)) {
    if (n.crash > 0) n.processes[0].crashed = true;
    for (const auto& r : node::supervisor_tick(n.processes, node::SupervisorThresholds{}, now)) {
      ++n.summary.restarts;
      if (r.reason != node::RestartReason::Crash) {
        log(out, now, "restart", n.spec.id,
            fmt::format("{} ({})", r.process, r.reason == node::RestartReason::Ram ? "ram" : "cpu"));
      }
    }
  }

  // Vitals.
  n.cpu1 = ou_step(n.cpu1, n.cpu_base, 1.0 / 120.0, 6.0, dt, n.vitals_rng);
  n.cpu15 += (n.cpu1 - n.cpu15) * (1.0 - std::exp(-dt / 900.0));
  const double hour_of_day =
      std::chrono::duration<double, std::ratio<3600>>(now - floor_day(now)).count();
  auto& v = n.vitals;
  v.powered = true;
  v.cpu_load_1min_pct = n.cpu1;
  v.cpu_load_15min_pct = n.cpu15;
  v.cpu_temp_c = n.temp_base + 0.15 * n.cpu1 + 2.5 * std::sin(2.0 * std::numbers::pi * (hour_of_day - 9.0) / 24.0) +
                 0.3 * n.vitals_rng.normal();
  double ram = n.sys_ram;
  int live = 0;
  for (const auto& p : n.processes) {
    if (p.crashed) continue;
    ram += p.ram_pct();
    ++live;
  }
  v.ram_usage_pct = ram;
  v.wifi_signal_strength_pct = n.link.ap_up ? n.link.signal_strength_pct : 0.0;
  v.wifi_signal_quality_pct = n.link.ap_up ? n.link.signal_quality_pct : 0.0;
  v.data_usage_pct = 100.0 * n.cache.usage_fraction();
  v.tmp_usage_pct = n.tmp;
  v.varlog_usage_pct = n.varlog_base + n.varlog_per_hour * hour_of_day;
  v.running_processes = n.procs_base + live + static_cast<int>(n.vitals_rng.below(3)) - 1;

  const auto record = node::telemetry_tick(n.spec.id, now, v);
  ++n.summary.telemetry_produced;
  n.status_slot = node::UploadItem{ItemKind::Status, "status", now, config_.node.status_bytes};
  upload_cycle(n, now, record ? &*record : nullptr);
}

bool World::capture(const std::string& node_id, Timestamp ts) const {
  const auto& n = node(node_id);
  switch (n.capture) {
    case Node::Capture::All:
      return true;
    case Node::Capture::None:
      return false;
    case Node::Capture::Windows:
      return n.windows.count(floor_hour(ts)) != 0;
  }
  return false;
}

void World::upload_cycle(Node& n, Timestamp now, const node::TelemetryRecord* status) {
  std::vector<ingest::ServerView> views;
  for (const auto& s : servers_) views.push_back({s->id(), server_down_.at(s->id()) == 0 && network_down_ == 0});
  const bool connected = n.link.connected(config_.link.params);
  const auto budget = static_cast<std::uint64_t>(config_.link.uplink_bytes_per_s *
                                                 std::chrono::duration<double>(kTickStep).count());
  std::uint64_t spent = 0;

  const auto ack = [&](const node::UploadItem& item) -> bool {
    if (!link_transfer(n.link, item.bytes, n.upload_rng, config_.link.params)) return false;
    const auto sid = assigner_.assign(n.spec.id, views);
    if (!sid) return false;
    if (item.kind == ItemKind::Status) return true;
    if (item.kind == ItemKind::Audio && !config_.store.audio) {
      ++n.summary.audio.acked;
      return true;
    }
    auto& server = **std::find_if(servers_.begin(), servers_.end(), [&](const auto& s) { return s->id() == *sid; });
    ingest::UploadRequest req{item.kind, n.spec.id, item.created_at, item.id, item.bytes, std::nullopt};
    if (item.kind == ItemKind::Spl && config_.store.payload == PayloadMode::Full) {
      auto file = synthesize_minute(n.spec.id, item.created_at, n.acoustic_seed, options_.soundscape);
      req.size = file.bytes.size();
      req.body = std::move(file.bytes);
    }
    const auto dups = server.duplicates();
    const auto reply = server.handle_upload(req, now);
    if (!reply.ok) return false;
    if (server.duplicates() == dups) {
      ++(item.kind == ItemKind::Spl ? n.summary.spl.acked : n.summary.audio.acked);
    }
    if (config_.link.ack_loss_prob > 0 && n.upload_rng.bernoulli(config_.link.ack_loss_prob)) return false;
    return true;
  };

  // Cached data in priority order until a transfer fails or the budget runs out.
  std::optional<node::UploadItem> no_status;
  for (;;) {
    const auto next = node::next_upload(n.cache, no_status);
    if (!next) break;
    if (spent > 0 && spent + next->bytes > budget) break;
    spent += next->bytes;
    if (node::uploader_tick(n.cache, no_status, connected, ack).result != node::UploadResult::Acked) break;
  }
  // Status goes out on its own 3 s cycle whatever happened to the data.
  if (n.status_slot && connected && ack(*n.status_slot) && status) {
    ++n.summary.telemetry_delivered;
    if (capture(n.spec.id, status->ts)) {
      telemetry_ << node::to_csv_row(*status) << '\n';
      ++telemetry_rows_;
    }
  }
  n.status_slot.reset();
}

const node::CacheState& World::cache(const std::string& id) const { return node(id).cache; }
const LinkState& World::link(const std::string& id) const { return node(id).link; }
double World::tmp_usage_pct(const std::string& id) const { return node(id).tmp; }
bool World::powered(const std::string& id) const { return node(id).powered(); }
bool World::generating(const std::string& id) const { return node(id).capable(); }

const ingest::IngestServer& World::server(const std::string& id) const {
  for (const auto& s : servers_) {
    if (s->id() == id) return *s;
  }
  throw DomainError(fmt::format("unknown server '{}'", id));
}

NodeSummary World::summary(const std::string& id) const {
  const auto& n = node(id);
  NodeSummary s = n.summary;
  s.spl.in_cache = n.cache.count(ItemKind::Spl);
  s.audio.in_cache = n.cache.count(ItemKind::Audio);
  return s;
}

const std::map<Timestamp, HourLedger>& World::hour_ledger(const std::string& id) const { return node(id).hours; }

std::string World::state_hash() const {
  // Rows written depend on the capture choice, not on the world, so they stay out.
  std::string s = fmt::format("clock={} seed={} queue={}\n", to_unix_ms(clock_), seed_, queue_storage_.size());
  for (const auto& n : nodes_) {
    fmt::format_to(std::back_inserter(s),
                   "{} sb={:.17g} qb={:.17g} s={:.17g} q={:.17g} ap={} cpu={:.17g}/{:.17g} t={:.17g} ram={:.17g} "
                   "tmp={:.17g} used={} n={} pend={} cap={} gen={}/{} del={}/{} up={}/{} tel={}/{}\n",
                   n->spec.id, n->strength_base, n->quality_base, n->link.signal_strength_pct,
                   n->link.signal_quality_pct, n->link.ap_up, n->cpu1, n->cpu15, n->temp_base, n->sys_ram, n->tmp,
                   n->cache.used_bytes(), n->cache.size(), n->pending.size(),
                   n->capable_since ? to_unix_ms(*n->capable_since) : -1, n->summary.spl.generated,
                   n->summary.audio.generated, n->summary.spl.deleted, n->summary.audio.deleted, n->summary.spl.acked,
                   n->summary.audio.acked, n->summary.telemetry_produced, n->summary.telemetry_delivered);
  }
  for (const auto& srv : servers_) {
    fmt::format_to(std::back_inserter(s), "server {} up={} cached={} bytes={} accepted={}\n", srv->id(), srv->up(),
                   srv->cached_items(), srv->cached_bytes(), srv->accepted());
  }
  return sha256_hex(s);
}

RunArtifacts World::export_run() {
  telemetry_.flush();
  if (!telemetry_) throw IoError((options_.out_dir / "telemetry.csv").string(), "write failed");
  RunArtifacts a;
  a.out_dir = options_.out_dir;
  a.store_root = store_->root();
  a.telemetry_csv = options_.out_dir / "telemetry.csv";
  a.faults_json = options_.out_dir / "faults.json";
  a.manifest_json = options_.out_dir / "manifest.json";
  a.ledger_json = options_.out_dir / "ledger.json";
  a.minute_ledger_csv = options_.out_dir / "minute_ledger.csv";
  a.events_jsonl = options_.out_dir / "events.jsonl";
  a.scenario_yaml = options_.out_dir / "scenario.yaml";
  fs::create_directories(a.store_root);

  write_text_atomic(a.faults_json, faults_to_json(faults()) + "\n");
  const auto scenario_text = scenario_to_yaml(config_);
  write_text_atomic(a.scenario_yaml, scenario_text);

  using nlohmann::ordered_json;
  const auto totals_json = [](const KindTotals& t) {
    return ordered_json{{"generated", t.generated}, {"acked", t.acked},   {"deleted", t.deleted},
                        {"refused", t.refused},     {"wiped", t.wiped},   {"server_lost", t.server_lost},
                        {"in_cache", t.in_cache}};
  };
  const auto opt_time = [](const std::optional<Timestamp>& t) -> ordered_json {
    return t ? ordered_json(to_unix_ms(*t)) : ordered_json(nullptr);
  };
  ordered_json ledger;
  ledger["clock_ms"] = to_unix_ms(clock_);
  ledger["nodes"] = ordered_json::array();
  KindTotals spl_all, audio_all;
  for (const auto& n : nodes_) {
    const auto s = summary(n->spec.id);
    for (auto [src, dst] : {std::pair{&s.spl, &spl_all}, std::pair{&s.audio, &audio_all}}) {
      dst->generated += src->generated;
      dst->acked += src->acked;
      dst->deleted += src->deleted;
      dst->refused += src->refused;
      dst->wiped += src->wiped;
      dst->server_lost += src->server_lost;
      dst->in_cache += src->in_cache;
    }
    ledger["nodes"].push_back(ordered_json{{"id", s.id},
                                           {"spl", totals_json(s.spl)},
                                           {"audio", totals_json(s.audio)},
                                           {"telemetry_produced", s.telemetry_produced},
                                           {"telemetry_delivered", s.telemetry_delivered},
                                           {"restarts", s.restarts},
                                           {"first_deletion_ms", opt_time(s.first_deletion)},
                                           {"first_spl_deletion_ms", opt_time(s.first_spl_deletion)},
                                           {"last_audio_deletion_ms", opt_time(s.last_audio_deletion)}});
  }
  ledger["totals"] = ordered_json{{"spl", totals_json(spl_all)}, {"audio", totals_json(audio_all)}};
  std::uint64_t server_pending = 0;
  for (const auto& srv : servers_) server_pending += srv->cached_items();
  ledger["server_pending_items"] = server_pending;
  write_text_atomic(a.ledger_json, ledger.dump(2) + "\n");

  std::string minute = "node_id,hour_ms,generated,deleted,refused,wiped,server_lost\n";
  for (const auto& n : nodes_) {
    for (const auto& [hour, h] : n->hours) {
      fmt::format_to(std::back_inserter(minute), "{},{},{},{},{},{},{}\n", n->spec.id, to_unix_ms(hour), h.generated,
                     h.deleted, h.refused, h.wiped, h.server_lost);
    }
  }
  write_text_atomic(a.minute_ledger_csv, minute);

  std::string events;
  for (const auto& e : events_) events += e.to_json() + "\n";
  write_text_atomic(a.events_jsonl, events);

  ordered_json m;
  m["name"] = config_.name;
  m["seed"] = seed_;
  m["scenario_sha256"] = sha256_hex(scenario_text);
  m["start"] = iso8601(config_.start);
  m["end"] = iso8601(config_.end());
  m["start_ms"] = to_unix_ms(config_.start);
  m["end_ms"] = to_unix_ms(config_.end());
  m["nodes"] = node_ids();
  m["servers"] = config_.servers;
  m["payload"] = config_.store.payload == PayloadMode::Full ? "full" : "index";
  if (options_.capture_windows) {
    m["telemetry"] = "windows";
    m["capture_windows"] = options_.capture_windows->size();
  } else {
    m["telemetry"] = config_.telemetry == TelemetryCapture::All ? "all" : "none";
  }
  m["telemetry_rows"] = telemetry_rows_;
  m["faults"] = faults_.size();
  m["state_sha256"] = state_hash();
  m["files"] = ordered_json{{"store", "store"},
                            {"telemetry", "telemetry.csv"},
                            {"faults", "faults.json"},
                            {"ledger", "ledger.json"},
                            {"minute_ledger", "minute_ledger.csv"},
                            {"events", "events.jsonl"},
                            {"scenario", "scenario.yaml"}};
  write_text_atomic(a.manifest_json, m.dump(2) + "\n");
  return a;
}

std::vector<node::TelemetryRecord> read_telemetry_csv(const fs::path& path) {
  const auto text = read_text(path);
  std::vector<node::TelemetryRecord> out;
  std::string_view rest = text;
  bool header = true;
  while (!rest.empty()) {
    const auto eol = rest.find('\n');
    const auto line = rest.substr(0, eol);
    rest.remove_prefix(eol == std::string_view::npos ? rest.size() : eol + 1);
    if (header) {
      if (line != node::telemetry_csv_header()) throw FormatError(fmt::format("{}: bad telemetry header", path.string()));
      header = false;
      continue;
    }
    if (!line.empty()) out.push_back(node::parse_csv_row(line));
  }
  if (header) throw FormatError(fmt::format("{}: empty telemetry log", path.string()));
  return out;
}

}  // namespace noisenet::simnet
