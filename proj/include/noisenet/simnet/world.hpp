#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "noisenet/common/rng.hpp"
#include "noisenet/ingest/server.hpp"
#include "noisenet/ingest/store.hpp"
#include "noisenet/node/cache.hpp"
#include "noisenet/node/scheduler.hpp"
#include "noisenet/node/supervisor.hpp"
#include "noisenet/node/telemetry.hpp"
#include "noisenet/node/uploader.hpp"
#include "noisenet/simnet/scenario.hpp"
#include "noisenet/simnet/soundscape.hpp"

namespace noisenet::simnet {

/// Telemetry windows to record: (node id, start of hour).
using CaptureWindows = std::set<std::pair<std::string, Timestamp>>;

struct WorldOptions {
  /// Run directory; the store lives in <out_dir>/store.
  std::filesystem::path out_dir;
  /// When set, only records inside these hours are written to telemetry.csv,
  /// whatever the scenario says.
  std::optional<CaptureWindows> capture_windows;
  SoundscapeParams soundscape;
};

/// Notable things that happened, in processing order.
struct WorldEvent {
  Timestamp at{};
  std::string type;
  std::string target;
  std::string detail;

  std::string to_json() const;
};

/// Fate of the SPL minute-files of one node-hour (keyed by minute start).
struct HourLedger {
  std::uint64_t generated = 0;
  std::uint64_t deleted = 0;
  /// Write refused because the partition was full.
  std::uint64_t refused = 0;
  /// Lost when the node's cache was wiped during a repair.
  std::uint64_t wiped = 0;
  /// Acknowledged by a server, then lost with that server's local cache.
  std::uint64_t server_lost = 0;
  bool operator==(const HourLedger&) const = default;
};

struct KindTotals {
  std::uint64_t generated = 0;
  std::uint64_t acked = 0;
  std::uint64_t deleted = 0;
  std::uint64_t refused = 0;
  std::uint64_t wiped = 0;
  std::uint64_t server_lost = 0;
  std::uint64_t in_cache = 0;
};

struct NodeSummary {
  std::string id;
  KindTotals spl;
  KindTotals audio;
  std::uint64_t telemetry_produced = 0;
  std::uint64_t telemetry_delivered = 0;
  std::uint64_t restarts = 0;
  std::optional<Timestamp> first_deletion;
  /// First SPL deletion, if any; audio always goes first.
  std::optional<Timestamp> first_spl_deletion;
  std::optional<Timestamp> last_audio_deletion;
};

struct RunArtifacts {
  std::filesystem::path out_dir;
  std::filesystem::path store_root;
  std::filesystem::path telemetry_csv;
  std::filesystem::path faults_json;
  std::filesystem::path manifest_json;
  std::filesystem::path ledger_json;
  std::filesystem::path minute_ledger_csv;
  std::filesystem::path events_jsonl;
  std::filesystem::path scenario_yaml;
};

class World;

World build_world(const ScenarioConfig& config, std::uint64_t seed, WorldOptions options);

class World {
 public:
  World(World&&) noexcept;
  World& operator=(World&&) noexcept;
  ~World();

  const ScenarioConfig& config() const { return config_; }
  std::uint64_t seed() const { return seed_; }
  Timestamp clock() const { return clock_; }
  std::size_t node_count() const { return nodes_.size(); }
  std::vector<std::string> node_ids() const;
  std::vector<std::string> server_ids() const;

  /// Runs every event with time <= until. Throws DomainError if until < clock.
  std::vector<WorldEvent> advance(Timestamp until);
  /// advance(config().end()) followed by a final flush of the servers.
  std::vector<WorldEvent> run_to_end();

  /// Queues a fault. Throws ConfigError for an unknown target and DomainError
  /// for an onset in the past or a nonpositive duration.
  void inject_fault(const FaultSpec& fault);

  /// Every fault known to the world (scenario, generated and injected), by onset.
  std::vector<FaultSpec> faults() const;

  // Inspection.
  const node::CacheState& cache(const std::string& node_id) const;
  const LinkState& link(const std::string& node_id) const;
  double tmp_usage_pct(const std::string& node_id) const;
  bool powered(const std::string& node_id) const;
  bool generating(const std::string& node_id) const;
  const ingest::IngestServer& server(const std::string& server_id) const;
  ingest::Store& store() { return *store_; }
  NodeSummary summary(const std::string& node_id) const;
  /// Per node, hour start -> SPL ledger.
  const std::map<Timestamp, HourLedger>& hour_ledger(const std::string& node_id) const;
  std::uint64_t telemetry_rows_written() const { return telemetry_rows_; }
  const std::vector<WorldEvent>& event_log() const { return events_; }

  /// sha256 over the full dynamic state (clock, node vitals, links, caches,
  /// server caches, pending events).
  std::string state_hash() const;

  /// Writes faults.json, ledger.json, minute_ledger.csv, events.jsonl,
  /// scenario.yaml and manifest.json next to the store and telemetry log.
  RunArtifacts export_run();

 private:
  friend World build_world(const ScenarioConfig&, std::uint64_t, WorldOptions);
  struct Node;
  struct Event;
  struct EventLater {
    bool operator()(const Event& a, const Event& b) const;
  };

  World();
  Node& node(const std::string& id);
  const Node& node(const std::string& id) const;
  void schedule(Timestamp at, int rank, std::size_t fault = 0);
  void fault_start(const FaultSpec& f, std::vector<WorldEvent>& out);
  void fault_end(const FaultSpec& f, std::vector<WorldEvent>& out);
  void node_tick(Node& n, Timestamp now, std::vector<WorldEvent>& out);
  void generate(Node& n, Timestamp now, std::vector<WorldEvent>& out);
  void add_to_cache(Node& n, node::CacheEntry entry, Timestamp now, std::vector<WorldEvent>& out);
  void upload_cycle(Node& n, Timestamp now, const node::TelemetryRecord* status);
  void reboot(Node& n, Timestamp now);
  void update_capability(Node& n, Timestamp now);
  void flush_servers(Timestamp now);
  bool capture(const std::string& node_id, Timestamp ts) const;
  void log(std::vector<WorldEvent>& out, Timestamp at, std::string type, std::string target, std::string detail);

  ScenarioConfig config_;
  std::uint64_t seed_ = 0;
  WorldOptions options_;
  Timestamp clock_{};
  std::vector<std::unique_ptr<Node>> nodes_;
  std::map<std::string, std::size_t> node_index_;
  std::unique_ptr<ingest::Store> store_;
  std::vector<std::unique_ptr<ingest::IngestServer>> servers_;
  ingest::Assigner assigner_;
  std::vector<FaultSpec> faults_;
  std::vector<Event> queue_storage_;
  std::uint64_t seq_ = 0;
  std::ofstream telemetry_;
  std::uint64_t telemetry_rows_ = 0;
  std::vector<WorldEvent> events_;
  int network_down_ = 0;
  int storage_down_ = 0;
  std::map<std::string, int> server_down_;
};

/// Reads back a telemetry.csv written by a run.
std::vector<node::TelemetryRecord> read_telemetry_csv(const std::filesystem::path& path);

}  // namespace noisenet::simnet
