#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "noisenet/common/time.hpp"
#include "noisenet/simnet/faults.hpp"
#include "noisenet/simnet/link.hpp"

namespace noisenet::simnet {

/// Wi-Fi baselines are drawn uniformly from [lo, hi] when the world is built.
struct NodeSpec {
  std::string id;
  double strength_lo = 65.0;
  double strength_hi = 65.0;
  double quality_lo = 60.0;
  double quality_hi = 60.0;
};

struct LinkConfig {
  LinkParams params{30.0, 8.0, 10.0};
  double uplink_bytes_per_s = 1e6;
  double ack_loss_prob = 0.0;
  Millis reversion = std::chrono::minutes(30);
  double noise_sd = 4.0;
};

struct NodeConfig {
  std::uint64_t cache_capacity_bytes = 12'000'000'000ULL;
  std::uint64_t spl_minute_bytes = 150'000;
  std::uint64_t audio_snippet_bytes = 500'000;
  std::uint64_t status_bytes = 1'000;
  Millis snippet_gap_min = std::chrono::seconds(5);
  Millis snippet_gap_max = std::chrono::seconds(15);
  double tmp_leak_hours = 72.0;
};

enum class PayloadMode { Index, Full };
enum class TelemetryCapture { All, None };

struct StoreConfig {
  PayloadMode payload = PayloadMode::Index;
  bool audio = true;
  Millis flush_interval = std::chrono::seconds(60);
  Millis archive_interval = std::chrono::hours(1);
};

struct ScenarioConfig {
  std::string name = "scenario";
  std::optional<std::uint64_t> seed;
  Timestamp start{};
  Millis horizon{};
  std::vector<NodeSpec> nodes;
  std::vector<std::string> servers{"A", "B"};
  LinkConfig link;
  NodeConfig node;
  StoreConfig store;
  TelemetryCapture telemetry = TelemetryCapture::All;
  std::vector<FaultSpec> faults;
  std::optional<FaultGeneratorConfig> generator;

  Timestamp end() const { return start + horizon; }
};

/// Parses and validates a YAML scenario. Throws ConfigError naming the field.
ScenarioConfig parse_scenario(const std::string& yaml_text);
/// Throws IoError if the file cannot be read.
ScenarioConfig load_scenario(const std::filesystem::path& path);
/// Canonical YAML that parse_scenario reads back to an equal configuration.
std::string scenario_to_yaml(const ScenarioConfig& config);
/// Structural checks shared by the parser and programmatic construction.
void validate_scenario(const ScenarioConfig& config);

}  // namespace noisenet::simnet
