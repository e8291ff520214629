#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "noisenet/common/rng.hpp"
#include "noisenet/common/time.hpp"

namespace noisenet::simnet {

enum class FaultKind { WifiDegradation, ApOutage, PowerFailure, TmpLeak, MemoryLeak, ScriptCrash, ServerOutage };

std::string_view fault_name(FaultKind kind);
/// Throws DomainError for unknown names.
FaultKind parse_fault_kind(std::string_view name);

struct FaultSpec {
  FaultKind kind = FaultKind::PowerFailure;
  /// Node id, server id ("A"/"B"), "network" (both servers unreachable) or
  /// "storage" (storage backend offline behind the servers).
  std::string target;
  Timestamp onset{};
  Millis duration{};
  std::map<std::string, double> params;

  Timestamp end() const { return onset + duration; }
  double param(const std::string& key, double fallback) const;
  bool operator==(const FaultSpec&) const = default;
};

/// JSON array of fault objects {kind, target, onset, onset_ms, duration_ms, params}.
std::string faults_to_json(const std::vector<FaultSpec>& faults);
std::vector<FaultSpec> faults_from_json(std::string_view text);

struct DurationRange {
  Millis min{};
  Millis max{};
};

/// Renewal-process fault placement per node: after `first_after`, faults of
/// a kind drawn from `mix` follow each other separated by a clean gap.
struct FaultGeneratorConfig {
  Millis first_after = std::chrono::hours(72);
  DurationRange gap{std::chrono::hours(24 * 5), std::chrono::hours(24 * 9)};
  std::map<FaultKind, double> mix;
  std::map<FaultKind, DurationRange> durations;
  std::map<FaultKind, std::map<std::string, double>> params;
};

std::vector<FaultSpec> generate_faults(const FaultGeneratorConfig& config, const std::vector<std::string>& node_ids,
                                       Timestamp start, Timestamp end, Rng& rng);

}  // namespace noisenet::simnet
