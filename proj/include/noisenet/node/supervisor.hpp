#pragma once

#include <optional>
#include <string>
#include <vector>

#include "noisenet/common/time.hpp"

namespace noisenet::node {

struct SupervisorThresholds {
  double cpu_pct = 90;
  Millis cpu_sustain = std::chrono::minutes(5);
  double ram_pct = 25;
  Millis ram_sustain = std::chrono::minutes(10);
};

struct ProcessState {
  std::string name;
  double cpu_pct = 0;
  double base_ram_pct = 0;
  /// Extra RAM held by a leak; cleared by a restart.
  double leak_ram_pct = 0;
  bool crashed = false;
  std::optional<Timestamp> cpu_breach_since;
  std::optional<Timestamp> ram_breach_since;
  int restarts = 0;

  double ram_pct() const { return base_ram_pct + leak_ram_pct; }
};

enum class RestartReason { Crash, Cpu, Ram };

struct RestartAction {
  std::string process;
  RestartReason reason = RestartReason::Crash;
  Timestamp at{};
};

/// Restarts crashed processes at once, and processes whose CPU or RAM has
/// exceeded its threshold continuously for the sustain time. A restart
/// clears the crash flag, the leak and the breach timers.
std::vector<RestartAction> supervisor_tick(std::vector<ProcessState>& processes, const SupervisorThresholds& thresholds,
                                           Timestamp now);

}  // namespace noisenet::node
