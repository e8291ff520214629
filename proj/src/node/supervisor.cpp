#include "noisenet/node/supervisor.hpp"

namespace noisenet::node {

namespace {

bool sustained(std::optional<Timestamp>& since, bool breached, Timestamp now, Millis sustain) {
  if (!breached) {
    since.reset();
    return false;
  }
  if (!since) since = now;
  return now - *since >= sustain;
}

}  // namespace

std::vector<RestartAction> supervisor_tick(std::vector<ProcessState>& processes, const SupervisorThresholds& t,
                                           Timestamp now) {
  std::vector<RestartAction> actions;
  for (auto& p : processes) {
    std::optional<RestartReason> reason;
    const bool cpu = sustained(p.cpu_breach_since, p.cpu_pct > t.cpu_pct, now, t.cpu_sustain);
    const bool ram = sustained(p.ram_breach_since, p.ram_pct() > t.ram_pct, now, t.ram_sustain);
    if (p.crashed) reason = RestartReason::Crash;
    else if (ram) reason = RestartReason::Ram;
    else if (cpu) reason = RestartReason::Cpu;
    if (!reason) continue;
    p.crashed = false;
    p.leak_ram_pct = 0;
    p.cpu_breach_since.reset();
    p.ram_breach_since.reset();
    ++p.restarts;
    actions.push_back({p.name, *reason, now});
  }
  return actions;
}

}  // namespace noisenet::node
