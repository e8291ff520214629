#pragma once

#include <optional>
#include <vector>

#include "noisenet/common/rng.hpp"
#include "noisenet/common/time.hpp"

namespace noisenet::node {

struct CaptureInterval {
  Timestamp start{};
  Timestamp end{};
  bool operator==(const CaptureInterval&) const = default;
};

struct SnippetScheduleConfig {
  Millis gap_min = std::chrono::seconds(5);
  Millis gap_max = std::chrono::seconds(15);
  Millis duration = std::chrono::seconds(10);
};

/// Randomly spaced 10 s captures. Each gap is uniform on [gap_min, gap_max]
/// at millisecond resolution and strictly positive, so captures never touch.
/// A capture that starts near the end of a minute may run into the next one;
/// the following minute then continues from where it ended.
class SnippetScheduler {
 public:
  explicit SnippetScheduler(SnippetScheduleConfig config = {});

  /// Captures whose start falls in [minute_start, minute_start + 60 s).
  /// Minutes must be requested in increasing order.
  std::vector<CaptureInterval> schedule_minute(Rng& rng, Timestamp minute_start);

  const SnippetScheduleConfig& config() const { return config_; }

 private:
  Millis draw_gap(Rng& rng) const;

  SnippetScheduleConfig config_;
  std::optional<Timestamp> next_start_;
};

/// Stateless form: a fresh scheduler over a single minute.
std::vector<CaptureInterval> schedule_snippets(Rng& rng, Timestamp minute_start, SnippetScheduleConfig config = {});

}  // namespace noisenet::node
