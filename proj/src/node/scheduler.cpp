#include "noisenet/node/scheduler.hpp"

#include "noisenet/common/errors.hpp"

namespace noisenet::node {

SnippetScheduler::SnippetScheduler(SnippetScheduleConfig config) : config_(config) {
  if (config_.gap_min <= Millis::zero()) throw DomainError("snippet gap must be strictly positive");
  if (config_.gap_max < config_.gap_min) throw DomainError("gap_max below gap_min");
  if (config_.duration <= Millis::zero()) throw DomainError("snippet duration must be positive");
}

Millis SnippetScheduler::draw_gap(Rng& rng) const {
  const auto span = static_cast<std::uint64_t>((config_.gap_max - config_.gap_min).count());
  if (span == 0) return config_.gap_min;
  return config_.gap_min + Millis{static_cast<std::int64_t>(rng.below(span + 1))};
}

std::vector<CaptureInterval> SnippetScheduler::schedule_minute(Rng& rng, Timestamp minute_start) {
  const Timestamp minute_end = minute_start + kMinute;
  if (!next_start_ || *next_start_ < minute_start - config_.gap_max - config_.duration) {
    // First minute, or a gap in the requested minutes (node was down).
    next_start_ = minute_start + draw_gap(rng);
  }
  std::vector<CaptureInterval> out;
  while (*next_start_ < minute_end) {
    if (*next_start_ >= minute_start) {
      const CaptureInterval c{*next_start_, *next_start_ + config_.duration};
      out.push_back(c);
    }
    next_start_ = *next_start_ + config_.duration + draw_gap(rng);
  }
  return out;
}

std::vector<CaptureInterval> schedule_snippets(Rng& rng, Timestamp minute_start, SnippetScheduleConfig config) {
  SnippetScheduler s(config);
  return s.schedule_minute(rng, minute_start);
}

}  // namespace noisenet::node
