#pragma once

#include <functional>
#include <optional>
#include <string>

#include "noisenet/node/cache.hpp"

namespace noisenet::node {

struct UploadItem {
  ItemKind kind = ItemKind::Status;
  std::string id;
  Timestamp created_at{};
  std::uint64_t bytes = 0;
};

/// spl > audio > status.
int priority(ItemKind kind);

enum class UploadResult { Idle, LinkDown, Acked, Failed };

struct UploadOutcome {
  UploadResult result = UploadResult::Idle;
  std::optional<UploadItem> item;
};

/// Returns true when the server positively acknowledged the item.
using AckFn = std::function<bool(const UploadItem&)>;

/// Highest-priority pending item: oldest spl, else oldest audio, else the
/// status payload.
std::optional<UploadItem> next_upload(const CacheState& cache, const std::optional<UploadItem>& status_slot);

/// One upload attempt. On ack, spl/audio leave the cache and status leaves
/// its slot. On failure spl/audio stay cached while status is dropped, since
/// a fresh one is produced next cycle.
UploadOutcome uploader_tick(CacheState& cache, std::optional<UploadItem>& status_slot, bool link_available,
                            const AckFn& ack);

}  // namespace noisenet::node
