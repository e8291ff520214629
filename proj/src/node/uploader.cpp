#include "noisenet/node/uploader.hpp"

namespace noisenet::node {

int priority(ItemKind kind) {
  switch (kind) {
    case ItemKind::Spl: return 3;
    case ItemKind::Audio: return 2;
    case ItemKind::Status: return 1;
  }
  return 0;
}

namespace {
UploadItem from_entry(const CacheEntry& e) { return {e.kind, e.id, e.created_at, e.size_bytes}; }
}  // namespace

std::optional<UploadItem> next_upload(const CacheState& cache, const std::optional<UploadItem>& status_slot) {
  if (auto e = cache.oldest(ItemKind::Spl)) return from_entry(*e);
  if (auto e = cache.oldest(ItemKind::Audio)) return from_entry(*e);
  return status_slot;
}

UploadOutcome uploader_tick(CacheState& cache, std::optional<UploadItem>& status_slot, bool link_available,
                            const AckFn& ack) {
  UploadOutcome out;
  auto item = next_upload(cache, status_slot);
  if (!item) return out;
  out.item = item;
  if (!link_available) {
    out.result = UploadResult::LinkDown;
    if (item->kind == ItemKind::Status) status_slot.reset();
    return out;
  }
  const bool ok = ack(*item);
  if (item->kind == ItemKind::Status) {
    status_slot.reset();
  } else if (ok) {
    cache.remove(item->id);
  }
  out.result = ok ? UploadResult::Acked : UploadResult::Failed;
  return out;
}

}  // namespace noisenet::node
