#include "noisenet/node/cache.hpp"

#include <fmt/format.h>

#include "noisenet/common/errors.hpp"

namespace noisenet::node {

std::string_view kind_name(ItemKind kind) {
  switch (kind) {
    case ItemKind::Spl: return "spl";
    case ItemKind::Audio: return "audio";
    case ItemKind::Status: return "status";
  }
  return "?";
}

ItemKind parse_kind(std::string_view name) {
  if (name == "spl") return ItemKind::Spl;
  if (name == "audio") return ItemKind::Audio;
  if (name == "status") return ItemKind::Status;
  throw DomainError(fmt::format("unknown item kind '{}'", name));
}

CacheState::CacheState(std::uint64_t capacity_bytes) : capacity_bytes_(capacity_bytes) {
  if (capacity_bytes == 0) throw DomainError("cache capacity must be positive");
}

CacheState::Bucket& CacheState::bucket(ItemKind kind) {
  if (kind == ItemKind::Status) throw DomainError("status items are never cached");
  return kind == ItemKind::Spl ? spl_ : audio_;
}

const CacheState::Bucket& CacheState::bucket(ItemKind kind) const {
  if (kind == ItemKind::Status) throw DomainError("status items are never cached");
  return kind == ItemKind::Spl ? spl_ : audio_;
}

bool CacheState::add(CacheEntry entry) {
  auto& b = bucket(entry.kind);
  if (index_.count(entry.id) != 0) return false;
  if (entry.size_bytes > capacity_bytes_ - used_bytes_) return false;
  Key key{entry.created_at, entry.id};
  index_.emplace(entry.id, key);
  used_bytes_ += entry.size_bytes;
  b.emplace(std::move(key), std::move(entry));
  return true;
}

std::optional<CacheEntry> CacheState::remove(const std::string& id) {
  const auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  for (Bucket* b : {&spl_, &audio_}) {
    const auto e = b->find(it->second);
    if (e != b->end()) {
      CacheEntry out = std::move(e->second);
      b->erase(e);
      index_.erase(it);
      used_bytes_ -= out.size_bytes;
      return out;
    }
  }
  return std::nullopt;
}

void CacheState::clear() {
  spl_.clear();
  audio_.clear();
  index_.clear();
  used_bytes_ = 0;
}

std::optional<CacheEntry> CacheState::oldest(ItemKind kind) const {
  const auto& b = bucket(kind);
  if (b.empty()) return std::nullopt;
  return b.begin()->second;
}

std::size_t CacheState::count(ItemKind kind) const { return bucket(kind).size(); }

std::vector<CacheEntry> CacheState::entries() const {
  std::vector<CacheEntry> out;
  out.reserve(index_.size());
  for (const auto& [k, e] : spl_) out.push_back(e);
  for (const auto& [k, e] : audio_) out.push_back(e);
  return out;
}

std::vector<CacheEntry> tick_deletion_policy(CacheState& cache, double threshold) {
  std::vector<CacheEntry> deleted;
  while (!cache.empty() && cache.usage_fraction() >= threshold) {
    auto victim = cache.oldest(ItemKind::Audio);
    if (!victim) victim = cache.oldest(ItemKind::Spl);
    deleted.push_back(*cache.remove(victim->id));
  }
  return deleted;
}

double analytic_first_enactment_s(std::uint64_t capacity_bytes, double spl_bytes_per_s, double audio_bytes_per_s,
                                  double threshold) {
  const double rate = spl_bytes_per_s + audio_bytes_per_s;
  if (!(rate > 0)) throw DomainError("fill rate must be positive");
  return threshold * static_cast<double>(capacity_bytes) / rate;
}

}  // namespace noisenet::node
