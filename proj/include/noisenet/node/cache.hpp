#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "noisenet/common/time.hpp"

namespace noisenet::node {

enum class ItemKind { Spl, Audio, Status };

std::string_view kind_name(ItemKind kind);
/// Throws DomainError for anything but "spl", "audio" or "status".
ItemKind parse_kind(std::string_view name);

// Nominal sizes in decimal bytes.
inline constexpr std::uint64_t kDataPartitionBytes = 12'000'000'000ULL;
inline constexpr std::uint64_t kSplMinuteBytes = 150'000;
inline constexpr std::uint64_t kAudioSnippetBytes = 500'000;
inline constexpr std::uint64_t kStatusBytes = 1'000;
inline constexpr double kDeletionThreshold = 0.95;

struct CacheEntry {
  std::string id;
  ItemKind kind = ItemKind::Spl;
  Timestamp created_at{};
  std::uint64_t size_bytes = 0;

  bool operator==(const CacheEntry&) const = default;
};

/// The node's data partition. Only spl and audio entries live here.
class CacheState {
 public:
  explicit CacheState(std::uint64_t capacity_bytes = kDataPartitionBytes);

  /// False (and no change) if the id is already present or the write would
  /// overflow the partition. Throws DomainError for status entries.
  bool add(CacheEntry entry);
  /// Returns the removed entry, or nothing if the id is unknown.
  std::optional<CacheEntry> remove(const std::string& id);
  /// Drops everything (e.g. a replaced SD card).
  void clear();

  bool contains(const std::string& id) const { return index_.count(id) != 0; }
  std::optional<CacheEntry> oldest(ItemKind kind) const;
  std::size_t count(ItemKind kind) const;
  std::size_t size() const { return index_.size(); }
  bool empty() const { return index_.empty(); }

  std::uint64_t used_bytes() const { return used_bytes_; }
  std::uint64_t capacity_bytes() const { return capacity_bytes_; }
  double usage_fraction() const { return static_cast<double>(used_bytes_) / static_cast<double>(capacity_bytes_); }

  /// All entries, spl first then audio, each oldest first.
  std::vector<CacheEntry> entries() const;

 private:
  using Key = std::pair<Timestamp, std::string>;
  using Bucket = std::map<Key, CacheEntry>;
  Bucket& bucket(ItemKind kind);
  const Bucket& bucket(ItemKind kind) const;

  std::uint64_t capacity_bytes_;
  std::uint64_t used_bytes_ = 0;
  Bucket spl_;
  Bucket audio_;
  std::unordered_map<std::string, Key> index_;
};

/// One enactment of the space-reclamation rule. At or above `threshold`
/// usage, deletes the oldest audio entry, then the next oldest, until usage
/// drops below the threshold; SPL entries are deleted (oldest first) only
/// once no audio is left. Returns what was deleted, in order.
std::vector<CacheEntry> tick_deletion_policy(CacheState& cache, double threshold = kDeletionThreshold);

/// Seconds until usage first reaches `threshold` when filling an empty
/// partition at a constant byte rate.
double analytic_first_enactment_s(std::uint64_t capacity_bytes, double spl_bytes_per_s, double audio_bytes_per_s,
                                  double threshold = kDeletionThreshold);

}  // namespace noisenet::node
