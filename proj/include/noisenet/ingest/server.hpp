#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "noisenet/ingest/store.hpp"

namespace noisenet::ingest {

struct UploadRequest {
  ItemKind kind = ItemKind::Spl;
  std::string sensor_id;
  Timestamp ts{};
  std::string item_id;
  std::uint64_t size = 0;
  /// Absent for simulated payloads that are accounted by size only.
  std::optional<std::vector<std::uint8_t>> body;
};

struct Ack {
  bool ok = false;
  std::string item_id;
  std::string error;
};

/// One ingestion server. Accepted items go to a local cache (the SSD) and are
/// acknowledged only once cached; flush moves them to the persistent store
/// when the storage backend is reachable.
class IngestServer {
 public:
  /// With a spool directory each cached item is written there (atomically)
  /// before the ack and removed after the flush; without one the cache is
  /// held in memory.
  IngestServer(std::string id, Store* store, std::optional<std::filesystem::path> spool_dir = std::nullopt);

  const std::string& id() const { return id_; }
  bool up() const { return up_; }
  void set_up(bool up) { up_ = up; }
  bool storage_online() const { return storage_online_; }
  void set_storage_online(bool online) { storage_online_ = online; }

  /// Down server: no ack (ok=false, error "server down"). Malformed request:
  /// rejection. Duplicate item_id: ok without a second copy.
  Ack handle_upload(const UploadRequest& request, Timestamp now);

  /// Moves cached items to the store. Returns how many were written
  /// (duplicates already in the store are dropped and not counted).
  std::size_t flush(Timestamp now);

  /// Discards everything not yet flushed (a lost SSD) and returns it.
  std::vector<StoredItem> drop_cache();

  std::size_t cached_items() const { return cache_.size(); }
  std::uint64_t cached_bytes() const { return cached_bytes_; }
  std::uint64_t accepted() const { return accepted_; }
  std::uint64_t duplicates() const { return duplicates_; }

 private:
  std::string id_;
  Store* store_;
  std::optional<std::filesystem::path> spool_dir_;
  bool up_ = true;
  bool storage_online_ = true;
  std::map<std::string, StoredItem> cache_;
  std::uint64_t cached_bytes_ = 0;
  std::uint64_t accepted_ = 0;
  std::uint64_t duplicates_ = 0;
};

/// Returns an error string for a request that must be rejected, or nothing.
std::optional<std::string> validate_request(const UploadRequest& request);

struct ServerView {
  std::string id;
  bool up = true;
};

/// Sticky node-to-server assignment with least-assigned balancing.
class Assigner {
 public:
  /// Current server if it is up; otherwise the up server with the fewest
  /// assigned nodes (ties to the lowest id). Nothing if all are down.
  std::optional<std::string> assign(const std::string& node_id, const std::vector<ServerView>& servers);
  void release(const std::string& node_id);
  std::optional<std::string> current(const std::string& node_id) const;
  std::size_t load(const std::string& server_id) const;

 private:
  std::map<std::string, std::string> assignment_;
};

}  // namespace noisenet::ingest
