#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "noisenet/common/time.hpp"
#include "noisenet/node/cache.hpp"

namespace noisenet::ingest {

using node::ItemKind;

/// sha256 of "<kind>|<sensor_id>|<ts_ms>", hex.
std::string make_item_id(ItemKind kind, const std::string& sensor_id, Timestamp ts);

/// File name of an item inside its day directory.
///   spl:    <sensor>_<unix_s>.tar      (minute start)
///   audio:  <sensor>_<ts_ms>.tar.gz
///   status: <sensor>_<ts_ms>.json
std::string item_file_name(ItemKind kind, const std::string& sensor_id, Timestamp ts);

/// A received item as written to the store. Without a body only the index row
/// is written (a stub standing in for a file of `size` bytes).
struct StoredItem {
  ItemKind kind = ItemKind::Spl;
  std::string sensor_id;
  Timestamp ts{};
  std::string item_id;
  std::uint64_t size = 0;
  Timestamp received{};
  std::optional<std::vector<std::uint8_t>> body;
};

/// One row of a day's index.csv.
struct IndexRow {
  std::string file;
  std::string item_id;
  std::uint64_t size = 0;
  std::int64_t received_ms = 0;
  bool stub = false;
};

inline constexpr const char* kIndexFile = "index.csv";

struct DayKey {
  ItemKind kind = ItemKind::Spl;
  std::string sensor_id;
  std::string date;  // YYYY-MM-DD
  auto operator<=>(const DayKey&) const = default;
};

/// Contents of one day, whether still a directory or already a tar.
struct DayContents {
  DayKey key;
  bool archived = false;
  std::vector<IndexRow> rows;
  /// Bodies by file name (stubs have none).
  std::map<std::string, std::vector<std::uint8_t>> bodies;
};

/// Persistent store rooted at a directory:
///   <root>/<kind>/<sensor_id>/<YYYY-MM-DD>/<file> + index.csv
/// A quiet day is replaced by <root>/<kind>/<sensor_id>/<YYYY-MM-DD>.tar.
class Store {
 public:
  explicit Store(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path day_dir(const DayKey& key) const;
  std::filesystem::path day_tar(const DayKey& key) const;
  static DayKey day_of(ItemKind kind, const std::string& sensor_id, Timestamp ts);

  /// Writes the item (idempotent by file name, which is a function of
  /// kind, sensor and ts). Returns false if it was already stored. A write
  /// into an archived day rewrites that day's tar.
  bool put(const StoredItem& item);
  /// put() for many items; late writes into one archived day rewrite its
  /// tar once. Returns how many were new.
  std::size_t put_all(const std::vector<const StoredItem*>& items);
  bool contains(ItemKind kind, const std::string& sensor_id, Timestamp ts);

  /// Archives every day directory whose last write is at least 24 h before
  /// `now`. Returns the archived days.
  std::vector<DayKey> archive_stale_days(Timestamp now, Millis quiet = kDay);

  /// All days of a kind on disk, sorted.
  std::vector<DayKey> list_days(ItemKind kind) const;
  /// Throws IoError if the day does not exist.
  DayContents read_day(const DayKey& key, bool with_bodies = true) const;

 private:
  struct OpenDay {
    std::set<std::string> files;
    std::int64_t last_received_ms = 0;
  };
  enum class DayState { Open, Archived };
  DayState locate(const DayKey& key);
  OpenDay& open_day(const DayKey& key);
  void append_to_archive(const DayKey& key, const std::vector<std::pair<const StoredItem*, std::string>>& batch);

  std::filesystem::path root_;
  std::map<DayKey, OpenDay> open_;
  /// File names inside each archived day seen so far.
  std::map<DayKey, std::set<std::string>> archived_;
};

std::string index_csv_header();
std::string to_index_line(const IndexRow& row);
std::vector<IndexRow> parse_index(std::string_view text);

}  // namespace noisenet::ingest
