#include "noisenet/ingest/store.hpp"

#include <algorithm>
#include <fstream>

#include <fmt/format.h>

#include "noisenet/acoustics/minute_file.hpp"
#include "noisenet/common/errors.hpp"
#include "noisenet/common/hash.hpp"
#include "noisenet/common/io.hpp"
#include "noisenet/common/tar.hpp"

namespace fs = std::filesystem;

namespace noisenet::ingest {

namespace {

constexpr ItemKind kAllKinds[] = {ItemKind::Spl, ItemKind::Audio, ItemKind::Status};

bool is_date(const std::string& s) {
  return s.size() == 10 && s[4] == '-' && s[7] == '-' &&
         std::all_of(s.begin(), s.end(), [](char c) { return (c >= '0' && c <= '9') || c == '-'; });
}

}  // namespace

std::string make_item_id(ItemKind kind, const std::string& sensor_id, Timestamp ts) {
  return sha256_hex(fmt::format("{}|{}|{}", node::kind_name(kind), sensor_id, to_unix_ms(ts)));
}

std::string item_file_name(ItemKind kind, const std::string& sensor_id, Timestamp ts) {
  switch (kind) {
    case ItemKind::Spl: return acoustics::minute_file_name(sensor_id, ts);
    case ItemKind::Audio: return fmt::format("{}_{}.tar.gz", sensor_id, to_unix_ms(ts));
    case ItemKind::Status: return fmt::format("{}_{}.json", sensor_id, to_unix_ms(ts));
  }
  return {};
}

std::string index_csv_header() { return "file,item_id,size,received_ms,stub"; }

std::string to_index_line(const IndexRow& r) {
  return fmt::format("{},{},{},{},{}", r.file, r.item_id, r.size, r.received_ms, r.stub ? 1 : 0);
}

std::vector<IndexRow> parse_index(std::string_view text) {
  std::vector<IndexRow> rows;
  bool header = true;
  for (auto line : split(text, '\n')) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (header) {
      if (line != index_csv_header()) throw FormatError("unexpected index.csv header");
      header = false;
      continue;
    }
    const auto cols = split(line, ',');
    if (cols.size() != 5) throw FormatError(fmt::format("index.csv row has {} columns", cols.size()));
    IndexRow r;
    r.file = std::string(cols[0]);
    r.item_id = std::string(cols[1]);
    r.size = static_cast<std::uint64_t>(parse_int(cols[2]));
    r.received_ms = parse_int(cols[3]);
    r.stub = cols[4] == "1";
    rows.push_back(std::move(r));
  }
  return rows;
}

Store::Store(fs::path root) : root_(std::move(root)) { fs::create_directories(root_); }

fs::path Store::day_dir(const DayKey& k) const {
  return root_ / std::string(node::kind_name(k.kind)) / k.sensor_id / k.date;
}

fs::path Store::day_tar(const DayKey& k) const {
  return root_ / std::string(node::kind_name(k.kind)) / k.sensor_id / (k.date + ".tar");
}

DayKey Store::day_of(ItemKind kind, const std::string& sensor_id, Timestamp ts) { return {kind, sensor_id, utc_date(ts)}; }

Store::OpenDay& Store::open_day(const DayKey& key) {
  auto it = open_.find(key);
  if (it != open_.end()) return it->second;
  OpenDay day;
  const auto index = day_dir(key) / kIndexFile;
  if (fs::exists(index)) {
    for (const auto& r : parse_index(read_text(index))) {
      day.files.insert(r.file);
      day.last_received_ms = std::max(day.last_received_ms, r.received_ms);
    }
  }
  return open_.emplace(key, std::move(day)).first->second;
}

Store::DayState Store::locate(const DayKey& key) {
  if (open_.count(key) != 0) return DayState::Open;
  if (archived_.count(key) != 0) return DayState::Archived;
  if (fs::exists(day_tar(key))) {
    auto& files = archived_[key];
    for (const auto& r : read_day(key, false).rows) files.insert(r.file);
    return DayState::Archived;
  }
  return DayState::Open;
}

bool Store::contains(ItemKind kind, const std::string& sensor_id, Timestamp ts) {
  const auto key = day_of(kind, sensor_id, ts);
  const auto file = item_file_name(kind, sensor_id, ts);
  if (locate(key) == DayState::Archived) return archived_.at(key).count(file) != 0;
  return open_day(key).files.count(file) != 0;
}

bool Store::put(const StoredItem& item) { return put_all({&item}) == 1; }

std::size_t Store::put_all(const std::vector<const StoredItem*>& items) {
  std::size_t written = 0;
  std::map<DayKey, std::vector<std::pair<const StoredItem*, std::string>>> late;
  for (const auto* item : items) {
    if (item->sensor_id.empty() || item->sensor_id.find('/') != std::string::npos) {
      throw DomainError(fmt::format("invalid sensor id '{}'", item->sensor_id));
    }
    const auto key = day_of(item->kind, item->sensor_id, item->ts);
    auto file = item_file_name(item->kind, item->sensor_id, item->ts);
    if (locate(key) == DayState::Archived) {
      if (!archived_.at(key).insert(file).second) continue;
      late[key].emplace_back(item, std::move(file));
      ++written;
      continue;
    }
    auto& day = open_day(key);
    if (day.files.count(file) != 0) continue;

    const auto dir = day_dir(key);
    fs::create_directories(dir);
    if (item->body) write_file_atomic(dir / file, *item->body);
    const auto index = dir / kIndexFile;
    const bool fresh = !fs::exists(index);
    std::ofstream out(index, std::ios::app | std::ios::binary);
    if (!out) throw IoError(index.string(), "cannot open for append");
    if (fresh) out << index_csv_header() << '\n';
    const IndexRow row{file, item->item_id, item->body ? item->body->size() : item->size, to_unix_ms(item->received),
                       !item->body.has_value()};
    out << to_index_line(row) << '\n';
    if (!out) throw IoError(index.string(), "write failed");
    day.files.insert(file);
    day.last_received_ms = std::max(day.last_received_ms, row.received_ms);
    ++written;
  }
  for (const auto& [key, batch] : late) append_to_archive(key, batch);
  return written;
}

void Store::append_to_archive(const DayKey& key,
                              const std::vector<std::pair<const StoredItem*, std::string>>& batch) {
  const auto path = day_tar(key);
  auto members = tar::read(read_file(path));
  std::vector<IndexRow> rows;
  for (const auto& m : members) {
    if (m.name == kIndexFile) rows = parse_index(std::string(m.data.begin(), m.data.end()));
  }
  std::erase_if(members, [](const tar::Member& m) { return m.name == kIndexFile; });
  for (const auto& [item, file] : batch) {
    rows.push_back({file, item->item_id, item->body ? item->body->size() : item->size, to_unix_ms(item->received),
                    !item->body.has_value()});
  }
  std::string index = index_csv_header() + "\n";
  std::int64_t last = 0;
  for (const auto& r : rows) {
    index += to_index_line(r) + "\n";
    last = std::max(last, r.received_ms);
  }
  for (const auto& [item, file] : batch) {
    if (item->body) members.push_back({file, *item->body, last / 1000});
  }
  members.push_back({kIndexFile, std::vector<std::uint8_t>(index.begin(), index.end()), last / 1000});
  std::sort(members.begin(), members.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
  write_file_atomic(path, tar::write(members));
}

std::vector<DayKey> Store::archive_stale_days(Timestamp now, Millis quiet) {
  std::vector<DayKey> archived;
  for (auto kind : kAllKinds) {
    for (const auto& key : list_days(kind)) {
      const auto dir = day_dir(key);
      if (!fs::is_directory(dir)) continue;
      std::int64_t last = 0;
      if (auto it = open_.find(key); it != open_.end()) {
        last = it->second.last_received_ms;
      } else if (fs::exists(dir / kIndexFile)) {
        for (const auto& r : parse_index(read_text(dir / kIndexFile))) last = std::max(last, r.received_ms);
      } else {
        for (const auto& e : fs::directory_iterator(dir)) {
          const auto t = std::chrono::file_clock::to_sys(e.last_write_time());
          last = std::max<std::int64_t>(last, std::chrono::duration_cast<Millis>(t.time_since_epoch()).count());
        }
      }
      if (to_unix_ms(now) - last < quiet.count()) continue;

      std::vector<tar::Member> members;
      std::vector<fs::path> files;
      for (const auto& e : fs::directory_iterator(dir)) {
        if (e.is_regular_file() && e.path().extension() != ".partial") files.push_back(e.path());
      }
      std::sort(files.begin(), files.end());
      for (const auto& f : files) members.push_back({f.filename().string(), read_file(f), last / 1000});
      auto& names = archived_[key];
      if (auto it = open_.find(key); it != open_.end()) {
        names = it->second.files;
      } else {
        for (const auto& r : read_day(key, false).rows) names.insert(r.file);
      }
      write_file_atomic(day_tar(key), tar::write(members));
      fs::remove_all(dir);
      open_.erase(key);
      archived.push_back(key);
    }
  }
  return archived;
}

std::vector<DayKey> Store::list_days(ItemKind kind) const {
  std::vector<DayKey> days;
  const auto base = root_ / std::string(node::kind_name(kind));
  if (!fs::is_directory(base)) return days;
  for (const auto& sensor : fs::directory_iterator(base)) {
    if (!sensor.is_directory()) continue;
    for (const auto& e : fs::directory_iterator(sensor.path())) {
      auto name = e.path().filename().string();
      if (e.is_regular_file() && e.path().extension() == ".tar") name = e.path().stem().string();
      else if (!e.is_directory()) continue;
      if (is_date(name)) days.push_back({kind, sensor.path().filename().string(), name});
    }
  }
  std::sort(days.begin(), days.end());
  days.erase(std::unique(days.begin(), days.end()), days.end());
  return days;
}

DayContents Store::read_day(const DayKey& key, bool with_bodies) const {
  DayContents day;
  day.key = key;
  const auto dir = day_dir(key);
  const auto tar_path = day_tar(key);
  if (fs::is_directory(dir)) {
    if (fs::exists(dir / kIndexFile)) {
      day.rows = parse_index(read_text(dir / kIndexFile));
    } else {
      std::vector<fs::path> files;
      for (const auto& e : fs::directory_iterator(dir)) {
        if (e.is_regular_file()) files.push_back(e.path());
      }
      std::sort(files.begin(), files.end());
      for (const auto& f : files) {
        day.rows.push_back({f.filename().string(), "", static_cast<std::uint64_t>(fs::file_size(f)), 0, false});
      }
    }
    if (with_bodies) {
      for (const auto& r : day.rows) {
        if (!r.stub && fs::exists(dir / r.file)) day.bodies.emplace(r.file, read_file(dir / r.file));
      }
    }
    return day;
  }
  if (!fs::exists(tar_path)) throw IoError(dir.string(), "no such day");
  day.archived = true;
  auto members = tar::read(read_file(tar_path));
  bool have_index = false;
  for (auto& m : members) {
    if (m.name == kIndexFile) {
      day.rows = parse_index(std::string(m.data.begin(), m.data.end()));
      have_index = true;
    }
  }
  for (auto& m : members) {
    if (m.name == kIndexFile) continue;
    if (!have_index) day.rows.push_back({m.name, "", m.data.size(), m.mtime_s * 1000, false});
    if (with_bodies) day.bodies.emplace(m.name, std::move(m.data));
  }
  return day;
}

}  // namespace noisenet::ingest
