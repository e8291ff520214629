#include "noisenet/ingest/server.hpp"

#include <algorithm>

#include <fmt/format.h>
#include <json.hpp>

#include "noisenet/common/errors.hpp"
#include "noisenet/common/io.hpp"
#include "noisenet/common/tar.hpp"

namespace fs = std::filesystem;

namespace noisenet::ingest {

namespace {

std::vector<std::uint8_t> spool_record(const StoredItem& item) {
  nlohmann::ordered_json j;
  j["kind"] = node::kind_name(item.kind);
  j["sensor_id"] = item.sensor_id;
  j["ts_ms"] = to_unix_ms(item.ts);
  j["item_id"] = item.item_id;
  j["size"] = item.size;
  j["received_ms"] = to_unix_ms(item.received);
  const auto meta = j.dump();
  std::vector<tar::Member> members{{"meta.json", std::vector<std::uint8_t>(meta.begin(), meta.end()), 0}};
  if (item.body) members.push_back({"body", *item.body, 0});
  return tar::write(members);
}

StoredItem parse_spool_record(std::span<const std::uint8_t> bytes) {
  StoredItem item;
  for (auto& m : tar::read(bytes)) {
    if (m.name == "meta.json") {
      const auto j = nlohmann::json::parse(std::string(m.data.begin(), m.data.end()));
      item.kind = node::parse_kind(j.at("kind").get<std::string>());
      item.sensor_id = j.at("sensor_id").get<std::string>();
      item.ts = from_unix_ms(j.at("ts_ms").get<std::int64_t>());
      item.item_id = j.at("item_id").get<std::string>();
      item.size = j.at("size").get<std::uint64_t>();
      item.received = from_unix_ms(j.at("received_ms").get<std::int64_t>());
    } else if (m.name == "body") {
      item.body = std::move(m.data);
    }
  }
  if (item.item_id.empty()) throw FormatError("spool record without meta.json");
  return item;
}

}  // namespace

std::optional<std::string> validate_request(const UploadRequest& r) {
  if (r.sensor_id.empty()) return "empty sensor_id";
  if (r.sensor_id.find_first_of("/,\\ \t\r\n") != std::string::npos) return "invalid sensor_id";
  if (r.item_id != make_item_id(r.kind, r.sensor_id, r.ts)) return "item_id does not match kind/sensor/ts";
  if (r.body && r.body->size() != r.size) return "size does not match body";
  return std::nullopt;
}

IngestServer::IngestServer(std::string id, Store* store, std::optional<fs::path> spool_dir)
    : id_(std::move(id)), store_(store), spool_dir_(std::move(spool_dir)) {
  if (store_ == nullptr) throw DomainError("server needs a store");
  if (!spool_dir_) return;
  fs::create_directories(*spool_dir_);
  // Items acked before a restart are still owed to the store.
  std::vector<fs::path> pending;
  for (const auto& e : fs::directory_iterator(*spool_dir_)) {
    if (e.is_regular_file() && e.path().extension() == ".item") pending.push_back(e.path());
  }
  std::sort(pending.begin(), pending.end());
  for (const auto& p : pending) {
    auto item = parse_spool_record(read_file(p));
    cached_bytes_ += item.size;
    cache_.emplace(item.item_id, std::move(item));
  }
}

Ack IngestServer::handle_upload(const UploadRequest& request, Timestamp now) {
  Ack ack;
  ack.item_id = request.item_id;
  if (!up_) {
    ack.error = "server down";
    return ack;
  }
  if (auto err = validate_request(request)) {
    ack.error = *err;
    return ack;
  }
  if (cache_.count(request.item_id) != 0 || store_->contains(request.kind, request.sensor_id, request.ts)) {
    ++duplicates_;
    ack.ok = true;
    return ack;
  }
  StoredItem item{request.kind, request.sensor_id, request.ts, request.item_id, request.size, now, request.body};
  if (spool_dir_) write_file_atomic(*spool_dir_ / (item.item_id + ".item"), spool_record(item));
  cached_bytes_ += item.size;
  cache_.emplace(item.item_id, std::move(item));
  ++accepted_;
  ack.ok = true;
  return ack;
}

std::size_t IngestServer::flush(Timestamp) {
  if (!storage_online_) return 0;
  // Store order is by item time so day files fill chronologically.
  std::vector<const StoredItem*> order;
  order.reserve(cache_.size());
  for (const auto& [id, item] : cache_) order.push_back(&item);
  std::sort(order.begin(), order.end(), [](const StoredItem* a, const StoredItem* b) {
    return std::tie(a->ts, a->item_id) < std::tie(b->ts, b->item_id);
  });
  const std::size_t written = store_->put_all(order);
  if (spool_dir_) {
    for (const auto* item : order) fs::remove(*spool_dir_ / (item->item_id + ".item"));
  }
  cache_.clear();
  cached_bytes_ = 0;
  return written;
}

std::optional<std::string> Assigner::assign(const std::string& node_id, const std::vector<ServerView>& servers) {
  if (auto it = assignment_.find(node_id); it != assignment_.end()) {
    const auto s = std::find_if(servers.begin(), servers.end(), [&](const ServerView& v) { return v.id == it->second; });
    if (s != servers.end() && s->up) return it->second;
    assignment_.erase(it);
  }
  std::optional<std::string> best;
  std::size_t best_load = 0;
  for (const auto& s : servers) {
    if (!s.up) continue;
    const auto l = load(s.id);
    if (!best || l < best_load || (l == best_load && s.id < *best)) {
      best = s.id;
      best_load = l;
    }
  }
  if (best) assignment_[node_id] = *best;
  return best;
}

void Assigner::release(const std::string& node_id) { assignment_.erase(node_id); }

std::optional<std::string> Assigner::current(const std::string& node_id) const {
  const auto it = assignment_.find(node_id);
  if (it == assignment_.end()) return std::nullopt;
  return it->second;
}

std::size_t Assigner::load(const std::string& server_id) const {
  return static_cast<std::size_t>(
      std::count_if(assignment_.begin(), assignment_.end(), [&](const auto& kv) { return kv.second == server_id; }));
}

std::vector<StoredItem> IngestServer::drop_cache() {
  std::vector<StoredItem> out;
  out.reserve(cache_.size());
  for (auto& [id, item] : cache_) {
    if (spool_dir_) fs::remove(*spool_dir_ / (id + ".item"));
    out.push_back(std::move(item));
  }
  cache_.clear();
  cached_bytes_ = 0;
  return out;
}

}  // namespace noisenet::ingest
