#include <catch_amalgamated.hpp>

#include <filesystem>
#include <random>

#include <httplib.h>

#include "noisenet/acoustics/minute_file.hpp"
#include "noisenet/common/errors.hpp"
#include "noisenet/common/io.hpp"
#include "noisenet/ingest/access.hpp"
#include "noisenet/ingest/http.hpp"
#include "noisenet/ingest/server.hpp"
#include "noisenet/ingest/store.hpp"
#include "noisenet/node/telemetry.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using namespace noisenet;
using namespace noisenet::ingest;

namespace {

const Timestamp t0 = parse_iso8601("2019-03-04T10:00:00Z");

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("noisenet_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

UploadRequest request(ItemKind kind, const std::string& sensor, Timestamp ts, std::string body = "") {
  UploadRequest r;
  r.kind = kind;
  r.sensor_id = sensor;
  r.ts = ts;
  r.item_id = make_item_id(kind, sensor, ts);
  if (body.empty()) {
    r.size = 150'000;
  } else {
    r.body = std::vector<std::uint8_t>(body.begin(), body.end());
    r.size = body.size();
  }
  return r;
}

std::set<std::string> file_set(const DayContents& d) {
  std::set<std::string> out;
  for (const auto& r : d.rows) out.insert(r.file);
  return out;
}

}  // namespace

TEST_CASE("item ids and names are pure functions of kind, sensor and time", "[ingest][store]") {
  CHECK(make_item_id(ItemKind::Spl, "n1", t0) == make_item_id(ItemKind::Spl, "n1", t0));
  CHECK(make_item_id(ItemKind::Spl, "n1", t0) != make_item_id(ItemKind::Audio, "n1", t0));
  CHECK(make_item_id(ItemKind::Spl, "n1", t0).size() == 64);
  CHECK(item_file_name(ItemKind::Spl, "n1", t0) == "n1_1551693600.tar");
  CHECK(item_file_name(ItemKind::Audio, "n1", t0) == "n1_1551693600000.tar.gz");
  CHECK(item_file_name(ItemKind::Status, "n1", t0) == "n1_1551693600000.json");
}

TEST_CASE("store layout, dedup and archiving", "[ingest][store]") {
  TempDir tmp("store");
  Store store(tmp.path);
  StoredItem a{ItemKind::Spl, "n1", t0, make_item_id(ItemKind::Spl, "n1", t0), 3, t0 + kSecond,
               std::vector<std::uint8_t>{1, 2, 3}};
  REQUIRE(store.put(a));
  CHECK_FALSE(store.put(a));
  CHECK(fs::exists(tmp.path / "spl" / "n1" / "2019-03-04" / "n1_1551693600.tar"));
  CHECK(fs::exists(tmp.path / "spl" / "n1" / "2019-03-04" / "index.csv"));

  StoredItem stub = a;
  stub.ts = t0 + kMinute;
  stub.item_id = make_item_id(ItemKind::Spl, "n1", stub.ts);
  stub.body.reset();
  stub.size = 150'000;
  REQUIRE(store.put(stub));
  CHECK_FALSE(fs::exists(tmp.path / "spl" / "n1" / "2019-03-04" / "n1_1551693660.tar"));

  const DayKey day{ItemKind::Spl, "n1", "2019-03-04"};
  const auto before = store.read_day(day);
  REQUIRE(before.rows.size() == 2);
  CHECK(before.rows[1].stub);
  CHECK(before.rows[1].size == 150'000);

  SECTION("quiet for 1 h: untouched") {
    CHECK(store.archive_stale_days(t0 + kHour).empty());
    CHECK(fs::is_directory(store.day_dir(day)));
  }
  SECTION("quiet for 25 h: archived, content preserved, idempotent") {
    const auto archived = store.archive_stale_days(t0 + 25 * kHour);
    REQUIRE(archived.size() == 1);
    CHECK(archived[0] == day);
    CHECK_FALSE(fs::exists(store.day_dir(day)));
    CHECK(fs::exists(store.day_tar(day)));
    const auto after = store.read_day(day);
    CHECK(after.archived);
    CHECK(file_set(after) == file_set(before));
    CHECK(after.bodies == before.bodies);
    CHECK(store.archive_stale_days(t0 + 50 * kHour).empty());
    CHECK(store.read_day(day).bodies == before.bodies);

    // Late write into the archived day goes into the tar; no directory appears.
    StoredItem late = a;
    late.ts = t0 + 2 * kMinute;
    late.item_id = make_item_id(ItemKind::Spl, "n1", late.ts);
    late.received = t0 + 30 * kHour;
    REQUIRE(store.put(late));
    CHECK_FALSE(store.put(late));
    CHECK_FALSE(fs::exists(store.day_dir(day)));
    CHECK(store.read_day(day).rows.size() == 3);
    CHECK(store.contains(ItemKind::Spl, "n1", late.ts));
  }
  SECTION("a fresh store object sees the same tree") {
    Store reopened(tmp.path);
    CHECK(reopened.contains(ItemKind::Spl, "n1", t0));
    CHECK_FALSE(reopened.put(a));
    CHECK(reopened.list_days(ItemKind::Spl) == std::vector<DayKey>{day});
    CHECK(reopened.archive_stale_days(t0 + 25 * kHour).size() == 1);
  }
}

TEST_CASE("archive round trip property", "[ingest][store][property]") {
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 20; ++trial) {
    TempDir tmp("archive_prop");
    Store store(tmp.path);
    std::map<DayKey, std::set<std::string>> expected;
    const int n = 1 + static_cast<int>(gen() % 80);
    for (int i = 0; i < n; ++i) {
      const auto sensor = "s" + std::to_string(gen() % 3);
      const auto kind = static_cast<ItemKind>(gen() % 3);
      const auto ts = t0 + Millis{static_cast<std::int64_t>(gen() % (3 * 86'400'000ULL))};
      StoredItem it{kind, sensor, ts, make_item_id(kind, sensor, ts), 0, ts, std::nullopt};
      if (gen() % 2) {
        it.body = std::vector<std::uint8_t>(gen() % 50, static_cast<std::uint8_t>(i));
        it.size = it.body->size();
      }
      if (store.put(it)) expected[Store::day_of(kind, sensor, ts)].insert(item_file_name(kind, sensor, ts));
    }
    std::map<DayKey, DayContents> pre;
    for (const auto& [k, files] : expected) pre.emplace(k, store.read_day(k));
    store.archive_stale_days(t0 + 10 * kDay);
    for (const auto& [k, files] : expected) {
      const auto d = store.read_day(k);
      REQUIRE(d.archived);
      REQUIRE(file_set(d) == files);
      REQUIRE(d.bodies == pre.at(k).bodies);
    }
  }
}

TEST_CASE("upload handling is idempotent and acks after the cache write", "[ingest][server]") {
  TempDir tmp("server");
  Store store(tmp.path / "store");
  IngestServer a("A", &store, tmp.path / "spool");

  const auto r = request(ItemKind::Spl, "n1", t0, "minute-bytes");
  auto ack = a.handle_upload(r, t0 + kSecond);
  CHECK(ack.ok);
  CHECK(ack.item_id == r.item_id);
  CHECK(fs::exists(tmp.path / "spool" / (r.item_id + ".item")));
  // Lost ack: the node retries with the same id.
  CHECK(a.handle_upload(r, t0 + 2 * kSecond).ok);
  CHECK(a.cached_items() == 1);
  CHECK(a.duplicates() == 1);

  SECTION("storage offline: items accumulate, later flush succeeds") {
    a.set_storage_online(false);
    CHECK(a.handle_upload(request(ItemKind::Spl, "n1", t0 + kMinute), t0 + kMinute).ok);
    CHECK(a.flush(t0 + kMinute) == 0);
    CHECK(a.cached_items() == 2);
    a.set_storage_online(true);
    CHECK(a.flush(t0 + 2 * kMinute) == 2);
    CHECK(a.cached_items() == 0);
    CHECK(store.read_day({ItemKind::Spl, "n1", "2019-03-04"}).rows.size() == 2);
    CHECK(a.handle_upload(r, t0 + 3 * kMinute).ok);
    CHECK(a.cached_items() == 0);
    CHECK(a.flush(t0 + 3 * kMinute) == 0);
    CHECK(store.read_day({ItemKind::Spl, "n1", "2019-03-04"}).rows.size() == 2);
  }
  SECTION("a restarted server recovers its spool") {
    IngestServer again("A", &store, tmp.path / "spool");
    CHECK(again.cached_items() == 1);
    CHECK(again.flush(t0 + kMinute) == 1);
    CHECK(store.read_day({ItemKind::Spl, "n1", "2019-03-04"}).bodies.begin()->second.size() == 12);
  }
  SECTION("down and malformed") {
    a.set_up(false);
    auto down = a.handle_upload(request(ItemKind::Spl, "n1", t0 + kHour), t0 + kHour);
    CHECK_FALSE(down.ok);
    CHECK(down.error == "server down");
    a.set_up(true);
    auto bad = request(ItemKind::Spl, "n1", t0 + kHour);
    bad.item_id = "forged";
    CHECK_FALSE(a.handle_upload(bad, t0 + kHour).ok);
    auto bad_sensor = request(ItemKind::Spl, "a/b", t0 + kHour);
    CHECK_FALSE(a.handle_upload(bad_sensor, t0 + kHour).ok);
  }
}

TEST_CASE("duplicate uploads leave a single stored copy", "[ingest][server][property]") {
  std::mt19937_64 gen(77);
  TempDir tmp("dedup");
  Store store(tmp.path);
  IngestServer a("A", &store);
  IngestServer b("B", &store);
  std::set<std::string> sent;
  for (int i = 0; i < 2000; ++i) {
    const auto ts = t0 + static_cast<int>(gen() % 300) * kMinute;
    const auto r = request(ItemKind::Spl, "n" + std::to_string(gen() % 2), ts);
    auto& server = gen() % 2 ? a : b;
    REQUIRE(server.handle_upload(r, ts + kSecond).ok);
    sent.insert(r.item_id);
    if (gen() % 50 == 0) {
      a.flush(ts);
      b.flush(ts);
    }
  }
  a.flush(t0 + kDay);
  b.flush(t0 + kDay);
  std::multiset<std::string> stored;
  for (const auto& day : store.list_days(ItemKind::Spl)) {
    for (const auto& row : store.read_day(day, false).rows) stored.insert(row.item_id);
  }
  CHECK(stored.size() == sent.size());
  CHECK(std::set<std::string>(stored.begin(), stored.end()) == sent);
}

TEST_CASE("server assignment", "[ingest][assign]") {
  Assigner assigner;
  std::vector<ServerView> both{{"A", true}, {"B", true}};
  CHECK(assigner.assign("n1", both) == "A");
  CHECK(assigner.assign("n2", both) == "B");
  CHECK(assigner.assign("n3", both) == "A");
  CHECK(assigner.assign("n4", both) == "B");
  CHECK(assigner.load("A") == 2);
  CHECK(assigner.load("B") == 2);
  CHECK(assigner.assign("n3", both) == "A");

  std::vector<ServerView> a_down{{"A", false}, {"B", true}};
  CHECK(assigner.assign("n5", a_down) == "B");
  CHECK(assigner.assign("n1", a_down) == "B");
  CHECK(assigner.assign("n1", both) == "B");
  CHECK_FALSE(assigner.assign("n6", {{"A", false}, {"B", false}}).has_value());
}

TEST_CASE("certificate-gated decryption", "[ingest][access]") {
  const auto authority = node::RsaKey::generate(2048);
  const auto snippet_key = node::RsaKey::generate(2048);
  Rng rng(8);
  const auto pcm = testsupport::synth({{500.0, 3000.0}}, node::kSnippetSamples);
  const auto container =
      node::package_snippet(pcm, "n1", t0, snippet_key.public_only(), node::seeded_random(rng));
  DecryptionServer server(authority.public_only(), snippet_key);

  const auto cert = issue_certificate(authority, "analyst", t0 + kDay);
  CHECK(AccessCertificate::from_json(cert.to_json()).signature == cert.signature);
  CHECK(server.decrypt(container, cert, t0 + kHour) == pcm);
  CHECK_THROWS_AS(server.decrypt(container, cert, t0 + kDay), AccessDenied);

  auto forged = cert;
  forged.subject = "intruder";
  CHECK_THROWS_AS(server.decrypt(container, forged, t0 + kHour), AccessDenied);
  const auto self_signed = issue_certificate(snippet_key, "analyst", t0 + kDay);
  CHECK_THROWS_AS(server.decrypt(container, self_signed, t0 + kHour), AccessDenied);

  auto tampered = container;
  tampered.payload[40] ^= 0x04;
  CHECK_THROWS_AS(server.decrypt(tampered, cert, t0 + kHour), node::AuthenticationFailure);
}

TEST_CASE("http binding", "[ingest][http]") {
  TempDir tmp("http");
  Store store(tmp.path / "store");
  IngestServer server("A", &store, tmp.path / "spool");
  Timestamp now = t0 + kHour;
  HttpBinding binding(server, [&] { return now; });
  const int port = binding.start();
  httplib::Client client("127.0.0.1", port);

  // Minute file built from silence.
  std::vector<acoustics::SplBlock> slow, fast;
  for (int i = 0; i < 60; ++i) slow.push_back({t0 + i * kSecond, acoustics::Integration::Slow, 32, 32, 32, {}, {}});
  for (int i = 0; i < 480; ++i) fast.push_back({t0 + i * Millis{125}, acoustics::Integration::Fast, 32, 32, 32, {}, {}});
  for (auto* v : {&slow, &fast}) {
    for (auto& b : *v) {
      b.octave_db.fill(32);
      b.third_octave_db.fill(32);
    }
  }
  const auto minute = acoustics::assemble_minute_file(slow, fast, "n1", t0);
  const std::string body(minute.bytes.begin(), minute.bytes.end());

  auto res = client.Post("/ingest/spl?sensor_id=n1&ts_ms=1551693600000", body, "application/x-tar");
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(res->body.find("\"status\":\"ok\"") != std::string::npos);
  CHECK(res->body.find(make_item_id(ItemKind::Spl, "n1", t0)) != std::string::npos);

  node::NodeVitals v;
  const auto status = node::telemetry_tick("n1", t0, v)->to_json();
  res = client.Post("/ingest/status", status, "application/json");
  REQUIRE(res);
  CHECK(res->status == 200);

  res = client.Post("/ingest/spl", body, "application/x-tar");
  REQUIRE(res);
  CHECK(res->status == 400);
  CHECK(res->body.find("\"status\":\"error\"") != std::string::npos);

  server.set_up(false);
  res = client.Post("/ingest/status", status, "application/json");
  REQUIRE(res);
  CHECK(res->status == 503);
  binding.stop();

  CHECK(server.flush(now) == 2);
  const auto day = store.read_day({ItemKind::Spl, "n1", "2019-03-04"});
  REQUIRE(day.bodies.size() == 1);
  CHECK(acoustics::is_readable_minute_file(day.bodies.begin()->second));
}
