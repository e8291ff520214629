#include <catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>

#include <fmt/format.h>
#include <json.hpp>

#include "noisenet/acoustics/minute_file.hpp"
#include "noisenet/common/errors.hpp"
#include "noisenet/common/io.hpp"
#include "noisenet/simnet/faults.hpp"
#include "noisenet/simnet/link.hpp"
#include "noisenet/simnet/scenario.hpp"
#include "noisenet/simnet/world.hpp"

using namespace noisenet;
using namespace noisenet::simnet;
namespace fs = std::filesystem;
using Catch::Approx;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "noisenet_test_simnet" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

ScenarioConfig one_node(Millis horizon, double quality = 60.0) {
  ScenarioConfig c;
  c.name = "unit";
  c.start = parse_iso8601("2024-03-01T00:00:00Z");
  c.horizon = horizon;
  c.nodes.push_back(NodeSpec{"N01", 65, 65, quality, quality});
  return c;
}

/// Minute-file starts stored for a sensor, read back from the store tree.
std::map<std::int64_t, ingest::IndexRow> stored_spl(ingest::Store& store, const std::string& sensor) {
  std::map<std::int64_t, ingest::IndexRow> out;
  for (const auto& day : store.list_days(node::ItemKind::Spl)) {
    if (day.sensor_id != sensor) continue;
    for (const auto& r : store.read_day(day, false).rows) {
      const auto us = r.file.find('_');
      const auto dot = r.file.find('.');
      out[parse_int(r.file.substr(us + 1, dot - us - 1)) * 1000] = r;
    }
  }
  return out;
}

std::size_t stored_in(const std::map<std::int64_t, ingest::IndexRow>& files, Timestamp from, Timestamp to) {
  std::size_t n = 0;
  for (const auto& [ms, row] : files) n += ms >= to_unix_ms(from) && ms < to_unix_ms(to);
  return n;
}

}  // namespace

TEST_CASE("link success follows the logistic map") {
  LinkParams p;
  LinkState link{70, 100, true};
  CHECK(link.success_prob(p) >= 0.999);
  CHECK(link.success_prob(p) == Approx(1.0 / (1.0 + std::exp(-70.0 / 8.0))));

  link.ap_up = false;
  Rng rng(3);
  for (int i = 0; i < 1000; ++i) REQUIRE_FALSE(link_transfer(link, 1000, rng, p));
  CHECK(link.success_prob(p) == 0.0);

  link = LinkState{50, 30, true};
  int ok = 0;
  for (int i = 0; i < 10000; ++i) ok += link_transfer(link, 1000, rng, p);
  CHECK(std::abs(ok / 10000.0 - 0.5) <= 0.02);
}

TEST_CASE("OU step stays bounded and reverts to its mean") {
  Rng rng(5);
  double x = 95;
  double sum = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    x = ou_step(x, 40, 1.0 / 1800, 4, 3, rng);
    REQUIRE(x >= 0.0);
    REQUIRE(x <= 100.0);
    sum += x;
  }
  CHECK(sum / n == Approx(40).margin(1.0));
}

TEST_CASE("scenario YAML parses, reports field paths and round-trips") {
  const std::string yaml = R"(
name: t
seed: 9
start: 2024-03-01T00:00:00Z
horizon: 2d
nodes: {count: 3, prefix: S, wifi_strength: [50, 80], wifi_quality: [40, 70]}
node: {cache_capacity_bytes: 12e9}
faults:
  - {kind: power_failure, target: S02, onset: 6h, duration: 2h}
  - {kind: server_outage, target: network, onset: "2024-03-01T12:00:00Z", duration: 30m, params: {lose_data: true}}
fault_generator:
  mix: {tmp_leak: 1}
  durations: {tmp_leak: [80h, 100h]}
  params: {tmp_leak: {hours_to_full: 72}}
)";
  const auto c = parse_scenario(yaml);
  REQUIRE(c.nodes.size() == 3);
  CHECK(c.nodes[1].id == "S02");
  CHECK(c.nodes[0].quality_hi == 70);
  CHECK(c.node.cache_capacity_bytes == 12'000'000'000ULL);
  CHECK(c.seed == 9u);
  REQUIRE(c.faults.size() == 2);
  CHECK(c.faults[0].onset == c.start + kHour * 6);
  CHECK(c.faults[1].param("lose_data", 0) == 1);
  REQUIRE(c.generator);
  CHECK(c.generator->params.at(FaultKind::TmpLeak).at("hours_to_full") == 72);

  const auto again = parse_scenario(scenario_to_yaml(c));
  CHECK(scenario_to_yaml(again) == scenario_to_yaml(c));
  CHECK(again.faults == c.faults);

  const auto field_of = [](const std::string& text) {
    try {
      parse_scenario(text);
    } catch (const ConfigError& e) {
      return e.field_path();
    }
    return std::string("<none>");
  };
  const std::string head = "start: 2024-03-01\nhorizon: 1d\n";
  CHECK(field_of(head + "nodes: []\n") == "nodes");
  CHECK(field_of(head + "nodes: {count: 0}\n") == "nodes");
  CHECK(field_of("start: 2024-03-01\nhorizon: 0h\nnodes: {count: 1}\n") == "horizon");
  CHECK(field_of(head + "nodes: {count: 1}\nservers: [A]\n") == "servers");
  CHECK(field_of(head + "nodes: {count: 1}\nfaults: [{kind: ap_outage, target: N01, onset: 30h, duration: 1h}]\n") ==
        "faults[0].onset");
  CHECK(field_of(head + "nodes: {count: 1}\nfaults: [{kind: ap_outage, target: N09, onset: 1h, duration: 1h}]\n") ==
        "faults[0].target");
  CHECK(field_of(head + "nodes: {count: 1}\nfaults: [{kind: meteor, target: N01, onset: 1h, duration: 1h}]\n") ==
        "faults[0].kind");
  CHECK(field_of(head + "nodes: {count: 1}\nlink: {q0: abc}\n") == "link.q0");
  CHECK(field_of(head + "nodes: {count: 1}\nbogus: 1\n") == "bogus");
}

TEST_CASE("build_world validates and is deterministic") {
  auto c = one_node(kHour);
  c.nodes.clear();
  CHECK_THROWS_AS(build_world(c, 1, {scratch("empty")}), ConfigError);

  ScenarioConfig big = one_node(kDay * 540);
  big.nodes.clear();
  for (int i = 1; i <= 31; ++i) big.nodes.push_back(NodeSpec{fmt::format("N{:02}", i), 40, 90, 30, 80});
  auto w1 = build_world(big, 7, {scratch("a")});
  auto w2 = build_world(big, 7, {scratch("b")});
  auto w3 = build_world(big, 8, {scratch("c")});
  CHECK(w1.node_count() == 31);
  CHECK(w1.state_hash() == w2.state_hash());
  CHECK(w1.state_hash() != w3.state_hash());
  CHECK(w1.tmp_usage_pct("N05") == Approx(0.1));
  CHECK(w1.link("N05").signal_quality_pct >= 30);
  CHECK(w1.link("N05").signal_quality_pct <= 80);
}

TEST_CASE("a healthy node delivers sixty minute-files an hour") {
  auto c = one_node(kHour * 2);
  auto w = build_world(c, 11, {scratch("healthy")});
  w.advance(c.start + kHour + kMinute * 5);
  const auto files = stored_spl(w.store(), "N01");
  CHECK(stored_in(files, c.start, c.start + kHour) == 60);
  for (const auto& [ms, row] : files) CHECK(row.received_ms >= ms + 60'000);  // causality
  CHECK_THROWS_AS(w.advance(c.start), DomainError);
}

TEST_CASE("a 30 minute AP outage is absorbed by store-and-forward") {
  auto c = one_node(kHour * 3);
  const auto onset = c.start + kMinute * 70;
  c.faults.push_back(FaultSpec{FaultKind::ApOutage, "N01", onset, kMinute * 30, {}});
  auto w = build_world(c, 12, {scratch("ap")});
  w.advance(onset + kMinute * 29);
  {
    const auto files = stored_spl(w.store(), "N01");
    CHECK(stored_in(files, onset, onset + kMinute * 28) == 0);
    CHECK(w.cache("N01").count(node::ItemKind::Spl) >= 28);
  }
  w.run_to_end();
  const auto files = stored_spl(w.store(), "N01");
  for (int h = 0; h < 3; ++h) {
    INFO("hour " << h);
    CHECK(stored_in(files, c.start + kHour * h, c.start + kHour * (h + 1)) == 60);
  }
  const auto s = w.summary("N01");
  CHECK(s.spl.deleted == 0);
  CHECK(s.spl.generated == files.size() + s.spl.in_cache);
}

TEST_CASE("power failure silences telemetry and generation") {
  auto c = one_node(kHour * 6);
  const auto onset = c.start + kHour * 2;
  c.faults.push_back(FaultSpec{FaultKind::PowerFailure, "N01", onset, kHour * 2, {}});
  const auto dir = scratch("power");
  auto w = build_world(c, 13, {dir});
  w.run_to_end();
  w.export_run();
  const auto rows = read_telemetry_csv(dir / "telemetry.csv");
  std::size_t inside = 0, after = 0;
  for (const auto& r : rows) {
    inside += r.ts >= onset && r.ts < onset + kHour * 2;
    after += r.ts >= onset + kHour * 2;
  }
  CHECK(inside == 0);
  CHECK(after > 2000);
  const auto files = stored_spl(w.store(), "N01");
  CHECK(stored_in(files, onset, onset + kHour * 2) == 0);
  CHECK(stored_in(files, onset + kHour * 2, onset + kHour * 3) == 60);
  // The minute ending exactly at the cut is never assembled.
  CHECK(stored_in(files, c.start, onset) == 119);
}

TEST_CASE("tmp leak fills in 72 hours and stops generation but not connectivity") {
  auto c = one_node(kHour * 80, 90);
  c.telemetry = TelemetryCapture::None;
  c.store.audio = false;
  const auto onset = c.start + kHour;
  c.faults.push_back(FaultSpec{FaultKind::TmpLeak, "N01", onset, kMinute * (78 * 60 + 30), {}});
  auto w = build_world(c, 14, {scratch("tmp")});
  w.advance(onset + kHour * 36);
  CHECK(w.tmp_usage_pct("N01") == Approx(0.1 + 99.9 * 0.5).margin(0.1));
  CHECK(w.generating("N01"));
  const auto events = w.advance(c.end() - kHour);
  Timestamp full{};
  for (const auto& e : events) {
    if (e.type == "tmp_full") full = e.at;
  }
  CHECK(std::abs((full - (onset + kHour * 72)).count()) <= 3000);
  CHECK_FALSE(w.generating("N01"));
  const auto before = w.summary("N01");
  CHECK(before.telemetry_delivered > before.telemetry_produced * 9 / 10);
  const auto files = stored_spl(w.store(), "N01");
  CHECK(stored_in(files, full + kMinute, c.end()) == 0);
  CHECK(stored_in(files, full - kHour * 2, full - kHour) == 60);
  w.run_to_end();
  CHECK(w.generating("N01"));
  CHECK(w.tmp_usage_pct("N01") == Approx(0.1));
}

TEST_CASE("wifi degradation lowers link quality and upload success") {
  auto c = one_node(kHour * 12);
  c.telemetry = TelemetryCapture::None;
  c.faults.push_back(
      FaultSpec{FaultKind::WifiDegradation, "N01", c.start + kHour, kHour * 10, {{"quality_delta", -40}, {"ramp_hours", 1}}});
  auto w = build_world(c, 15, {scratch("wifi")});
  double q = 0;
  int n = 0;
  for (auto t = c.start + kHour * 3; t < c.start + kHour * 10; t += kMinute) {
    w.advance(t);
    q += w.link("N01").signal_quality_pct;
    ++n;
    const auto& l = w.link("N01");
    REQUIRE(l.success_prob(c.link.params) ==
            Approx(l.connected(c.link.params) ? 1.0 / (1.0 + std::exp(-(l.signal_quality_pct - 30) / 8)) : 0.0));
  }
  CHECK(q / n == Approx(20).margin(3));
  const auto s = w.summary("N01");
  // The degraded link delivers far fewer status records than a healthy one would.
  CHECK(s.telemetry_delivered < s.telemetry_produced * 6 / 10);
}

TEST_CASE("a two day network outage is within cache endurance") {
  auto c = one_node(kDay * 3, 90);
  c.telemetry = TelemetryCapture::None;
  c.faults.push_back(FaultSpec{FaultKind::ServerOutage, "network", c.start + kHour * 6, kDay * 2, {}});
  auto w = build_world(c, 16, {scratch("network")});
  w.advance(c.start + kHour * 6 + kDay * 2 - kMinute);
  CHECK(stored_in(stored_spl(w.store(), "N01"), c.start + kHour * 7, c.start + kDay * 2) == 0);
  w.run_to_end();
  const auto files = stored_spl(w.store(), "N01");
  CHECK(stored_in(files, c.start, c.end() - kHour) == 71 * 60);
  CHECK(w.summary("N01").spl.deleted == 0);
}

TEST_CASE("cache endurance: first enactment and audio-before-SPL loss") {
  auto c = one_node(kDay * 6, 90);
  c.telemetry = TelemetryCapture::None;
  c.node.snippet_gap_min = c.node.snippet_gap_max = std::chrono::seconds(10);
  c.faults.push_back(FaultSpec{FaultKind::ApOutage, "N01", c.start, kDay * 5, {}});
  auto w = build_world(c, 17, {scratch("endurance")});
  w.run_to_end();
  const auto s = w.summary("N01");
  const double analytic = node::analytic_first_enactment_s(c.node.cache_capacity_bytes, 150000.0 / 60, 500000.0 / 20);
  REQUIRE(s.first_deletion);
  const double simulated = std::chrono::duration<double>(*s.first_deletion - c.start).count();
  CHECK(std::abs(simulated - analytic) <= 60.0);
  CHECK(s.audio.deleted > 0);
  CHECK(s.spl.deleted == 0);
  CHECK_FALSE(s.first_spl_deletion);
  const auto files = stored_spl(w.store(), "N01");
  CHECK(files.size() == s.spl.generated);
  CHECK(stored_in(files, c.start, c.start + kDay * 5) == 5 * 1440);
}

TEST_CASE("runs conserve minute-files and are reproducible") {
  auto c = one_node(kDay * 2);
  c.nodes.push_back(NodeSpec{"N02", 60, 70, 25, 45});
  c.nodes.push_back(NodeSpec{"N03", 60, 70, 50, 70});
  c.link.ack_loss_prob = 0.01;
  c.faults.push_back(FaultSpec{FaultKind::PowerFailure, "N01", c.start + kHour * 5, kHour * 3, {}});
  c.faults.push_back(FaultSpec{FaultKind::WifiDegradation, "N03", c.start + kHour * 10, kHour * 12,
                               {{"wipe_cache_on_repair", 1}}});
  c.faults.push_back(FaultSpec{FaultKind::ServerOutage, "A", c.start + kHour * 20, kHour * 2, {{"lose_data", 1}}});
  c.faults.push_back(FaultSpec{FaultKind::ScriptCrash, "N02", c.start + kHour * 30, kHour * 2, {}});
  c.faults.push_back(FaultSpec{FaultKind::MemoryLeak, "N02", c.start + kHour * 1, kHour * 40, {{"rate_pct_per_hour", 4}}});

  const auto run = [&](const std::string& name) {
    auto w = build_world(c, 99, {scratch(name)});
    w.run_to_end();
    w.export_run();
    return w;
  };
  auto w = run("conserve1");
  std::uint64_t restarts = 0;
  for (const auto& id : w.node_ids()) {
    INFO(id);
    const auto s = w.summary(id);
    const auto files = stored_spl(w.store(), id);
    CHECK(s.spl.generated ==
          files.size() + s.spl.in_cache + s.spl.deleted + s.spl.refused + s.spl.wiped + s.spl.server_lost);
    std::uint64_t gen = 0, lost = 0;
    for (const auto& [hour, h] : w.hour_ledger(id)) {
      gen += h.generated;
      lost += h.deleted + h.refused + h.wiped + h.server_lost;
    }
    CHECK(gen == s.spl.generated);
    CHECK(lost == s.spl.deleted + s.spl.refused + s.spl.wiped + s.spl.server_lost);
    for (const auto& [ms, row] : files) CHECK(row.received_ms >= ms + 60'000);
    restarts += s.restarts;
  }
  CHECK(w.summary("N03").spl.wiped > 0);
  CHECK(restarts > 0);

  auto w2 = run("conserve2");
  CHECK(w.state_hash() == w2.state_hash());
}

TEST_CASE("exported runs are byte-identical and self-describing") {
  auto c = one_node(kHour * 6);
  c.nodes.push_back(NodeSpec{"N02", 60, 60, 35, 35});
  const auto d1 = scratch("export1");
  const auto d2 = scratch("export2");
  for (const auto& d : {d1, d2}) {
    auto w = build_world(c, 21, {d});
    w.run_to_end();
    w.export_run();
  }
  CHECK(read_text(d1 / "telemetry.csv") == read_text(d2 / "telemetry.csv"));
  CHECK(read_text(d1 / "manifest.json") == read_text(d2 / "manifest.json"));
  CHECK(read_text(d1 / "faults.json") == "[]\n");
  const auto m = nlohmann::json::parse(read_text(d1 / "manifest.json"));
  CHECK(m.at("seed") == 21);
  CHECK(m.at("scenario_sha256").get<std::string>().size() == 64);
  CHECK(parse_scenario(read_text(d1 / "scenario.yaml")).nodes.size() == 2);

  // Telemetry cadence: per node, gaps are whole multiples of 3 s.
  std::map<std::string, Timestamp> last;
  for (const auto& r : read_telemetry_csv(d1 / "telemetry.csv")) {
    REQUIRE(to_unix_ms(r.ts) % 3000 == 0);
    if (last.count(r.node_id)) REQUIRE((r.ts - last[r.node_id]).count() % 3000 == 0);
    REQUIRE((!last.count(r.node_id) || r.ts > last[r.node_id]));
    last[r.node_id] = r.ts;
  }
}

TEST_CASE("capture windows limit the telemetry log") {
  auto c = one_node(kHour * 4, 90);
  CaptureWindows windows{{"N01", c.start + kHour * 2}};
  const auto dir = scratch("windows");
  auto w = build_world(c, 22, {dir, windows});
  w.run_to_end();
  w.export_run();
  const auto rows = read_telemetry_csv(dir / "telemetry.csv");
  CHECK(rows.size() > 1100);
  for (const auto& r : rows) REQUIRE(floor_hour(r.ts) == c.start + kHour * 2);
}

TEST_CASE("full payload runs store readable minute-files") {
  auto c = one_node(kMinute * 20, 90);
  c.store.payload = PayloadMode::Full;
  auto w = build_world(c, 23, {scratch("full")});
  w.run_to_end();
  std::size_t readable = 0;
  for (const auto& day : w.store().list_days(node::ItemKind::Spl)) {
    const auto contents = w.store().read_day(day, true);
    for (const auto& r : contents.rows) {
      REQUIRE_FALSE(r.stub);
      readable += acoustics::is_readable_minute_file(contents.bodies.at(r.file));
    }
  }
  CHECK(readable == 20);
}

TEST_CASE("inject_fault rejects unknown targets and past onsets") {
  auto c = one_node(kHour * 4);
  auto w = build_world(c, 24, {scratch("inject")});
  CHECK_THROWS_AS(w.inject_fault(FaultSpec{FaultKind::PowerFailure, "N77", c.start + kHour, kHour, {}}), ConfigError);
  CHECK_THROWS_AS(w.inject_fault(FaultSpec{FaultKind::ServerOutage, "C", c.start + kHour, kHour, {}}), ConfigError);
  w.advance(c.start + kHour * 2);
  CHECK_THROWS_AS(w.inject_fault(FaultSpec{FaultKind::PowerFailure, "N01", c.start + kHour, kHour, {}}), DomainError);
  w.inject_fault(FaultSpec{FaultKind::PowerFailure, "N01", c.start + kHour * 3, kHour, {}});
  w.advance(c.start + kHour * 3 + kMinute);
  CHECK_FALSE(w.powered("N01"));
}

TEST_CASE("generated faults respect the horizon and the gap") {
  FaultGeneratorConfig g;
  g.mix = {{FaultKind::TmpLeak, 1}, {FaultKind::PowerFailure, 1}};
  g.durations = {{FaultKind::TmpLeak, {kHour * 80, kHour * 120}}, {FaultKind::PowerFailure, {kHour * 8, kHour * 36}}};
  const auto start = parse_iso8601("2024-01-01");
  const auto end = start + kDay * 60;
  Rng rng(4);
  const auto faults = generate_faults(g, {"N01", "N02", "N03"}, start, end, rng);
  CHECK(faults.size() >= 6);
  std::map<std::string, Timestamp> last_end;
  for (const auto& f : faults) {
    CHECK(f.onset >= start + g.first_after);
    CHECK(f.end() <= end);
    if (last_end.count(f.target)) CHECK(f.onset - last_end[f.target] >= g.gap.min);
    last_end[f.target] = f.end();
  }
  Rng again(4);
  CHECK(generate_faults(g, {"N01", "N02", "N03"}, start, end, again) == faults);
}
