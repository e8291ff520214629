// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
// Usage: acceptance [--only N]... [--scenarios DIR]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <numbers>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <json.hpp>

#include "noisenet/acoustics/levels.hpp"
#include "noisenet/acoustics/weighting.hpp"
#include "noisenet/cli/commands.hpp"
#include "noisenet/common/errors.hpp"
#include "noisenet/common/io.hpp"
#include "noisenet/common/rng.hpp"
#include "noisenet/ingest/store.hpp"
#include "noisenet/monitor/alerts.hpp"
#include "noisenet/monitor/yield.hpp"
#include "noisenet/node/cache.hpp"
#include "noisenet/node/crypto.hpp"
#include "noisenet/node/snippet.hpp"
#include "noisenet/predict/experiment.hpp"
#include "noisenet/predict/lda.hpp"
#include "noisenet/predict/stats.hpp"
#include "noisenet/simnet/soundscape.hpp"
#include "noisenet/simnet/world.hpp"

using namespace noisenet;
namespace fs = std::filesystem;

namespace {

#ifndef NOISENET_SCENARIOS
#define NOISENET_SCENARIOS "scenarios"
#endif

fs::path g_scenarios = NOISENET_SCENARIOS;

struct Outcome {
  bool pass = true;
  std::vector<std::string> notes;

  void check(bool ok, std::string what) {
    if (!ok) pass = false;
    notes.push_back((ok ? "" : "!") + std::move(what));
  }
};

double seconds_since(std::chrono::steady_clock::time_point t) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "noisenet_acceptance" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

double db(double energy) { return 10.0 * std::log10(energy); }

std::vector<std::int16_t> synth(const std::vector<std::array<double, 3>>& tones, std::size_t n) {
  std::vector<std::int16_t> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / 48000.0;
    double v = 0.0;
    for (const auto& [f, a, ph] : tones) v += a * std::sin(2.0 * std::numbers::pi * f * t + ph);
    out[i] = static_cast<std::int16_t>(std::lround(std::clamp(v, -32768.0, 32767.0)));
  }
  return out;
}

acoustics::AudioFrame frame_of(std::vector<std::int16_t> samples) {
  acoustics::AudioFrame f;
  f.samples = std::move(samples);
  f.start_time = from_unix_ms(1'500'000'000'000);
  return f;
}

// IEC 61672-1 A-weighting, written out independently of the library.
double iec_a(double f) {
  const double f1 = 20.598997, f2 = 107.65265, f3 = 737.86223, f4 = 12194.217;
  const double ra = (f4 * f4 * std::pow(f, 4)) /
                    ((f * f + f1 * f1) * std::sqrt((f * f + f2 * f2) * (f * f + f3 * f3)) * (f * f + f4 * f4));
  return 20.0 * std::log10(ra) + 2.000;
}

Outcome acoustics_criterion() {
  Outcome o;
  const auto start = std::chrono::steady_clock::now();

  // Exact base-ten third-octave frequencies, 31.5 Hz (band 15) to 16 kHz (band 42).
  double worst = 0.0;
  for (int band = 15; band <= 42; ++band) {
    const double f = 1000.0 * std::pow(10.0, (band - 30) / 10.0);
    worst = std::max(worst, std::abs(acoustics::weighting_gain_db(f, acoustics::Weighting::A) - iec_a(f)));
  }
  o.check(worst <= 0.2, fmt::format("A-weighting max |err| {:.4f} dB", worst));

  const auto sine = synth({{1000.0, 32767.0, 0.0}}, acoustics::kSamplesPerSecond);
  double ms = 0.0;
  for (auto v : sine) ms += (v / 32768.0) * (v / 32768.0);
  ms /= static_cast<double>(sine.size());
  const auto lv = acoustics::compute_block_levels(frame_of(sine), acoustics::Calibration{114.0 - db(ms)});
  const double diff = std::abs(lv.slow.level_a_db - lv.slow.level_z_db);
  o.check(diff <= 0.1, fmt::format("1 kHz |dBA-dBZ| {:.4f}", diff));

  // Band-limited noise: dense random-phase multisine inside 30 Hz .. 18 kHz.
  Rng rng(2024);
  double worst_sum = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<std::array<double, 3>> tones;
    for (int i = 0; i < 120; ++i) {
      tones.push_back({std::floor(rng.uniform(30.0, 18000.0)), rng.uniform(30.0, 250.0), rng.uniform(0.0, 6.283)});
    }
    const auto raw = acoustics::compute_block_levels_raw(frame_of(synth(tones, acoustics::kSamplesPerSecond)),
                                                         acoustics::Calibration{90.0});
    double sum = 0.0;
    for (double v : raw.slow.third_octave_db) sum += std::pow(10.0, v / 10.0);
    worst_sum = std::max(worst_sum, std::abs(db(sum) - raw.slow.level_z_db));
  }
  o.check(worst_sum <= 0.5, fmt::format("third-octave sum vs broadband max {:.4f} dB", worst_sum));

  const double t = seconds_since(start);
  o.check(t < 10.0, fmt::format("{:.1f} s", t));
  return o;
}

Outcome crypto_criterion() {
  Outcome o;
  const auto start = std::chrono::steady_clock::now();
  const auto key = node::RsaKey::generate(2048);
  const auto pub = key.public_only();
  Rng rng(77);
  const auto random = node::seeded_random(rng);
  std::size_t exact = 0, rejected = 0, silent = 0;
  const Timestamp t0 = from_unix_ms(1'600'000'000'000);
  for (int i = 0; i < 1000; ++i) {
    // Uniform noise of random level plus a tone of random pitch, level and phase.
    std::vector<std::int16_t> pcm(node::kSnippetSamples);
    const double half_width = std::pow(10.0, rng.uniform(0.0, 4.0)) * std::sqrt(3.0);
    const double amp = rng.uniform(0.0, 8000.0);
    const std::complex<double> step = std::polar(1.0, 2.0 * std::numbers::pi * rng.uniform(50.0, 8000.0) / 48000.0);
    std::complex<double> phasor = std::polar(amp, rng.uniform(0.0, 2.0 * std::numbers::pi));
    for (auto& sample : pcm) {
      const double v = rng.uniform(-half_width, half_width) + phasor.imag();
      phasor *= step;
      sample = static_cast<std::int16_t>(std::clamp(std::lround(v), -32768L, 32767L));
    }
    const auto sensor = fmt::format("N{:02}", i % 31);
    const auto c = node::package_snippet(pcm, sensor, t0 + kMinute * i, pub, random);
    const auto back = node::SnippetContainer::from_bytes(c.to_bytes());
    if (node::unpack_snippet(back, key) == pcm) ++exact;

    auto flipped = back;
    const auto bit = rng.below(flipped.payload.size() * 8);
    flipped.payload[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
    try {
      node::unpack_snippet(flipped, key);
      ++silent;
    } catch (const node::AuthenticationFailure&) {
      ++rejected;
    }
  }
  o.check(exact == 1000, fmt::format("{}/1000 bit-exact", exact));
  o.check(rejected == 1000 && silent == 0, fmt::format("{}/1000 flips rejected, {} silent", rejected, silent));
  const double t = seconds_since(start);
  o.check(t < 60.0, fmt::format("{:.1f} s", t));
  return o;
}

simnet::ScenarioConfig one_node(Millis horizon, double quality) {
  simnet::ScenarioConfig c;
  c.name = "acceptance";
  c.start = parse_iso8601("2024-03-01T00:00:00Z");
  c.horizon = horizon;
  c.nodes.push_back(simnet::NodeSpec{"N01", 65, 65, quality, quality});
  return c;
}

simnet::WorldOptions options_for(const fs::path& dir) {
  simnet::WorldOptions w;
  w.out_dir = dir;
  return w;
}

// A 5-day AP outage at nominal rates, run once and shared by two criteria.
struct Endurance {
  simnet::ScenarioConfig config;
  simnet::NodeSummary summary;
  std::uint64_t stored_spl = 0;
};

const Endurance& endurance_run() {
  static const Endurance e = [] {
    Endurance r;
    r.config = one_node(kDay * 6, 90);
    r.config.telemetry = simnet::TelemetryCapture::None;
    r.config.node.snippet_gap_min = r.config.node.snippet_gap_max = std::chrono::seconds(10);
    r.config.faults.push_back({simnet::FaultKind::ApOutage, "N01", r.config.start, kDay * 5, {}});
    auto w = simnet::build_world(r.config, 17, options_for(scratch("endurance")));
    w.run_to_end();
    r.summary = w.summary("N01");
    const auto index = monitor::scan_store(w.store());
    for (const auto& [hour, n] : index.readable.at("N01")) r.stored_spl += n;
    return r;
  }();
  return e;
}

Outcome deletion_criterion() {
  Outcome o;
  std::mt19937_64 gen(20240611);
  std::size_t violations = 0, accounting = 0, deletions = 0;
  const Timestamp t0 = from_unix_ms(1'600'000'000'000);
  for (int seq = 0; seq < 10'000; ++seq) {
    node::CacheState cache(10'000);
    std::vector<node::CacheEntry> live;
    int clock = 0;
    const int ops = 20 + static_cast<int>(gen() % 60);
    for (int op = 0; op < ops; ++op) {
      const auto choice = gen() % 10;
      if (choice < 6) {
        const bool audio = gen() % 3 != 0;
        node::CacheEntry e{"e" + std::to_string(op), audio ? node::ItemKind::Audio : node::ItemKind::Spl,
                           t0 + (++clock) * kSecond, 1 + gen() % 1500};
        if (cache.add(e)) live.push_back(e);
      } else if (choice < 8 && !live.empty()) {
        const auto i = gen() % live.size();
        if (!cache.remove(live[i].id)) ++accounting;
        live.erase(live.begin() + static_cast<std::ptrdiff_t>(i));
      } else {
        for (const auto& d : node::tick_deletion_policy(cache)) {
          ++deletions;
          const bool any_audio =
              std::any_of(live.begin(), live.end(), [](auto& e) { return e.kind == node::ItemKind::Audio; });
          if (d.kind == node::ItemKind::Spl && any_audio) ++violations;
          Timestamp oldest = Timestamp::max();
          for (const auto& e : live) {
            if (e.kind == d.kind) oldest = std::min(oldest, e.created_at);
          }
          if (d.created_at != oldest) ++violations;
          if (auto it = std::find(live.begin(), live.end(), d); it != live.end()) live.erase(it);
          else ++accounting;
        }
      }
      std::uint64_t sum = 0;
      for (const auto& e : live) sum += e.size_bytes;
      if (cache.used_bytes() != sum || cache.size() != live.size() || sum > cache.capacity_bytes()) ++accounting;
    }
  }
  o.check(violations == 0, fmt::format("{} deletions, {} policy violations", deletions, violations));
  o.check(accounting == 0, fmt::format("{} accounting mismatches", accounting));

  const auto& e = endurance_run();
  // One 10 s snippet per 10 s snippet plus gap; one minute-file per minute.
  const auto& cfg = e.config.node;
  const double cycle_s = 10.0 + std::chrono::duration<double>(cfg.snippet_gap_min).count();
  const double analytic = node::analytic_first_enactment_s(
      cfg.cache_capacity_bytes, static_cast<double>(cfg.spl_minute_bytes) / 60.0,
      static_cast<double>(cfg.audio_snippet_bytes) / cycle_s);
  if (!e.summary.first_deletion) {
    o.check(false, "no deletion in the endurance run");
  } else {
    const double simulated = std::chrono::duration<double>(*e.summary.first_deletion - e.config.start).count();
    o.check(std::abs(simulated - analytic) <= 60.0,
            fmt::format("first enactment analytic {:.0f} s, simulated {:.0f} s", analytic, simulated));
  }
  return o;
}

Outcome store_forward_criterion() {
  Outcome o;
  {
    auto c = one_node(kHour * 3, 60);
    const auto onset = c.start + kMinute * 70;
    c.faults.push_back({simnet::FaultKind::ApOutage, "N01", onset, kMinute * 30, {}});
    auto w = simnet::build_world(c, 12, options_for(scratch("ap")));
    w.run_to_end();
    const auto s = w.summary("N01");
    const auto matrix = monitor::yield_matrix(w.store(), {"N01"}, c.start, c.end());
    bool all_full = !matrix.cells.empty();
    for (const auto& row : matrix.cells) {
      for (double y : row) all_full = all_full && y == 100.0;
    }
    std::uint64_t stored = 0;
    const auto index = monitor::scan_store(w.store());
    for (const auto& [hour, n] : index.readable.at("N01")) stored += n;
    o.check(stored == s.spl.generated && s.spl.deleted == 0,
            fmt::format("30 min outage: {}/{} minute-files on server", stored, s.spl.generated));
    o.check(all_full, "30 min outage: every hour at 100% yield");
  }
  const auto& e = endurance_run();
  const auto& s = e.summary;
  o.check(s.audio.deleted > 0, fmt::format("5 day outage: {} audio deletions", s.audio.deleted));
  o.check(s.spl.deleted == 0 && !s.first_spl_deletion, fmt::format("5 day outage: {} SPL deletions", s.spl.deleted));
  {
    // A 1 GB cache cannot hold five days of SPL, so SPL goes too, after the audio.
    auto c = one_node(kDay * 6, 90);
    c.telemetry = simnet::TelemetryCapture::None;
    c.node.cache_capacity_bytes = 1'000'000'000ULL;
    c.faults.push_back({simnet::FaultKind::ApOutage, "N01", c.start, kDay * 5, {}});
    auto w = simnet::build_world(c, 18, options_for(scratch("small_cache")));
    w.run_to_end();
    const auto t = w.summary("N01");
    const bool order = t.first_deletion && t.first_spl_deletion && t.audio.deleted > 0 &&
                       *t.first_deletion < *t.first_spl_deletion;
    o.check(order, fmt::format("5 day outage, 1 GB cache: {} audio then {} SPL deletions, first SPL loss {} h after "
                               "the first audio loss",
                               t.audio.deleted, t.spl.deleted,
                               t.first_spl_deletion && t.first_deletion
                                   ? (*t.first_spl_deletion - *t.first_deletion) / kHour
                                   : -1));
  }
  o.check(e.stored_spl + s.spl.in_cache + s.spl.deleted == s.spl.generated,
          fmt::format("5 day outage: {} of {} minute-files on server", e.stored_spl, s.spl.generated));
  return o;
}

struct DemoOutput {
  std::string telemetry;
  std::string report;
};

DemoOutput run_demo(const fs::path& dir) {
  const auto run = dir / "run";
  cli::cmd_simulate({g_scenarios / "demo.yaml", std::nullopt, run});
  cli::cmd_analyze(run);
  cli::DatasetOptions d;
  d.run_dir = run;
  cli::cmd_dataset(d);
  cli::TrainOptions t;
  t.dataset_dir = run / "dataset";
  const auto trained = cli::cmd_train(t);
  return {read_text(run / "telemetry.csv"), read_text(trained.dir / "report.json")};
}

Outcome determinism_criterion() {
  Outcome o;
  const auto a = run_demo(scratch("demo1"));
  const auto b = run_demo(scratch("demo2"));
  o.check(!a.telemetry.empty() && a.telemetry == b.telemetry,
          fmt::format("telemetry.csv {} bytes, identical: {}", a.telemetry.size(), a.telemetry == b.telemetry));
  o.check(!a.report.empty() && a.report == b.report,
          fmt::format("report.json {} bytes, identical: {}", a.report.size(), a.report == b.report));
  return o;
}

double angle_deg(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double c = std::abs(a.dot(b)) / (a.norm() * b.norm());
  return std::acos(std::min(1.0, c)) * 180.0 / std::numbers::pi;
}

Outcome statistics_criterion() {
  Outcome o;
  Rng rng(5);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> x(30 + rng.below(500)), z(30 + rng.below(500));
    for (auto& v : x) v = rng.normal(3, 2);
    for (auto& v : z) v = rng.normal(3.3, 1);
    auto moments = [](const std::vector<double>& v) {
      long double s = 0, ss = 0;
      for (double e : v) s += e;
      const long double m = s / v.size();
      for (double e : v) ss += (e - m) * (e - m);
      return std::pair<double, double>(static_cast<double>(m), static_cast<double>(ss / (v.size() - 1)));
    };
    const auto [mx, vx] = moments(x);
    const auto [mz, vz] = moments(z);
    const double expected = (mx - mz) / std::sqrt(vx / x.size() + vz / z.size());
    const auto r = predict::mean_comparison_ztest(x, z);
    worst = std::max(worst, std::abs(r.z - expected) / std::max(1.0, std::abs(expected)));
    worst = std::max(worst, std::abs(r.p_two_sided - std::erfc(std::abs(expected) / std::sqrt(2.0))));
  }
  o.check(worst <= 1e-9, fmt::format("z-test vs closed form max err {:.2e}", worst));

  std::vector<double> a(100'000), b(100'000);
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = i % 2 ? 1.0 : -1.0;
    b[i] = a[i] + 0.1;
  }
  const double z = predict::mean_comparison_ztest(a, b).z;
  o.check(std::abs(z - (-22.36)) <= 0.01, fmt::format("constructed case z = {:.4f}", z));

  const std::size_t n = 5000;
  const int d = 10, axis = 3;
  Eigen::MatrixXd x(2 * n, d);
  std::vector<int> y;
  Rng g(7);
  for (std::size_t i = 0; i < 2 * n; ++i) {
    const int c = i < n ? 0 : 1;
    for (int j = 0; j < d; ++j) x(i, j) = g.normal(0.0, 1.0 + 0.2 * j);
    x(i, axis) += c * 2.0;
    y.push_back(c);
  }
  const auto m = predict::lda_fit(x, y, 2);
  const Eigen::VectorXd c1 = m.components.col(0);
  const double best = predict::fisher_criterion(c1, x, y);
  int beaten = 0;
  Rng r(8);
  for (int k = 0; k < 100; ++k) {
    Eigen::VectorXd w(d);
    for (int j = 0; j < d; ++j) w(j) = r.normal(0, 1);
    beaten += best > predict::fisher_criterion(w.normalized(), x, y);
  }
  o.check(beaten == 100, fmt::format("component 1 beats {}/100 random projections", beaten));
  const double angle = angle_deg(c1, Eigen::VectorXd::Unit(d, axis));
  o.check(angle < 5.0, fmt::format("separating axis recovered within {:.3f} deg", angle));
  return o;
}

// Kind of the fault that caused the downtime following a prefail window.
std::optional<std::string> cause_of(const nlohmann::json& faults, const std::string& sensor, Timestamp downtime_start) {
  std::optional<std::string> best;
  Millis best_gap = Millis::max();
  for (const auto& f : faults) {
    if (f.at("target") != sensor) continue;
    const auto onset = from_unix_ms(f.at("onset_ms").get<std::int64_t>());
    const auto end = onset + Millis(f.at("duration_ms").get<std::int64_t>());
    // The downtime's first hour overlaps the fault, which began no later than it.
    if (onset >= downtime_start + kHour || end <= downtime_start) continue;
    const auto gap = downtime_start - onset;
    if (gap < best_gap) {
      best_gap = gap;
      best = f.at("kind").get<std::string>();
    }
  }
  return best;
}

Outcome pipeline_criterion() {
  Outcome o;
  const auto start = std::chrono::steady_clock::now();
  const auto run = scratch("calibrated") / "run";
  cli::cmd_simulate({g_scenarios / "calibrated.yaml", std::nullopt, run});
  cli::cmd_analyze(run);
  cli::DatasetOptions dopt;
  dopt.run_dir = run;
  const auto ds = cli::cmd_dataset(dopt);

  std::map<std::string, std::array<std::size_t, 2>> per_sensor;
  for (const auto& w : ds.selection.windows) ++per_sensor[w.sensor_id][static_cast<int>(w.label)];
  bool balanced = ds.selection.shortfall.empty() && !per_sensor.empty();
  std::size_t prefail = 0;
  for (const auto& [s, c] : per_sensor) {
    balanced = balanced && c[0] == c[1];
    prefail += c[1];
  }
  o.check(balanced && prefail > 0,
          fmt::format("{} sensors, {} prefail and {} stable windows, balanced per sensor", per_sensor.size(), prefail,
                      ds.selection.windows.size() - prefail));

  auto split = predict::split_instances(ds.dataset, 1);
  bool clean = true;
  try {
    predict::check_disjoint(ds.dataset, split);
  } catch (const DomainError&) {
    clean = false;
  }
  split.test.push_back(split.train.front());
  bool fired = false;
  try {
    predict::check_disjoint(ds.dataset, split);
  } catch (const DomainError&) {
    fired = true;
  }
  o.check(clean && fired, "split guard passes a clean split and fires on an injected overlap");

  const auto faults = nlohmann::json::parse(read_text(run / "faults.json"));
  std::map<std::string, std::size_t> causes;
  for (const auto& inst : ds.dataset.instances) {
    if (inst.label != predict::Label::Prefail || inst.rows.empty()) continue;
    const auto kind = cause_of(faults, inst.sensor_id, inst.t0 + dopt.extract.lead_hours * kHour);
    ++causes[kind.value_or("unknown")];
  }
  std::string mix;
  for (const auto& [k, n] : causes) mix += fmt::format(" {}={}", k, n);
  o.check(causes["power_failure"] > 0, "prefail instances with telemetry by cause:" + mix);

  cli::TrainOptions topt;
  topt.dataset_dir = ds.dir;
  topt.experiment.forest.n_trees = 100;
  const auto trained = cli::cmd_train(topt);
  const auto& agg = trained.report.aggregates;
  const double recall = agg.at("instance.prefail.recall").mean;
  const double accuracy = agg.at("instance.accuracy").mean;
  o.check(recall >= 0.90, fmt::format("instance-level prefail recall {:.3f} (mean of {} trials)", recall,
                                      trained.report.trials.size()));
  o.check(accuracy > 0.5, fmt::format("instance-level accuracy {:.3f}", accuracy));
  const double t = seconds_since(start);
  o.check(t < 15 * 60.0, fmt::format("{:.0f} s", t));
  return o;
}

ingest::StoredItem spl_item(const std::string& sensor, Timestamp minute, std::vector<std::uint8_t> body) {
  ingest::StoredItem it;
  it.kind = node::ItemKind::Spl;
  it.sensor_id = sensor;
  it.ts = minute;
  it.item_id = ingest::make_item_id(it.kind, sensor, minute);
  it.received = minute + kMinute * 2;
  it.body = std::move(body);
  return it;
}

Outcome monitor_criterion() {
  Outcome o;
  const Timestamp t0 = parse_iso8601("2024-05-06T00:00:00Z");
  ingest::Store store(scratch("monitor") / "store");
  const auto put_hour = [&](int hour, int files, int corrupt) {
    for (int m = 0; m < files; ++m) {
      const auto minute = t0 + kHour * hour + kMinute * m;
      auto bytes = simnet::synthesize_minute("S1", minute, 5).bytes;
      if (m < corrupt) bytes.resize(bytes.size() / 2);
      store.put(spl_item("S1", minute, std::move(bytes)));
    }
  };
  put_hour(0, 60, 0);
  put_hour(1, 45, 0);
  put_hour(2, 60, 6);
  const double y60 = monitor::compute_yield(store, "S1", t0);
  const double y45 = monitor::compute_yield(store, "S1", t0 + kHour);
  const double y6 = monitor::compute_yield(store, "S1", t0 + kHour * 2);
  o.check(y60 == 100.0 && y45 == 75.0 && y6 == 90.0,
          fmt::format("yields 60 files {}%, 45 files {}%, 6 corrupt {}%", y60, y45, y6));

  const auto rule = monitor::parse_alert_rule("ram_usage_pct > 25 for 2m", "ram");
  Rng rng(10);
  std::size_t mismatched = 0, alerts = 0;
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<node::TelemetryRecord> stream;
    auto t = t0;
    for (int seg = 0; seg < 12; ++seg) {
      const bool high = seg % 2 == 0;
      const auto samples = 1 + rng.below(80);
      for (std::uint64_t i = 0; i < samples; ++i, t += node::kTelemetryInterval) {
        node::TelemetryRecord r;
        r.node_id = "N01";
        r.ts = t;
        r.ram_usage_pct = high ? rng.uniform(25.5, 90) : rng.uniform(0, 25);
        stream.push_back(r);
      }
    }
    std::size_t expected = 0;
    for (std::size_t i = 0; i < stream.size();) {
      std::size_t j = i;
      const bool hi = stream[i].ram_usage_pct > 25;
      while (j < stream.size() && (stream[j].ram_usage_pct > 25) == hi) ++j;
      if (hi && stream[j - 1].ts - stream[i].ts >= rule.sustain) ++expected;
      i = j;
    }
    const auto got = monitor::evaluate_alerts(stream, {rule}).size();
    alerts += got;
    mismatched += got != expected;
  }
  o.check(mismatched == 0, fmt::format("{} alerts over 500 fuzzed streams, {} streams mismatched", alerts, mismatched));
  return o;
}

struct Criterion {
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--only" && i + 1 < argc) only.insert(std::stoi(argv[++i]));
    else if (arg == "--scenarios" && i + 1 < argc) g_scenarios = argv[++i];
  }
  const std::vector<Criterion> criteria{
      {"acoustics", acoustics_criterion},     {"crypto-codec", crypto_criterion},
      {"deletion-policy", deletion_criterion}, {"store-and-forward", store_forward_criterion},
      {"determinism", determinism_criterion}, {"statistics", statistics_criterion},
      {"pipeline", pipeline_criterion},       {"monitor", monitor_criterion},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (!only.empty() && only.count(static_cast<int>(i + 1)) == 0) continue;
    Outcome o;
    const auto start = std::chrono::steady_clock::now();
    try {
      o = criteria[i].run();
    } catch (const std::exception& e) {
      o.check(false, fmt::format("exception: {}", e.what()));
    }
    std::string detail;
    for (const auto& n : o.notes) detail += (detail.empty() ? "" : "; ") + n;
    fmt::print("{} [{}] {} ({:.1f} s): {}\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].name,
               seconds_since(start), detail);
    std::fflush(stdout);
    failures += !o.pass;
  }
  return failures == 0 ? 0 : 1;
}
