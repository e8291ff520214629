#include "noisenet/cli/commands.hpp"

#include <fstream>

#include <fmt/format.h>
#include <json.hpp>

#include "noisenet/common/errors.hpp"
#include "noisenet/common/hash.hpp"
#include "noisenet/common/io.hpp"
#include "noisenet/simnet/scenario.hpp"

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace noisenet::cli {

namespace {

void require_file(const fs::path& p, const std::string& what) {
  if (!fs::exists(p)) throw UsageError(fmt::format("{} not found: {}", what, p.string()));
}

nlohmann::json read_json(const fs::path& p) {
  try {
    return nlohmann::json::parse(read_text(p));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(fmt::format("{}: {}", p.string(), e.what()));
  }
}

template <class F>
void for_each_telemetry(const fs::path& path, F&& fn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string(), "cannot open");
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (header) {
      if (line != node::telemetry_csv_header()) throw FormatError(path.string() + ": bad telemetry header");
      header = false;
      continue;
    }
    fn(node::parse_csv_row(line));
  }
}

ordered_json per_label(std::size_t stable, std::size_t prefail) {
  return ordered_json{{"stable", stable}, {"prefail", prefail}};
}

}  // namespace

simnet::RunArtifacts cmd_simulate(const SimulateOptions& options) {
  require_file(options.scenario, "scenario");
  const auto config = simnet::load_scenario(options.scenario);
  const auto seed = options.seed.value_or(config.seed.value_or(1));
  if (fs::exists(options.out / "store")) fs::remove_all(options.out / "store");
  simnet::WorldOptions wo;
  wo.out_dir = options.out;
  auto world = simnet::build_world(config, seed, wo);
  world.run_to_end();
  return world.export_run();
}

monitor::AnalyzeResult cmd_analyze(const fs::path& run_dir) {
  require_file(run_dir / "manifest.json", "run manifest");
  return monitor::analyze_run(run_dir);
}

DatasetResult cmd_dataset(const DatasetOptions& options) {
  const auto& run = options.run_dir;
  require_file(run / "manifest.json", "run manifest");
  const auto manifest = read_json(run / "manifest.json");
  const auto seed = options.seed.value_or(manifest.at("seed").get<std::uint64_t>());
  const auto start = from_unix_ms(manifest.at("start_ms").get<std::int64_t>());
  const auto end = from_unix_ms(manifest.at("end_ms").get<std::int64_t>());
  const auto nodes = manifest.at("nodes").get<std::vector<std::string>>();

  DatasetResult result;
  result.dir = options.out.value_or(run / "dataset");
  fs::create_directories(result.dir);
  const ingest::Store store(run / "store");
  const auto matrix = monitor::yield_matrix(store, nodes, start, end);
  result.selection = predict::select_windows(matrix, seed, options.extract);

  predict::RowCollector collector(result.selection);
  if (manifest.at("telemetry") == "all") {
    for_each_telemetry(run / "telemetry.csv", [&](const node::TelemetryRecord& r) { collector.add(r); });
  } else {
    require_file(run / "scenario.yaml", "run scenario");
    const auto config = simnet::parse_scenario(read_text(run / "scenario.yaml"));
    const auto replay_dir = result.dir / "replay";
    fs::remove_all(replay_dir);
    {
      simnet::WorldOptions wo;
      wo.out_dir = replay_dir;
      wo.capture_windows = result.selection.capture_set();
      auto world = simnet::build_world(config, manifest.at("seed").get<std::uint64_t>(), wo);
      world.run_to_end();
      if (world.state_hash() != manifest.at("state_sha256").get<std::string>()) {
        throw DomainError("replay diverged from the recorded run (state hash differs)");
      }
    }
    for_each_telemetry(replay_dir / "telemetry.csv", [&](const node::TelemetryRecord& r) { collector.add(r); });
    fs::remove_all(replay_dir);
    result.replayed = true;
  }
  result.dataset = collector.finish();
  predict::write_dataset(result.dir, result.dataset);

  const auto& sel = result.selection;
  std::size_t eligible = 0;
  for (const auto& d : sel.downtimes) eligible += d.eligible;
  ordered_json m;
  m["command"] = "dataset";
  m["seed"] = seed;
  m["run_state_sha256"] = manifest.at("state_sha256");
  m["lead_time_hours"] = options.extract.lead_hours;
  m["downtime_threshold_hours"] = options.extract.downtime_threshold_hours;
  m["stability_hours"] = options.extract.stability_hours;
  m["telemetry_source"] = result.replayed ? "replay" : "log";
  m["downtimes"] = sel.downtimes.size();
  m["eligible_downtimes"] = eligible;
  m["instances"] = per_label(result.dataset.count(predict::Label::Stable), result.dataset.count(predict::Label::Prefail));
  m["rows"] = per_label(result.dataset.rows(predict::Label::Stable), result.dataset.rows(predict::Label::Prefail));
  auto& per_sensor = m["per_sensor"] = ordered_json::object();
  for (const auto& [s, n] : sel.prefail_per_sensor) {
    per_sensor[s] = ordered_json{{"prefail", n},
                                 {"stable_candidates", sel.stable_candidates.at(s)},
                                 {"shortfall", sel.shortfall.count(s) ? sel.shortfall.at(s) : 0}};
  }
  m["files"] = {"instances.csv", "rows.csv"};
  write_text_atomic(result.dir / "manifest.json", m.dump(2) + "\n");
  return result;
}

TrainResult cmd_train(const TrainOptions& options) {
  const auto& ds_dir = options.dataset_dir;
  require_file(ds_dir / "instances.csv", "dataset");
  require_file(ds_dir / "rows.csv", "dataset");
  std::uint64_t seed = 1;
  if (options.seed) {
    seed = *options.seed;
  } else if (fs::exists(ds_dir / "manifest.json")) {
    seed = read_json(ds_dir / "manifest.json").at("seed").get<std::uint64_t>();
  }
  const auto dataset = predict::read_dataset(ds_dir);

  TrainResult result;
  result.dir = options.out.value_or(fs::absolute(ds_dir).lexically_normal().parent_path() / "model");
  if (result.dir.filename().empty()) result.dir = result.dir.parent_path();
  fs::create_directories(result.dir);
  result.report = predict::run_experiment(dataset, seed, options.experiment);
  write_text_atomic(result.dir / "report.json", result.report.to_json());
  write_text_atomic(result.dir / "summary.txt", result.report.summary_table());
  write_text_atomic(result.dir / "lda_projection.csv", predict::lda_projection_csv(dataset));

  ordered_json m;
  m["command"] = "train";
  m["seed"] = seed;
  m["trials"] = options.experiment.trials;
  m["n_trees"] = options.experiment.forest.n_trees;
  m["scaler_fit"] = options.experiment.scaler_fit == predict::ScalerFit::Train ? "train" : "test";
  m["dataset_sha256"] = sha256_hex(read_text(ds_dir / "instances.csv") + read_text(ds_dir / "rows.csv"));
  m["files"] = {"report.json", "summary.txt", "lda_projection.csv"};
  write_text_atomic(result.dir / "manifest.json", m.dump(2) + "\n");
  return result;
}

std::string cmd_report(const fs::path& model_dir) {
  require_file(model_dir / "report.json", "report");
  auto text = predict::report_summary(read_text(model_dir / "report.json"));
  write_text_atomic(model_dir / "summary.txt", text);
  return text;
}

}  // namespace noisenet::cli
