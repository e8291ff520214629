#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <sys/wait.h>

#include <fmt/format.h>
#include <json.hpp>

#include "noisenet/cli/commands.hpp"
#include "noisenet/common/errors.hpp"
#include "noisenet/common/io.hpp"
#include "noisenet/monitor/yield.hpp"

using namespace noisenet;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "noisenet_test_cli" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int run_cli(const std::string& args) {
  const auto cmd = fmt::format("\"{}\" {} >/dev/null 2>&1", NOISENET_CLI, args);
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path write_scenario(const fs::path& dir, const std::string& extra) {
  const auto path = dir / "scenario.yaml";
  write_text_atomic(path, R"(name: cli
seed: 5
start: 2024-04-01T00:00:00Z
horizon: 1d
nodes: {count: 2, prefix: N, wifi_strength: [60, 70], wifi_quality: [60, 70]}
)" + extra);
  return path;
}

nlohmann::json json_of(const fs::path& p) { return nlohmann::json::parse(read_text(p)); }

}  // namespace

TEST_CASE("exit codes separate usage errors from runtime failures") {
  const auto dir = scratch("exit");
  CHECK(run_cli("") == 2);
  CHECK(run_cli("bogus") == 2);
  CHECK(run_cli(fmt::format("simulate --scenario {} --out {}", (dir / "missing.yaml").string(), (dir / "r").string())) ==
        2);
  const auto bad = write_scenario(dir, "faults: [{kind: meteor, target: N01, onset: 1h, duration: 1h}]\n");
  CHECK(run_cli(fmt::format("simulate --scenario {} --out {}", bad.string(), (dir / "r").string())) == 2);
  CHECK(run_cli(fmt::format("train {} --scaler-fit both", dir.string())) == 2);
  CHECK(run_cli(fmt::format("analyze {}", (dir / "nowhere").string())) == 2);

  // A dataset directory with a broken instances file is a runtime failure.
  fs::create_directories(dir / "ds");
  write_text_atomic(dir / "ds" / "instances.csv", "not,a,dataset\n");
  write_text_atomic(dir / "ds" / "rows.csv", "x\n");
  write_text_atomic(dir / "ds" / "manifest.json", R"({"seed": 1})");
  CHECK(run_cli(fmt::format("train {}", (dir / "ds").string())) == 1);
}

TEST_CASE("simulate and analyze through the binary") {
  const auto dir = scratch("bin");
  const auto scenario = write_scenario(dir, "");
  REQUIRE(run_cli(fmt::format("simulate --scenario {} --out {}", scenario.string(), (dir / "run").string())) == 0);
  REQUIRE(run_cli(fmt::format("analyze {}", (dir / "run").string())) == 0);
  for (const char* f : {"manifest.json", "telemetry.csv", "yield_matrix.csv", "yield_summary.json", "alerts.jsonl",
                        "exceedance.csv"}) {
    CHECK(fs::exists(dir / "run" / f));
  }
  CHECK(json_of(dir / "run" / "manifest.json").at("seed") == 5);
  REQUIRE(run_cli(fmt::format("simulate --scenario {} --seed 11 --out {}", scenario.string(),
                              (dir / "run2").string())) == 0);
  CHECK(json_of(dir / "run2" / "manifest.json").at("seed") == 11);
}

TEST_CASE("a fault-free run yields 100 and an emptied store yields 0") {
  const auto dir = scratch("yield");
  const auto scenario = write_scenario(dir, "");
  const auto run = dir / "run";
  cli::cmd_simulate({scenario, std::nullopt, run});
  const auto full = cli::cmd_analyze(run);
  CHECK(full.matrix.mean == 100.0);
  CHECK(full.matrix.sensors.size() == 2);

  fs::remove_all(run / "store");
  fs::create_directories(run / "store");
  const auto empty = cli::cmd_analyze(run);
  CHECK(empty.matrix.sensors.size() == 2);
  CHECK(empty.matrix.max == 0.0);
  const auto csv = monitor::parse_yield_matrix_csv(read_text(run / "yield_matrix.csv"));
  for (const auto& row : csv.cells) {
    for (double y : row) CHECK(y == 0.0);
  }
}

TEST_CASE("same invocation twice gives identical manifests") {
  const auto dir = scratch("twice");
  const auto scenario = write_scenario(dir, "faults: [{kind: power_failure, target: N02, onset: 5h, duration: 3h}]\n");
  cli::cmd_simulate({scenario, std::nullopt, dir / "a"});
  cli::cmd_simulate({scenario, std::nullopt, dir / "b"});
  CHECK(read_text(dir / "a" / "manifest.json") == read_text(dir / "b" / "manifest.json"));
  // Rerunning into the same directory replaces the previous run.
  cli::cmd_simulate({scenario, std::nullopt, dir / "a"});
  CHECK(read_text(dir / "a" / "manifest.json") == read_text(dir / "b" / "manifest.json"));
  CHECK(read_text(dir / "a" / "telemetry.csv") == read_text(dir / "b" / "telemetry.csv"));
}

TEST_CASE("dataset, train and report on the demo scenario") {
  const auto dir = scratch("demo");
  const auto run = dir / "run";
  cli::cmd_simulate({fs::path(NOISENET_SCENARIOS) / "demo.yaml", std::nullopt, run});
  cli::cmd_analyze(run);

  cli::DatasetOptions dopt;
  dopt.run_dir = run;
  const auto ds = cli::cmd_dataset(dopt);
  CHECK_FALSE(ds.replayed);
  CHECK(ds.dataset.count(predict::Label::Prefail) == ds.dataset.count(predict::Label::Stable));
  CHECK(ds.dataset.count(predict::Label::Prefail) >= 2);
  const auto dmanifest = json_of(ds.dir / "manifest.json");
  CHECK(dmanifest.at("seed") == json_of(run / "manifest.json").at("seed"));

  cli::TrainOptions topt;
  topt.dataset_dir = ds.dir;
  topt.experiment.forest.n_trees = 50;
  const auto model = cli::cmd_train(topt);
  CHECK(model.dir == run / "model");
  const auto report = json_of(model.dir / "report.json");
  CHECK(report.at("trials").size() == 10);
  CHECK(report.at("aggregates").contains("instance.prefail.recall"));
  CHECK(json_of(model.dir / "manifest.json").contains("seed"));
  CHECK(fs::exists(model.dir / "lda_projection.csv"));
  const auto summary = cli::cmd_report(model.dir);
  CHECK(summary.find("instance.accuracy") != std::string::npos);
  CHECK(summary.find("feature importance") != std::string::npos);

  const auto first = read_text(model.dir / "report.json");
  cli::cmd_train(topt);
  CHECK(read_text(model.dir / "report.json") == first);

  CHECK_THROWS_AS(cli::cmd_report(dir / "nothing"), cli::UsageError);
}
