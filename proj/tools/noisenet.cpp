#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "noisenet/cli/commands.hpp"
#include "noisenet/common/errors.hpp"
#include "noisenet/ingest/http.hpp"

using namespace noisenet;
namespace fs = std::filesystem;

namespace {

std::atomic<bool> g_stop{false};

void print_run(const simnet::RunArtifacts& a) {
  fmt::print("run written to {}\n", a.out_dir.string());
  fmt::print("  store      {}\n  telemetry  {}\n  manifest   {}\n", a.store_root.string(), a.telemetry_csv.string(),
             a.manifest_json.string());
}

int serve(const fs::path& store_root, const std::string& host, int port, const std::string& server_id,
          const std::string& flush_every) {
  ingest::Store store(store_root);
  ingest::IngestServer server(server_id, &store);
  ingest::HttpBinding http(server, [] { return std::chrono::time_point_cast<Millis>(std::chrono::system_clock::now()); });
  const auto every = parse_duration(flush_every);
  const int bound = http.start(host, port);
  fmt::print("serving {} on {}:{} (store {})\n", server_id, host, bound, store_root.string());
  std::fflush(stdout);
  std::signal(SIGINT, [](int) { g_stop = true; });
  std::signal(SIGTERM, [](int) { g_stop = true; });
  auto next = std::chrono::steady_clock::now() + every;
  while (!g_stop) {
    std::this_thread::sleep_for(std::chrono::milliseconds(200));
    if (std::chrono::steady_clock::now() < next) continue;
    const auto now = std::chrono::time_point_cast<Millis>(std::chrono::system_clock::now());
    http.exclusive([&] {
      server.flush(now);
      store.archive_stale_days(now);
    });
    next += every;
  }
  http.stop();
  http.flush(std::chrono::time_point_cast<Millis>(std::chrono::system_clock::now()));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"noisenet: acoustic sensor network simulation, monitoring and failure prediction"};
  app.require_subcommand(1);

  cli::SimulateOptions sim;
  std::uint64_t seed = 0;
  auto* simulate = app.add_subcommand("simulate", "run a scenario and write a run directory");
  simulate->add_option("--scenario", sim.scenario, "scenario YAML")->required();
  auto* sim_seed = simulate->add_option("--seed", seed, "master seed (default: scenario seed)");
  simulate->add_option("--out", sim.out, "run directory")->required();

  fs::path run_dir;
  auto* analyze = app.add_subcommand("analyze", "yield matrix, alerts and exceedance for a run");
  analyze->add_option("run,--run", run_dir, "run directory")->required();

  cli::DatasetOptions ds;
  fs::path ds_out;
  auto* dataset = app.add_subcommand("dataset", "extract prefail/stable instances from a run");
  dataset->add_option("run,--run", ds.run_dir, "run directory")->required();
  auto* ds_out_opt = dataset->add_option("--out", ds_out, "dataset directory (default <run>/dataset)");
  auto* ds_seed = dataset->add_option("--seed", seed, "sampling seed (default: run seed)");
  dataset->add_option("--lead-time-hours", ds.extract.lead_hours, "prefail window offset before downtime")
      ->default_val(1)
      ->check(CLI::PositiveNumber);
  dataset->add_option("--downtime-threshold-hours", ds.extract.downtime_threshold_hours,
                      "downtime longer than this makes a prefail window")
      ->default_val(6.0)
      ->check(CLI::NonNegativeNumber);
  dataset->add_option("--stability-hours", ds.extract.stability_hours, "100% yield span around stable windows")
      ->default_val(48)
      ->check(CLI::PositiveNumber);

  cli::TrainOptions tr;
  fs::path tr_out;
  std::string scaler_fit = "train";
  auto* train = app.add_subcommand("train", "train and evaluate random forests on a dataset");
  train->add_option("dataset,--dataset", tr.dataset_dir, "dataset directory")->required();
  auto* tr_out_opt = train->add_option("--out", tr_out, "model directory (default <dataset>/../model)");
  auto* tr_seed = train->add_option("--seed", seed, "experiment seed (default: dataset seed)");
  train->add_option("--trials", tr.experiment.trials, "independent split/train rounds")
      ->default_val(10)
      ->check(CLI::PositiveNumber);
  train->add_option("--trees", tr.experiment.forest.n_trees, "trees per forest")->default_val(1000)->check(CLI::PositiveNumber);
  train->add_option("--scaler-fit", scaler_fit, "split the scaler is fit on")
      ->default_val("train")
      ->check(CLI::IsMember({"train", "test"}));
  train->add_option("--threads", tr.experiment.forest.threads, "worker threads (0 = all cores)")->default_val(0);

  fs::path model_dir;
  auto* report = app.add_subcommand("report", "print the summary of a trained model");
  report->add_option("model,--model", model_dir, "model directory")->required();

  fs::path store_root;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string server_id = "A";
  std::string flush_every = "10s";
  auto* serve_cmd = app.add_subcommand("serve", "run an ingestion server over HTTP");
  serve_cmd->add_option("--store", store_root, "store root")->required();
  serve_cmd->add_option("--host", host)->default_val("127.0.0.1");
  serve_cmd->add_option("--port", port)->default_val(8080);
  serve_cmd->add_option("--server-id", server_id)->default_val("A");
  serve_cmd->add_option("--flush-every", flush_every, "cache flush interval")->default_val("10s");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*simulate) {
      if (*sim_seed) sim.seed = seed;
      print_run(cli::cmd_simulate(sim));
    } else if (*analyze) {
      const auto r = cli::cmd_analyze(run_dir);
      fmt::print("yield over {} sensors x {} hours: mean {:.2f}%, median {:.2f}%, min {:.2f}%, max {:.2f}%\n",
                 r.matrix.sensors.size(), r.matrix.hours.size(), r.matrix.mean, r.matrix.median, r.matrix.min,
                 r.matrix.max);
      fmt::print("corrupt files {}, alerts {}, exceedance rows {}\n", r.corrupt_files, r.alerts, r.exceedance_rows);
    } else if (*dataset) {
      if (*ds_out_opt) ds.out = ds_out;
      if (*ds_seed) ds.seed = seed;
      const auto r = cli::cmd_dataset(ds);
      std::size_t shortfall = 0;
      for (const auto& [s, n] : r.selection.shortfall) shortfall += n;
      fmt::print("dataset written to {} ({} telemetry)\n", r.dir.string(), r.replayed ? "replayed" : "logged");
      fmt::print("  prefail {} ({} rows), stable {} ({} rows), shortfall {}\n", r.dataset.count(predict::Label::Prefail),
                 r.dataset.rows(predict::Label::Prefail), r.dataset.count(predict::Label::Stable),
                 r.dataset.rows(predict::Label::Stable), shortfall);
    } else if (*train) {
      if (*tr_out_opt) tr.out = tr_out;
      if (*tr_seed) tr.seed = seed;
      tr.experiment.scaler_fit = scaler_fit == "test" ? predict::ScalerFit::Test : predict::ScalerFit::Train;
      const auto r = cli::cmd_train(tr);
      fmt::print("model written to {}\n\n{}", r.dir.string(), r.report.summary_table());
    } else if (*report) {
      fmt::print("{}", cli::cmd_report(model_dir));
    } else if (*serve_cmd) {
      return serve(store_root, host, port, server_id, flush_every);
    }
  } catch (const ConfigError& e) {
    fmt::print(stderr, "config error: {}\n", e.what());
    return 2;
  } catch (const cli::UsageError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  }
  return 0;
}
