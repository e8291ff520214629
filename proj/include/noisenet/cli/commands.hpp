#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>

#include "noisenet/monitor/analyze.hpp"
#include "noisenet/predict/dataset.hpp"
#include "noisenet/predict/experiment.hpp"
#include "noisenet/simnet/world.hpp"

namespace noisenet::cli {

/// Bad invocation or missing input; maps to exit code 2 like ConfigError.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SimulateOptions {
  std::filesystem::path scenario;
  /// Falls back to the scenario's seed, then to 1.
  std::optional<std::uint64_t> seed;
  std::filesystem::path out;
};

simnet::RunArtifacts cmd_simulate(const SimulateOptions& options);

monitor::AnalyzeResult cmd_analyze(const std::filesystem::path& run_dir);

struct DatasetOptions {
  std::filesystem::path run_dir;
  /// Default <run_dir>/dataset.
  std::optional<std::filesystem::path> out;
  /// Default: the run's seed.
  std::optional<std::uint64_t> seed;
  predict::ExtractOptions extract;
};

struct DatasetResult {
  std::filesystem::path dir;
  predict::Selection selection;
  predict::Dataset dataset;
  /// Telemetry came from a capture replay of the run rather than its log.
  bool replayed = false;
};

/// Selects windows from the run's yields and fills them with telemetry. When
/// the run did not log all telemetry, the scenario is replayed with capture
/// windows; a replay whose final state differs from the run is an error.
DatasetResult cmd_dataset(const DatasetOptions& options);

struct TrainOptions {
  std::filesystem::path dataset_dir;
  /// Default <dataset_dir>/../model.
  std::optional<std::filesystem::path> out;
  /// Default: the dataset's seed.
  std::optional<std::uint64_t> seed;
  predict::ExperimentOptions experiment;
};

struct TrainResult {
  std::filesystem::path dir;
  predict::ExperimentReport report;
};

/// Writes report.json, lda_projection.csv, summary.txt and manifest.json.
TrainResult cmd_train(const TrainOptions& options);

/// Summary table of <model_dir>/report.json.
std::string cmd_report(const std::filesystem::path& model_dir);

}  // namespace noisenet::cli
