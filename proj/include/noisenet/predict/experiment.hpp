#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "noisenet/predict/dataset.hpp"
#include "noisenet/predict/forest.hpp"
#include "noisenet/predict/scaler.hpp"
#include "noisenet/predict/stats.hpp"

namespace noisenet::predict {

struct ClassMetrics {
  double precision = 0;
  double recall = 0;
  std::size_t support = 0;
};

struct Metrics {
  double accuracy = 0;
  ClassMetrics stable;
  ClassMetrics prefail;
  std::size_t n = 0;
};

/// Labels 0 = stable, 1 = prefail. Precision with no predictions of a class is 0.
Metrics evaluate(const std::vector<int>& truth, const std::vector<int>& predicted);

struct InstanceSplit {
  std::vector<std::size_t> train;  // indices into Dataset::instances
  std::vector<std::size_t> test;
};

/// Stratified by label: ceil(test_fraction * n) of each class go to test.
InstanceSplit split_instances(const Dataset& dataset, std::uint64_t seed, double test_fraction = 0.2);

/// Throws DomainError if any instance id is on both sides.
void check_disjoint(const Dataset& dataset, const InstanceSplit& split);

struct SplitManifest {
  std::array<std::size_t, 2> train_instances{};
  std::array<std::size_t, 2> test_instances{};
  std::array<std::size_t, 2> train_rows{};
  std::array<std::size_t, 2> test_rows{};
};

struct TrialResult {
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  SplitManifest split;
  Metrics rows;
  /// Majority vote of the instance's row predictions; ties go to prefail.
  Metrics instances;
  std::array<double, kFeatures> importances{};
};

struct Distribution {
  double min = 0, q1 = 0, median = 0, q3 = 0, max = 0, mean = 0;
};
Distribution distribution(std::vector<double> values);

struct ExperimentOptions {
  std::size_t trials = 10;
  double test_fraction = 0.2;
  ScalerFit scaler_fit = ScalerFit::Train;
  ForestParams forest;
};

struct FeatureComparison {
  std::string feature;
  ZTest test;
  bool defined = true;
};

struct ExperimentReport {
  std::uint64_t seed = 0;
  ExperimentOptions options;
  std::array<std::size_t, 2> instances{};
  std::array<std::size_t, 2> rows{};
  /// Instances without telemetry rows take no part in training or scoring.
  std::size_t empty_instances = 0;
  std::vector<TrialResult> trials;
  /// "row.accuracy", "instance.prefail.recall", ...
  std::map<std::string, Distribution> aggregates;
  std::array<double, kFeatures> importances{};
  /// Prefail rows against stable rows, per feature.
  std::vector<FeatureComparison> comparisons;
  /// Component-1 projection statistics per class (LDA on all standardized rows).
  std::array<double, 2> lda_mean{};
  std::array<double, 2> lda_sd{};

  std::string to_json() const;
  /// Plain-text table of the aggregates and importances.
  std::string summary_table() const;
};

/// The same table, rebuilt from a report.json.
std::string report_summary(std::string_view report_json);

ExperimentReport run_experiment(const Dataset& dataset, std::uint64_t seed, const ExperimentOptions& options = {});

/// One line per row: instance_id,label,c1,c2 from an LDA fit on all standardized rows.
std::string lda_projection_csv(const Dataset& dataset);

}  // namespace noisenet::predict
