#include "noisenet/predict/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>
#include <json.hpp>

#include "noisenet/common/errors.hpp"
#include "noisenet/common/rng.hpp"
#include "noisenet/predict/lda.hpp"

namespace noisenet::predict {

namespace {

using ordered_json = nlohmann::ordered_json;

Eigen::MatrixXd stack_rows(const Dataset& ds, const std::vector<std::size_t>& which, std::vector<int>* labels,
                           std::vector<std::size_t>* owner) {
  std::size_t n = 0;
  for (auto k : which) n += ds.instances[k].rows.size();
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(kFeatures));
  Eigen::Index r = 0;
  for (auto k : which) {
    const auto& inst = ds.instances[k];
    for (const auto& row : inst.rows) {
      for (std::size_t f = 0; f < kFeatures; ++f) x(r, static_cast<Eigen::Index>(f)) = row[f];
      if (labels) labels->push_back(static_cast<int>(inst.label));
      if (owner) owner->push_back(k);
      ++r;
    }
  }
  return x;
}

ordered_json metrics_json(const ClassMetrics& c) {
  return ordered_json{{"precision", c.precision}, {"recall", c.recall}, {"support", c.support}};
}

ordered_json metrics_json(const Metrics& m) {
  return ordered_json{{"accuracy", m.accuracy}, {"n", m.n}, {"stable", metrics_json(m.stable)}, {"prefail", metrics_json(m.prefail)}};
}

ordered_json metrics_json(const Distribution& d) {
  return ordered_json{{"min", d.min}, {"q1", d.q1}, {"median", d.median}, {"q3", d.q3}, {"max", d.max}, {"mean", d.mean}};
}

ordered_json per_class(const std::array<std::size_t, 2>& v) {
  return ordered_json{{"stable", v[0]}, {"prefail", v[1]}};
}

double quantile_sorted(const std::vector<double>& v, double q) {
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (v[hi] - v[lo]) * (pos - static_cast<double>(lo));
}

}  // namespace

Metrics evaluate(const std::vector<int>& truth, const std::vector<int>& predicted) {
  if (truth.size() != predicted.size()) throw DomainError("truth and predictions differ in length");
  Metrics m;
  m.n = truth.size();
  std::array<std::array<std::size_t, 2>, 2> cm{};  // [truth][predicted]
  for (std::size_t i = 0; i < truth.size(); ++i) ++cm[truth[i]][predicted[i]];
  auto cls = [&](int c) {
    ClassMetrics r;
    r.support = cm[c][0] + cm[c][1];
    const auto predicted_c = cm[0][c] + cm[1][c];
    r.precision = predicted_c ? static_cast<double>(cm[c][c]) / static_cast<double>(predicted_c) : 0.0;
    r.recall = r.support ? static_cast<double>(cm[c][c]) / static_cast<double>(r.support) : 0.0;
    return r;
  };
  m.stable = cls(0);
  m.prefail = cls(1);
  m.accuracy = m.n ? static_cast<double>(cm[0][0] + cm[1][1]) / static_cast<double>(m.n) : 0.0;
  return m;
}

InstanceSplit split_instances(const Dataset& dataset, std::uint64_t seed, double test_fraction) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw DomainError("test fraction must be in (0, 1)");
  InstanceSplit split;
  Rng rng(seed);
  for (auto label : {Label::Stable, Label::Prefail}) {
    std::vector<std::size_t> idx;
    for (std::size_t k = 0; k < dataset.instances.size(); ++k) {
      if (dataset.instances[k].label == label) idx.push_back(k);
    }
    shuffle(idx, rng);
    const auto n_test = static_cast<std::size_t>(std::ceil(test_fraction * static_cast<double>(idx.size()) - 1e-9));
    for (std::size_t k = 0; k < idx.size(); ++k) (k < n_test ? split.test : split.train).push_back(idx[k]);
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

void check_disjoint(const Dataset& dataset, const InstanceSplit& split) {
  std::set<std::size_t> train_ids;
  for (auto k : split.train) train_ids.insert(dataset.instances.at(k).id);
  for (auto k : split.test) {
    if (train_ids.count(dataset.instances.at(k).id)) {
      throw DomainError(fmt::format("instance {} is in both the training and the test split", dataset.instances[k].id));
    }
  }
}

Distribution distribution(std::vector<double> values) {
  Distribution d;
  if (values.empty()) return d;
  std::sort(values.begin(), values.end());
  d.min = values.front();
  d.max = values.back();
  d.q1 = quantile_sorted(values, 0.25);
  d.median = quantile_sorted(values, 0.5);
  d.q3 = quantile_sorted(values, 0.75);
  d.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  return d;
}

ExperimentReport run_experiment(const Dataset& dataset, std::uint64_t seed, const ExperimentOptions& options) {
  if (options.trials == 0) throw DomainError("trials must be positive");
  ExperimentReport rep;
  rep.seed = seed;
  rep.options = options;

  Dataset usable;
  for (const auto& inst : dataset.instances) {
    if (inst.rows.empty()) {
      ++rep.empty_instances;
      continue;
    }
    usable.instances.push_back(inst);
  }
  for (auto l : {Label::Stable, Label::Prefail}) {
    rep.instances[static_cast<int>(l)] = usable.count(l);
    rep.rows[static_cast<int>(l)] = usable.rows(l);
  }
  if (rep.instances[0] == 0 || rep.instances[1] == 0) throw DomainError("dataset has a single class");

  std::map<std::string, std::vector<double>> series;
  auto record = [&](const std::string& prefix, const Metrics& m) {
    series[prefix + ".accuracy"].push_back(m.accuracy);
    series[prefix + ".stable.precision"].push_back(m.stable.precision);
    series[prefix + ".stable.recall"].push_back(m.stable.recall);
    series[prefix + ".prefail.precision"].push_back(m.prefail.precision);
    series[prefix + ".prefail.recall"].push_back(m.prefail.recall);
  };

  for (std::size_t t = 0; t < options.trials; ++t) {
    TrialResult tr;
    tr.trial = t;
    tr.seed = derive_seed(seed, t);
    const auto split = split_instances(usable, derive_seed(tr.seed, 1), options.test_fraction);
    check_disjoint(usable, split);
    for (auto k : split.train) {
      const auto c = static_cast<int>(usable.instances[k].label);
      ++tr.split.train_instances[c];
      tr.split.train_rows[c] += usable.instances[k].rows.size();
    }
    for (auto k : split.test) {
      const auto c = static_cast<int>(usable.instances[k].label);
      ++tr.split.test_instances[c];
      tr.split.test_rows[c] += usable.instances[k].rows.size();
    }

    std::vector<int> y_train, y_test;
    std::vector<std::size_t> owner;
    Eigen::MatrixXd x_train = stack_rows(usable, split.train, &y_train, nullptr);
    Eigen::MatrixXd x_test = stack_rows(usable, split.test, &y_test, &owner);
    const auto scaler = standardize_fit(options.scaler_fit == ScalerFit::Train ? x_train : x_test);
    x_train = standardize_apply(scaler, x_train);
    x_test = standardize_apply(scaler, x_test);

    const auto forest = RandomForest::fit(x_train, y_train, options.forest, derive_seed(tr.seed, 2));
    const auto pred = forest.predict(x_test);
    tr.rows = evaluate(y_test, pred);

    std::map<std::size_t, std::array<std::size_t, 2>> votes;
    for (std::size_t r = 0; r < pred.size(); ++r) ++votes[owner[r]][pred[r]];
    std::vector<int> inst_truth, inst_pred;
    for (const auto& [k, v] : votes) {
      inst_truth.push_back(static_cast<int>(usable.instances[k].label));
      inst_pred.push_back(v[1] >= v[0] ? 1 : 0);
    }
    tr.instances = evaluate(inst_truth, inst_pred);
    std::copy(forest.importances().begin(), forest.importances().end(), tr.importances.begin());
    record("row", tr.rows);
    record("instance", tr.instances);
    rep.trials.push_back(std::move(tr));
  }
  for (auto& [k, v] : series) rep.aggregates[k] = distribution(v);
  for (const auto& tr : rep.trials) {
    for (std::size_t f = 0; f < kFeatures; ++f) rep.importances[f] += tr.importances[f];
  }
  const double total = std::accumulate(rep.importances.begin(), rep.importances.end(), 0.0);
  for (auto& v : rep.importances) v = 100.0 * v / total;

  std::array<std::vector<double>, 2> by_class_feature[kFeatures];
  for (const auto& inst : usable.instances) {
    for (const auto& row : inst.rows) {
      for (std::size_t f = 0; f < kFeatures; ++f) by_class_feature[f][static_cast<int>(inst.label)].push_back(row[f]);
    }
  }
  for (std::size_t f = 0; f < kFeatures; ++f) {
    FeatureComparison c;
    c.feature = std::string(node::kTelemetryVariables[f]);
    try {
      c.test = mean_comparison_ztest(by_class_feature[f][1], by_class_feature[f][0]);
    } catch (const DomainError&) {
      c.defined = false;
    }
    rep.comparisons.push_back(std::move(c));
  }

  std::vector<std::size_t> all(usable.instances.size());
  std::iota(all.begin(), all.end(), 0);
  std::vector<int> y_all;
  const auto x_all = stack_rows(usable, all, &y_all, nullptr);
  const auto x_std = standardize_apply(standardize_fit(x_all), x_all);
  const auto lda = lda_fit(x_std, y_all, 2);
  const Eigen::VectorXd proj = lda.transform(x_std).col(0);
  for (int c = 0; c < 2; ++c) {
    double s = 0, ss = 0;
    std::size_t n = 0;
    for (Eigen::Index i = 0; i < proj.size(); ++i) {
      if (y_all[i] != c) continue;
      s += proj(i);
      ss += proj(i) * proj(i);
      ++n;
    }
    rep.lda_mean[c] = s / static_cast<double>(n);
    rep.lda_sd[c] = std::sqrt(std::max(0.0, ss / static_cast<double>(n) - rep.lda_mean[c] * rep.lda_mean[c]));
  }
  return rep;
}

std::string ExperimentReport::to_json() const {
  ordered_json j;
  j["seed"] = seed;
  j["options"] = ordered_json{{"trials", options.trials},
                              {"test_fraction", options.test_fraction},
                              {"scaler_fit", options.scaler_fit == ScalerFit::Train ? "train" : "test"},
                              {"n_trees", options.forest.n_trees},
                              {"features_per_split", options.forest.features_per_split},
                              {"min_leaf", options.forest.min_leaf},
                              {"max_depth", options.forest.max_depth}};
  j["dataset"] = ordered_json{{"instances", per_class(instances)}, {"rows", per_class(rows)}, {"empty_instances", empty_instances}};
  auto& trials_j = j["trials"] = ordered_json::array();
  for (const auto& t : trials) {
    ordered_json imp;
    for (std::size_t f = 0; f < kFeatures; ++f) imp[std::string(node::kTelemetryVariables[f])] = t.importances[f];
    trials_j.push_back(ordered_json{{"trial", t.trial},
                                    {"seed", t.seed},
                                    {"split",
                                     {{"train_instances", per_class(t.split.train_instances)},
                                      {"test_instances", per_class(t.split.test_instances)},
                                      {"train_rows", per_class(t.split.train_rows)},
                                      {"test_rows", per_class(t.split.test_rows)}}},
                                    {"rows", metrics_json(t.rows)},
                                    {"instances", metrics_json(t.instances)},
                                    {"importances", imp}});
  }
  auto& agg = j["aggregates"] = ordered_json::object();
  for (const auto& [k, d] : aggregates) agg[k] = metrics_json(d);
  auto& imp = j["importances"] = ordered_json::object();
  for (std::size_t f = 0; f < kFeatures; ++f) imp[std::string(node::kTelemetryVariables[f])] = importances[f];
  auto& cmp = j["comparisons"] = ordered_json::object();
  for (const auto& c : comparisons) {
    if (!c.defined) {
      cmp[c.feature] = nullptr;
      continue;
    }
    cmp[c.feature] = ordered_json{{"z", c.test.z}, {"p", c.test.p_two_sided}, {"mean_prefail", c.test.mean_a},
                                  {"mean_stable", c.test.mean_b}};
  }
  j["lda_component1"] = ordered_json{{"stable", {{"mean", lda_mean[0]}, {"sd", lda_sd[0]}}},
                                     {"prefail", {{"mean", lda_mean[1]}, {"sd", lda_sd[1]}}}};
  return j.dump(2) + "\n";
}

std::string ExperimentReport::summary_table() const { return report_summary(to_json()); }

std::string report_summary(std::string_view report_json) {
  const auto j = ordered_json::parse(report_json);
  const auto& ds = j.at("dataset");
  std::string out;
  fmt::format_to(std::back_inserter(out), "instances: {} stable, {} prefail ({} / {} rows); trials: {}\n\n",
                 ds.at("instances").at("stable").get<std::size_t>(), ds.at("instances").at("prefail").get<std::size_t>(),
                 ds.at("rows").at("stable").get<std::size_t>(), ds.at("rows").at("prefail").get<std::size_t>(),
                 j.at("trials").size());
  fmt::format_to(std::back_inserter(out), "{:<28} {:>8} {:>8} {:>8} {:>8} {:>8}\n", "metric", "min", "q1", "median",
                 "q3", "max");
  for (const auto& [k, d] : j.at("aggregates").items()) {
    fmt::format_to(std::back_inserter(out), "{:<28} {:>8.4f} {:>8.4f} {:>8.4f} {:>8.4f} {:>8.4f}\n", k,
                   d.at("min").get<double>(), d.at("q1").get<double>(), d.at("median").get<double>(),
                   d.at("q3").get<double>(), d.at("max").get<double>());
  }
  out += "\nfeature importance (%)\n";
  std::vector<std::pair<std::string, double>> imp;
  for (const auto& [k, v] : j.at("importances").items()) imp.emplace_back(k, v.get<double>());
  std::stable_sort(imp.begin(), imp.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  for (const auto& [k, v] : imp) fmt::format_to(std::back_inserter(out), "  {:<28} {:>6.2f}\n", k, v);
  return out;
}

std::string lda_projection_csv(const Dataset& dataset) {
  std::vector<std::size_t> all;
  for (std::size_t k = 0; k < dataset.instances.size(); ++k) {
    if (!dataset.instances[k].rows.empty()) all.push_back(k);
  }
  std::vector<int> y;
  std::vector<std::size_t> owner;
  const auto x = stack_rows(dataset, all, &y, &owner);
  const auto xs = standardize_apply(standardize_fit(x), x);
  const auto proj = lda_fit(xs, y, 2).transform(xs);
  std::string out = "instance_id,label,c1,c2\n";
  for (Eigen::Index i = 0; i < proj.rows(); ++i) {
    fmt::format_to(std::back_inserter(out), "{},{},{:.6f},{:.6f}\n", dataset.instances[owner[i]].id,
                   label_name(dataset.instances[owner[i]].label), proj(i, 0), proj(i, 1));
  }
  return out;
}

}  // namespace noisenet::predict
