#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace noisenet::predict {

struct ForestParams {
  std::size_t n_trees = 1000;
  /// 0 means floor(sqrt(d)).
  std::size_t features_per_split = 0;
  std::size_t min_leaf = 1;
  /// 0 means unlimited.
  std::size_t max_depth = 0;
  /// 0 means hardware concurrency. Results do not depend on it.
  unsigned threads = 0;
};

/// Bagged CART trees (Gini) for labels {0, 1}.
class RandomForest {
 public:
  /// Tree t draws from derive_seed(seed, t). Throws DomainError for an
  /// empty or single-class training set or labels outside {0, 1}.
  static RandomForest fit(const Eigen::MatrixXd& x, const std::vector<int>& y, const ForestParams& params,
                          std::uint64_t seed);

  /// Mean of the trees' leaf frequencies of class 1.
  double predict_proba(const Eigen::Ref<const Eigen::RowVectorXd>& row) const;
  int predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& row) const { return predict_proba(row) > 0.5 ? 1 : 0; }
  std::vector<int> predict(const Eigen::MatrixXd& x) const;

  /// Mean decrease in impurity, normalized to sum to 100.
  const std::vector<double>& importances() const { return importances_; }
  std::size_t tree_count() const { return trees_.size(); }
  std::size_t node_count() const;

  struct Node {
    int feature = -1;
    double threshold = 0;
    int left = -1;
    int right = -1;
    double p1 = 0;
  };

 private:
  std::vector<std::vector<Node>> trees_;
  std::vector<double> importances_;
};

}  // namespace noisenet::predict
