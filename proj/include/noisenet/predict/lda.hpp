#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace noisenet::predict {

inline constexpr double kLdaRegularization = 1e-6;

struct LdaModel {
  Eigen::RowVectorXd mean;
  /// d x k, unit columns, ordered by discriminative power.
  Eigen::MatrixXd components;
  Eigen::VectorXd eigenvalues;
  bool regularized = false;
  std::vector<std::string> warnings;

  Eigen::MatrixXd transform(const Eigen::MatrixXd& x) const;
};

/// Labels are 0..C-1. Components come from the generalized problem
/// Sb v = lambda Sw v. With two classes there is one discriminant; a second
/// component is the top total-scatter eigenvector made orthogonal to it.
/// A singular Sw gets epsilon * I added and a warning.
LdaModel lda_fit(const Eigen::MatrixXd& x, const std::vector<int>& y, int n_components = 2);

/// (w . (mu1 - mu0))^2 / (w' Sw w / n): between-class separation of the
/// projection over the pooled within-class variance. Two classes only.
double fisher_criterion(const Eigen::VectorXd& w, const Eigen::MatrixXd& x, const std::vector<int>& y);

}  // namespace noisenet::predict
