#pragma once

#include <Eigen/Dense>

namespace noisenet::predict {

enum class ScalerFit { Train, Test };

/// Per-feature standardization with population standard deviation.
struct Scaler {
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd sd;
};

/// Throws DomainError for an empty fit set.
Scaler standardize_fit(const Eigen::MatrixXd& rows);
/// (x - mean) / sd; features with sd = 0 become 0.
Eigen::MatrixXd standardize_apply(const Scaler& scaler, const Eigen::MatrixXd& rows);

}  // namespace noisenet::predict
