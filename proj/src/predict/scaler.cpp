#include "noisenet/predict/scaler.hpp"

#include "noisenet/common/errors.hpp"

namespace noisenet::predict {

Scaler standardize_fit(const Eigen::MatrixXd& rows) {
  if (rows.rows() == 0) throw DomainError("cannot fit a scaler on no rows");
  Scaler s;
  s.mean = rows.colwise().mean();
  const Eigen::MatrixXd centered = rows.rowwise() - s.mean;
  s.sd = (centered.array().square().colwise().sum() / static_cast<double>(rows.rows())).sqrt();
  return s;
}

Eigen::MatrixXd standardize_apply(const Scaler& scaler, const Eigen::MatrixXd& rows) {
  if (rows.cols() != scaler.mean.size()) throw DomainError("scaler and rows differ in width");
  Eigen::MatrixXd out = rows.rowwise() - scaler.mean;
  for (Eigen::Index j = 0; j < out.cols(); ++j) {
    if (scaler.sd(j) > 0.0) out.col(j) /= scaler.sd(j);
    else out.col(j).setZero();
  }
  return out;
}

}  // namespace noisenet::predict
