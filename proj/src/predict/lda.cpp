#include "noisenet/predict/lda.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "noisenet/common/errors.hpp"

namespace noisenet::predict {

namespace {

struct Scatter {
  Eigen::RowVectorXd mean;
  std::vector<Eigen::RowVectorXd> class_means;
  std::vector<std::size_t> counts;
  Eigen::MatrixXd within;
  Eigen::MatrixXd between;
};

Scatter scatter(const Eigen::MatrixXd& x, const std::vector<int>& y) {
  if (static_cast<std::size_t>(x.rows()) != y.size()) throw DomainError("rows and labels differ in length");
  if (x.rows() == 0) throw DomainError("no rows");
  const int classes = *std::max_element(y.begin(), y.end()) + 1;
  if (*std::min_element(y.begin(), y.end()) < 0) throw DomainError("labels must be nonnegative");
  const auto d = x.cols();
  Scatter s;
  s.mean = x.colwise().mean();
  s.class_means.assign(classes, Eigen::RowVectorXd::Zero(d));
  s.counts.assign(classes, 0);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    s.class_means[y[i]] += x.row(i);
    ++s.counts[y[i]];
  }
  for (int c = 0; c < classes; ++c) {
    if (s.counts[c] == 0) throw DomainError(fmt::format("class {} has no rows", c));
    s.class_means[c] /= static_cast<double>(s.counts[c]);
  }
  Eigen::MatrixXd centered(x.rows(), d);
  for (Eigen::Index i = 0; i < x.rows(); ++i) centered.row(i) = x.row(i) - s.class_means[y[i]];
  s.within = centered.transpose() * centered;
  s.between = Eigen::MatrixXd::Zero(d, d);
  for (int c = 0; c < classes; ++c) {
    const Eigen::RowVectorXd dm = s.class_means[c] - s.mean;
    s.between += static_cast<double>(s.counts[c]) * dm.transpose() * dm;
  }
  return s;
}

void orient(Eigen::Ref<Eigen::VectorXd> v) {
  Eigen::Index k = 0;
  v.cwiseAbs().maxCoeff(&k);
  if (v(k) < 0) v = -v;
}

}  // namespace

Eigen::MatrixXd LdaModel::transform(const Eigen::MatrixXd& x) const {
  return (x.rowwise() - mean) * components;
}

LdaModel lda_fit(const Eigen::MatrixXd& x, const std::vector<int>& y, int n_components) {
  const auto s = scatter(x, y);
  const int classes = static_cast<int>(s.counts.size());
  if (classes < 2) throw DomainError("LDA needs at least two classes");
  if (n_components < 1 || (n_components > classes - 1 && !(classes == 2 && n_components == 2))) {
    throw DomainError(fmt::format("{} components requested for {} classes", n_components, classes));
  }
  const auto d = x.cols();
  if (n_components > d) throw DomainError("more components than features");

  LdaModel m;
  m.mean = s.mean;
  Eigen::MatrixXd sw = s.within;
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> sw_eig(sw, Eigen::EigenvaluesOnly);
  const double lo = sw_eig.eigenvalues().minCoeff();
  const double hi = std::max(sw_eig.eigenvalues().maxCoeff(), 1.0);
  if (lo <= 1e-12 * hi) {
    sw += kLdaRegularization * Eigen::MatrixXd::Identity(d, d);
    m.regularized = true;
    m.warnings.push_back(fmt::format("within-class scatter is singular; added {:g} * I", kLdaRegularization));
  }
  const Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(s.between, sw);
  if (ges.info() != Eigen::Success) throw DomainError("generalized eigenproblem did not converge");

  const int discriminants = std::min(n_components, classes - 1);
  m.components.resize(d, n_components);
  m.eigenvalues.resize(n_components);
  for (int k = 0; k < discriminants; ++k) {
    const auto col = d - 1 - k;  // ascending order from the solver
    Eigen::VectorXd v = ges.eigenvectors().col(col);
    v.normalize();
    m.components.col(k) = v;
    m.eigenvalues(k) = ges.eigenvalues()(col);
  }
  if (classes == 2) {
    Eigen::VectorXd c1 = m.components.col(0);
    if ((s.class_means[1] - s.class_means[0]).dot(c1.transpose()) < 0) c1 = -c1;
    m.components.col(0) = c1;
  } else {
    for (int k = 0; k < discriminants; ++k) orient(m.components.col(k));
  }
  if (n_components > discriminants) {
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> st(s.within + s.between);
    const Eigen::VectorXd c1 = m.components.col(0);
    for (auto col = d - 1; col >= 0; --col) {
      Eigen::VectorXd v = st.eigenvectors().col(col);
      v -= v.dot(c1) * c1;
      if (v.norm() < 1e-8) continue;
      v.normalize();
      orient(v);
      m.components.col(1) = v;
      m.eigenvalues(1) = st.eigenvalues()(col);
      break;
    }
  }
  return m;
}

double fisher_criterion(const Eigen::VectorXd& w, const Eigen::MatrixXd& x, const std::vector<int>& y) {
  const auto s = scatter(x, y);
  if (s.counts.size() != 2) throw DomainError("Fisher criterion is defined for two classes");
  const double between = (s.class_means[1] - s.class_means[0]).dot(w.transpose());
  const double within = w.dot(s.within * w) / static_cast<double>(x.rows());
  if (!(within > 0.0)) throw DomainError("projection has zero within-class variance");
  return between * between / within;
}

}  // namespace noisenet::predict
