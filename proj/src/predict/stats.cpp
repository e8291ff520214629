#include "noisenet/predict/stats.hpp"

#include <cmath>

#include <fmt/format.h>

#include "noisenet/common/errors.hpp"

namespace noisenet::predict {

double mean(std::span<const double> x) {
  if (x.empty()) throw DomainError("mean of an empty sample");
  double s = 0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

double sample_variance(std::span<const double> x) {
  if (x.size() < 2) throw DomainError("variance needs two values");
  const double m = mean(x);
  double ss = 0;
  for (double v : x) ss += (v - m) * (v - m);
  return ss / static_cast<double>(x.size() - 1);
}

double normal_two_sided_p(double z) { return std::erfc(std::abs(z) / std::sqrt(2.0)); }

ZTest mean_comparison_ztest(std::span<const double> a, std::span<const double> b) {
  if (a.size() < kMinZTestSamples || b.size() < kMinZTestSamples) {
    throw DomainError(fmt::format("z-test needs at least {} values per sample, got {} and {}", kMinZTestSamples,
                                  a.size(), b.size()));
  }
  ZTest t;
  t.mean_a = mean(a);
  t.mean_b = mean(b);
  const double se2 = sample_variance(a) / static_cast<double>(a.size()) + sample_variance(b) / static_cast<double>(b.size());
  if (!(se2 > 0.0)) throw DomainError("z-test undefined: both samples have zero variance");
  t.z = (t.mean_a - t.mean_b) / std::sqrt(se2);
  t.p_two_sided = normal_two_sided_p(t.z);
  return t;
}

}  // namespace noisenet::predict
