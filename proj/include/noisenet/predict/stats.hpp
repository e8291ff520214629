#pragma once

#include <span>

namespace noisenet::predict {

inline constexpr std::size_t kMinZTestSamples = 30;

struct ZTest {
  double z = 0;
  double p_two_sided = 1;
  double mean_a = 0;
  double mean_b = 0;
};

double mean(std::span<const double> x);
/// Unbiased (n - 1) sample variance.
double sample_variance(std::span<const double> x);

/// Large-sample comparison of means. Throws DomainError when either sample
/// has fewer than 30 values or both variances are zero.
ZTest mean_comparison_ztest(std::span<const double> a, std::span<const double> b);

/// Two-sided tail probability of the standard normal.
double normal_two_sided_p(double z);

}  // namespace noisenet::predict
