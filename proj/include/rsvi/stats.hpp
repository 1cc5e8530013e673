#pragma once

#include <functional>
#include <span>
#include <vector>

namespace rsvi {

struct SampleMoments {
  double mean = 0.0;
  double variance = 0.0;  // unbiased (n - 1 denominator)
  double std_error = 0.0;  // sqrt(variance / n)
  std::size_t count = 0;
};

SampleMoments sample_moments(std::span<const double> xs);

/// Median of a copy of xs; mean of the middle pair for even sizes.
double median(std::span<const double> xs);

/// One-sample Kolmogorov-Smirnov statistic sup |F_n(x) - F(x)|.
double ks_statistic(std::span<const double> xs, const std::function<double(double)>& cdf);

/// Asymptotic p-value of a one-sample KS statistic on n points (Stephens'
/// finite-sample correction applied to the Kolmogorov survival function).
double ks_p_value(double statistic, std::size_t n);

}  // namespace rsvi
