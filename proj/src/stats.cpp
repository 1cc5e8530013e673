#include "rsvi/stats.hpp"

#include <algorithm>
#include <cmath>

#include "rsvi/errors.hpp"

namespace rsvi {

SampleMoments sample_moments(std::span<const double> xs) {
  SampleMoments m;
  m.count = xs.size();
  if (xs.empty()) return m;
  // Welford update.
  double mean = 0.0;
  double m2 = 0.0;
  std::size_t n = 0;
  for (double x : xs) {
    ++n;
    const double delta = x - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta * (x - mean);
  }
  m.mean = mean;
  if (n > 1) {
    m.variance = m2 / static_cast<double>(n - 1);
    m.std_error = std::sqrt(m.variance / static_cast<double>(n));
  }
  return m;
}

double median(std::span<const double> xs) {
  if (xs.empty()) throw ContractError("median: empty input");
  std::vector<double> v(xs.begin(), xs.end());
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

double ks_statistic(std::span<const double> xs, const std::function<double(double)>& cdf) {
  if (xs.empty()) throw ContractError("ks_statistic: empty sample");
  std::vector<double> sorted(xs.begin(), xs.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = cdf(sorted[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

double ks_p_value(double statistic, std::size_t n) {
  if (n == 0) throw ContractError("ks_p_value: n must be positive");
  const double sn = std::sqrt(static_cast<double>(n));
  const double lambda = (sn + 0.12 + 0.11 / sn) * statistic;
  if (lambda < 0.2) return 1.0;
  double sum = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= 200; ++k) {
    const double term = sign * std::exp(-2.0 * k * k * lambda * lambda);
    sum += term;
    if (std::abs(term) < 1e-16) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

}  // namespace rsvi
