#include "rsvi/special.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "rsvi/errors.hpp"

namespace rsvi {
namespace {

// Arguments are shifted up to this value before the asymptotic series is applied.
constexpr double kAsymptoticThreshold = 10.0;

void require_positive(double x, const char* fn) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw DomainError(std::string(fn) + ": argument must be positive and finite, got " +
                      std::to_string(x));
  }
}

// Stirling series coefficients B_{2k} / (2k (2k-1)).
constexpr std::array<double, 8> kStirling = {
    1.0 / 12.0,   -1.0 / 360.0,     1.0 / 1260.0, -1.0 / 1680.0,
    1.0 / 1188.0, -691.0 / 360360.0, 1.0 / 156.0,  -3617.0 / 122400.0,
};

// B_{2k} / (2k) for the digamma expansion.
constexpr std::array<double, 7> kDigamma = {
    1.0 / 12.0, -1.0 / 120.0, 1.0 / 252.0, -1.0 / 240.0, 1.0 / 132.0, -691.0 / 32760.0, 1.0 / 12.0,
};

// B_{2k} for the trigamma expansion.
constexpr std::array<double, 7> kTrigamma = {
    1.0 / 6.0, -1.0 / 30.0, 1.0 / 42.0, -1.0 / 30.0, 5.0 / 66.0, -691.0 / 2730.0, 7.0 / 6.0,
};

}  // namespace

double log_gamma_fn(double x) {
  require_positive(x, "log_gamma_fn");
  if (x == 1.0 || x == 2.0) return 0.0;

  double shift = 0.0;
  double prod = 1.0;
  while (x < kAsymptoticThreshold) {
    prod *= x;
    x += 1.0;
  }
  if (prod != 1.0) shift = std::log(prod);

  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  double series = 0.0;
  double p = inv;
  for (double c : kStirling) {
    series += c * p;
    p *= inv2;
  }
  return (x - 0.5) * std::log(x) - x + 0.5 * std::log(2.0 * std::numbers::pi) + series - shift;
}

double digamma(double x) {
  require_positive(x, "digamma");
  double acc = 0.0;
  while (x < kAsymptoticThreshold) {
    acc -= 1.0 / x;
    x += 1.0;
  }
  const double inv2 = 1.0 / (x * x);
  double series = 0.0;
  double p = inv2;
  for (double c : kDigamma) {
    series += c * p;
    p *= inv2;
  }
  return acc + std::log(x) - 0.5 / x - series;
}

double trigamma(double x) {
  require_positive(x, "trigamma");
  double acc = 0.0;
  while (x < kAsymptoticThreshold) {
    acc += 1.0 / (x * x);
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  double series = 0.0;
  double p = inv2 * inv;
  for (double c : kTrigamma) {
    series += c * p;
    p *= inv2;
  }
  return acc + inv + 0.5 * inv2 + series;
}

double gamma_p(double a, double x) {
  require_positive(a, "gamma_p");
  if (std::isnan(x)) throw DomainError("gamma_p: NaN argument");
  if (x <= 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;

  const double log_prefactor = -x + a * std::log(x) - log_gamma_fn(a);
  constexpr int kMaxIter = 100000;
  constexpr double kEps = 1e-16;

  if (x < a + 1.0) {
    // Power series.
    double term = 1.0 / a;
    double sum = term;
    double ap = a;
    for (int n = 0; n < kMaxIter; ++n) {
      ap += 1.0;
      term *= x / ap;
      sum += term;
      if (std::abs(term) < std::abs(sum) * kEps) {
        return std::min(1.0, sum * std::exp(log_prefactor));
      }
    }
    throw NumericalError("gamma_p: series did not converge");
  }

  // Continued fraction for Q(a, x), modified Lentz.
  constexpr double kTiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < kMaxIter; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEps) {
      return std::max(0.0, 1.0 - std::exp(log_prefactor) * h);
    }
  }
  throw NumericalError("gamma_p: continued fraction did not converge");
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_log_pdf(double x) {
  return -0.5 * x * x - 0.5 * std::log(2.0 * std::numbers::pi);
}

}  // namespace rsvi
