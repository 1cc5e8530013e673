#include "rsvi/finite_diff.hpp"

#include <algorithm>
#include <cmath>

#include "rsvi/errors.hpp"

namespace rsvi {

std::vector<double> finite_diff_grad(const ScalarField& f, std::span<const double> x, double h) {
  if (!(h > 0.0)) throw DomainError("finite_diff_grad: step must be positive");
  std::vector<double> point(x.begin(), x.end());
  std::vector<double> grad(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xi = point[i];
    point[i] = xi + h;
    const double up = f(point);
    point[i] = xi - h;
    const double down = f(point);
    point[i] = xi;
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw FiniteDiffError(i, "finite_diff_grad: non-finite evaluation at coordinate " +
                                   std::to_string(i));
    }
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

double relative_error(double a, double b, double floor) {
  const double scale = std::max({std::abs(a), std::abs(b), floor});
  return std::abs(a - b) / scale;
}

double max_relative_error(std::span<const double> a, std::span<const double> b, double floor) {
  if (a.size() != b.size()) throw ContractError("max_relative_error: size mismatch");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, relative_error(a[i], b[i], floor));
  }
  return worst;
}

}  // namespace rsvi
