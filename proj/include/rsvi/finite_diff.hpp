#pragma once

#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace rsvi {

using ScalarField = std::function<double(std::span<const double>)>;

/// Raised when f is non-finite at a perturbed point; names the coordinate.
class FiniteDiffError : public std::runtime_error {
 public:
  FiniteDiffError(std::size_t coordinate, const std::string& what)
      : std::runtime_error(what), coordinate_(coordinate) {}
  std::size_t coordinate() const noexcept { return coordinate_; }

 private:
  std::size_t coordinate_;
};

/// Central differences (f(x + h e_i) - f(x - h e_i)) / 2h for every coordinate.
std::vector<double> finite_diff_grad(const ScalarField& f, std::span<const double> x, double h);

/// Relative error |a - b| / max(|a|, |b|, floor). The floor keeps near-zero
/// comparisons from blowing up.
double relative_error(double a, double b, double floor = 1e-8);

/// Largest relative_error across two equally sized vectors.
double max_relative_error(std::span<const double> a, std::span<const double> b,
                          double floor = 1e-8);

}  // namespace rsvi
