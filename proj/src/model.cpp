#include "rsvi/model.hpp"

#include <cmath>

#include "rsvi/errors.hpp"
#include "rsvi/finite_diff.hpp"

namespace rsvi {

std::size_t latent_count(const LatentLayout& layout) {
  std::size_t n = 0;
  for (const auto& b : layout) n += b.dim;
  return n;
}

std::size_t parameter_count(const LatentLayout& layout) {
  std::size_t n = 0;
  for (const auto& b : layout) n += b.family == LatentFamily::gamma_mean_shape ? 2 * b.dim : b.dim;
  return n;
}

std::vector<std::string> parameter_names(const LatentLayout& layout) {
  std::vector<std::string> names;
  names.reserve(parameter_count(layout));
  for (const auto& b : layout) {
    if (b.family == LatentFamily::gamma_mean_shape) {
      for (std::size_t i = 0; i < b.dim; ++i) names.push_back(b.name + ".shape[" + std::to_string(i) + "]");
      for (std::size_t i = 0; i < b.dim; ++i) names.push_back(b.name + ".mean[" + std::to_string(i) + "]");
    } else {
      for (std::size_t i = 0; i < b.dim; ++i) names.push_back(b.name + ".alpha[" + std::to_string(i) + "]");
    }
  }
  return names;
}

void check_parameters(const LatentLayout& layout, std::span<const double> theta) {
  if (theta.size() != parameter_count(layout)) {
    throw ContractError("parameter vector has " + std::to_string(theta.size()) +
                        " entries, layout expects " + std::to_string(parameter_count(layout)));
  }
  for (std::size_t i = 0; i < theta.size(); ++i) {
    if (!(theta[i] > 0.0) || !std::isfinite(theta[i])) {
      throw DomainError("variational parameter " + std::to_string(i) + " must be positive, got " +
                        std::to_string(theta[i]));
    }
  }
}

GradientCheckResult check_model_gradient(const ModelSpec& model, RandomStream& stream,
                                         std::size_t points, double tolerance) {
  GradientCheckResult result;
  const std::size_t n = latent_count(model.layout);
  std::vector<double> z(n);
  for (std::size_t p = 0; p < points; ++p) {
    std::size_t offset = 0;
    for (const auto& b : model.layout) {
      double total = 0.0;
      for (std::size_t i = 0; i < b.dim; ++i) {
        z[offset + i] = 0.2 * std::exp(std::log(25.0) * stream.uniform());
        total += z[offset + i];
      }
      if (b.family == LatentFamily::dirichlet) {
        for (std::size_t i = 0; i < b.dim; ++i) z[offset + i] /= total;
      }
      offset += b.dim;
    }
    const std::vector<double> analytic = model.grad_latents(z);
    const std::vector<double> numeric = finite_diff_grad(model.log_joint, z, 1e-6);
    // Central differences carry roundoff of order 1e-10 |f|; components below
    // the floor are effectively compared in absolute terms.
    const double floor = 1e-4 * (1.0 + std::abs(model.log_joint(z)));
    for (std::size_t i = 0; i < n; ++i) {
      const double err = relative_error(analytic[i], numeric[i], floor);
      if (err > result.max_relative_error) {
        result.max_relative_error = err;
        result.worst_coordinate = i;
      }
    }
    ++result.points;
  }
  result.passed = result.max_relative_error <= tolerance;
  return result;
}

}  // namespace rsvi
