#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "rsvi/random.hpp"

namespace rsvi {

enum class LatentFamily { gamma_mean_shape, dirichlet };

/// A contiguous group of latents sharing one variational family.
///
/// A gamma_mean_shape block of dimension D owns D independent gamma latents
/// and 2D variational parameters laid out as [shape_1..shape_D, mean_1..mean_D].
/// A dirichlet block of dimension K owns one simplex-valued latent with K
/// coordinates and K concentration parameters.
struct LatentBlock {
  std::string name;
  LatentFamily family;
  std::size_t dim;
};

using LatentLayout = std::vector<LatentBlock>;

/// A model as seen by the estimators: f(z) = log p(x, z) and its gradient.
///
/// Latent values are passed flat, block after block, in layout order. For
/// dirichlet blocks, f must accept any strictly positive vector (not only
/// simplex points) and grad_latents must be the gradient of that extension;
/// the estimators pull it back through the normalization map.
struct ModelSpec {
  LatentLayout layout;
  std::function<double(std::span<const double>)> log_joint;
  std::function<std::vector<double>(std::span<const double>)> grad_latents;
};

std::size_t latent_count(const LatentLayout& layout);
std::size_t parameter_count(const LatentLayout& layout);

/// Names like "w0.shape[3]", "z1.mean[0]", "theta.alpha[2]" in parameter order.
std::vector<std::string> parameter_names(const LatentLayout& layout);

/// Validates that θ has the right length and is strictly positive.
void check_parameters(const LatentLayout& layout, std::span<const double> theta);

struct GradientCheckResult {
  double max_relative_error = 0.0;
  std::size_t points = 0;
  std::size_t worst_coordinate = 0;
  bool passed = false;
};

/// Compares grad_latents against central differences of log_joint at random
/// interior points. Gamma latents are drawn log-uniformly on [0.2, 5];
/// dirichlet blocks at normalized positive points.
GradientCheckResult check_model_gradient(const ModelSpec& model, RandomStream& stream,
                                         std::size_t points = 20, double tolerance = 1e-4);

}  // namespace rsvi
