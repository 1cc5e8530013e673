#include "rsvi/rejection.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>

#include "rsvi/errors.hpp"
#include "rsvi/special.hpp"

namespace rsvi {
namespace {

void require_transform_shape(double shape, const char* fn) {
  if (!(shape >= 1.0) || !std::isfinite(shape)) {
    throw DomainError(std::string(fn) + ": shape must be >= 1, got " + std::to_string(shape));
  }
}

void require_support(double eps, double shape, const char* fn) {
  require_transform_shape(shape, fn);
  if (!in_gamma_transform_support(eps, shape)) {
    throw DomainError(std::string(fn) + ": epsilon " + std::to_string(eps) +
                      " outside transform support for shape " + std::to_string(shape));
  }
}

// ε-independent part of the log-ratio: (α-1) ln d + ½ ln d - ln Γ(α) + ½ ln 2π.
double log_ratio_constant(double shape) {
  const double d = shape - 1.0 / 3.0;
  return (shape - 0.5) * std::log(d) - log_gamma_fn(shape) +
         0.5 * std::log(2.0 * std::numbers::pi);
}

constexpr double kInvPhi = 0.6180339887498948482;  // (sqrt(5) - 1) / 2
constexpr double kSearchTolerance = 1e-10;
constexpr double kSearchHalfWidth = 8.0;

}  // namespace

bool in_gamma_transform_support(double eps, double shape) noexcept {
  return std::isfinite(eps) && 1.0 + eps / std::sqrt(9.0 * shape - 3.0) > 0.0;
}

std::optional<double> h_gam(double eps, double shape) {
  require_transform_shape(shape, "h_gam");
  const double y = 1.0 + eps / std::sqrt(9.0 * shape - 3.0);
  if (!(y > 0.0)) return std::nullopt;
  return (shape - 1.0 / 3.0) * (y * y * y);
}

double dh_deps(double eps, double shape) {
  require_support(eps, shape, "dh_deps");
  const double s = std::sqrt(9.0 * shape - 3.0);
  const double y = 1.0 + eps / s;
  return 3.0 * (shape - 1.0 / 3.0) * y * y / s;
}

double dh_dalpha(double eps, double shape) {
  require_support(eps, shape, "dh_dalpha");
  const double k = 9.0 * shape - 3.0;
  const double y = 1.0 + eps / std::sqrt(k);
  // d/dα [(α - 1/3) y³] = y³ + 3(α - 1/3) y² ∂y/∂α, and 3(α - 1/3) = k/3.
  return y * y * y - 1.5 * eps / std::sqrt(k) * y * y;
}

double log_ratio_q_over_r(double eps, double shape) {
  require_support(eps, shape, "log_ratio_q_over_r");
  const double h = *h_gam(eps, shape);
  return gamma_log_pdf(h, GammaParams(shape, 1.0)) + std::log(dh_deps(eps, shape)) -
         normal_log_pdf(eps);
}

double envelope_log_M(double shape) {
  require_transform_shape(shape, "envelope_log_M");
  const double boundary = -std::sqrt(9.0 * shape - 3.0);
  double lo = std::max(boundary * (1.0 - 1e-9), -kSearchHalfWidth);
  double hi = kSearchHalfWidth;
  // Search the ε-dependent part only; the normalizer is added back at the end.
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * shape - 3.0);
  const auto f = [d, c](double e) {
    const double y = 1.0 + c * e;
    if (!(y > 0.0)) return -std::numeric_limits<double>::infinity();
    return 3.0 * d * std::log(y) - d * (y * y * y) + 0.5 * e * e;
  };

  double x1 = hi - kInvPhi * (hi - lo);
  double x2 = lo + kInvPhi * (hi - lo);
  double f1 = f(x1);
  double f2 = f(x2);
  int iterations = 0;
  while (hi - lo > kSearchTolerance) {
    if (++iterations > 500) throw NumericalError("envelope_log_M: golden-section did not converge");
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + kInvPhi * (hi - lo);
      f2 = f(x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - kInvPhi * (hi - lo);
      f1 = f(x1);
    }
  }
  const double best = std::max({f1, f2, f(0.5 * (lo + hi))});
  if (!std::isfinite(best) || hi >= kSearchHalfWidth - 1e-6) {
    throw NumericalError("envelope_log_M: maximum not bracketed for shape " +
                         std::to_string(shape));
  }
  return best + log_ratio_constant(shape);
}

GammaSampler::GammaSampler(const GammaParams& target, unsigned aug_steps,
                           std::uint64_t trial_budget)
    : target_(target),
      aug_steps_(target.shape() < 1.0 && aug_steps == 0 ? 1u : aug_steps),
      effective_shape_(target.shape() + static_cast<double>(aug_steps_)),
      log_M_(envelope_log_M(effective_shape_)),
      trial_budget_(trial_budget),
      d_(effective_shape_ - 1.0 / 3.0),
      c_(1.0 / std::sqrt(9.0 * effective_shape_ - 3.0)),
      log_norm_(log_ratio_constant(effective_shape_)) {
  if (trial_budget_ == 0) throw DomainError("GammaSampler: trial budget must be positive");
}

double GammaSampler::log_ratio(double eps) const {
  const double y = 1.0 + c_ * eps;
  if (!(y > 0.0)) return -std::numeric_limits<double>::infinity();
  return 3.0 * d_ * std::log(y) - d_ * (y * y * y) + 0.5 * eps * eps + log_norm_;
}

double GammaSampler::recompute_z(double eps, std::span<const double> aug_uniforms) const {
  const double y = 1.0 + c_ * eps;
  double z = d_ * (y * y * y);
  const double alpha = target_.shape();
  for (std::size_t i = 0; i < aug_uniforms.size(); ++i) {
    z *= std::pow(aug_uniforms[i], 1.0 / (alpha + static_cast<double>(i)));
  }
  return z / target_.rate();
}

AcceptedDraw GammaSampler::sample(RandomStream& stream) const {
  AcceptedDraw draw;
  for (std::uint64_t trial = 1; trial <= trial_budget_; ++trial) {
    const double eps = stream.std_normal();
    const double u = stream.uniform();
    if (!(1.0 + c_ * eps > 0.0)) continue;
    if (std::log(u) < log_ratio(eps) - log_M_) {
      draw.epsilon = eps;
      draw.trials = trial;
      draw.aug_uniforms.resize(aug_steps_);
      for (double& ui : draw.aug_uniforms) ui = stream.uniform_open();
      draw.z = recompute_z(eps, draw.aug_uniforms);
      return draw;
    }
  }
  throw SamplerStall(effective_shape_, log_M_, trial_budget_);
}

GammaSampler make_gamma_sampler(const GammaParams& p, unsigned aug_steps,
                                std::uint64_t trial_budget) {
  return GammaSampler(p, aug_steps, trial_budget);
}

AcceptedDraw sample_gamma_eps(const GammaSampler& sampler, RandomStream& stream) {
  return sampler.sample(stream);
}

std::vector<GammaSampler> make_dirichlet_samplers(const DirichletParams& p, unsigned aug_steps) {
  std::vector<GammaSampler> samplers;
  samplers.reserve(p.size());
  for (double a : p.concentrations()) samplers.emplace_back(GammaParams(a, 1.0), aug_steps);
  return samplers;
}

DirichletDraw sample_dirichlet_eps(std::span<const GammaSampler> samplers, RandomStream& stream) {
  DirichletDraw out;
  out.coordinates.reserve(samplers.size());
  double total = 0.0;
  for (const GammaSampler& s : samplers) {
    out.coordinates.push_back(s.sample(stream));
    total += out.coordinates.back().z;
  }
  out.point.resize(samplers.size());
  for (std::size_t k = 0; k < samplers.size(); ++k) out.point[k] = out.coordinates[k].z / total;
  return out;
}

DirichletDraw sample_dirichlet_eps(const DirichletParams& p, unsigned aug_steps,
                                   RandomStream& stream) {
  const auto samplers = make_dirichlet_samplers(p, aug_steps);
  return sample_dirichlet_eps(samplers, stream);
}

std::vector<double> sample_derived(DerivedFamily family, std::span<const double> params,
                                   unsigned aug_steps, RandomStream& stream) {
  const AuxiliaryRecipe recipe = auxiliary_recipe(family, params);
  std::vector<double> aux;
  aux.reserve(recipe.gamma_shapes.size() + 1);
  for (double shape : recipe.gamma_shapes) {
    aux.push_back(GammaSampler(GammaParams(shape, 1.0), aug_steps).sample(stream).z);
  }
  if (recipe.trailing_normal) aux.push_back(stream.std_normal());
  return derived_transform(family, aux, params);
}

double extras_transform(ExtrasFamily family, double eps, std::span<const double> params) {
  if (params.size() != 1) throw ContractError("extras_transform: expects exactly one parameter");
  const double theta = params[0];
  if (!(theta > 0.0) || !std::isfinite(theta)) {
    throw DomainError("extras_transform: parameter must be positive");
  }
  switch (family) {
    case ExtrasFamily::truncated_normal_tail:
      if (!(eps > 0.0 && eps <= 1.0)) {
        throw DomainError("truncated_normal_tail: epsilon must lie in (0, 1]");
      }
      return std::sqrt(theta * theta - 2.0 * std::log(eps));
    case ExtrasFamily::von_mises: {
      if (!(eps >= -1.0 && eps <= 1.0)) {
        throw DomainError("von_mises: epsilon must lie in [-1, 1]");
      }
      const double r = 1.0 + std::sqrt(1.0 + 4.0 * theta * theta);
      const double rho = (r - std::sqrt(2.0 * r)) / (2.0 * theta);
      const double c = (1.0 + rho * rho) / (2.0 * rho);
      const double w = std::cos(std::numbers::pi * eps);
      const double f = std::clamp((1.0 + c * w) / (c + w), -1.0, 1.0);
      return (eps < 0.0 ? -1.0 : 1.0) * std::acos(f);
    }
  }
  throw ContractError("extras_transform: unknown family");
}

double truncated_normal_tail_log_pdf(double z, double a) {
  if (!(a > 0.0)) throw DomainError("truncated_normal_tail_log_pdf: a must be positive");
  if (!(z >= a) || std::isinf(z)) return -std::numeric_limits<double>::infinity();
  return normal_log_pdf(z) - std::log(0.5 * std::erfc(a / std::numbers::sqrt2));
}

double von_mises_log_pdf(double x, double kappa) {
  if (!(kappa > 0.0) || !std::isfinite(kappa)) {
    throw DomainError("von_mises_log_pdf: kappa must be positive");
  }
  if (!(x >= -std::numbers::pi && x <= std::numbers::pi)) {
    return -std::numeric_limits<double>::infinity();
  }
  // ln I0(κ); the large-κ branch uses the leading asymptotic terms.
  const double log_i0 =
      kappa < 500.0 ? std::log(std::cyl_bessel_i(0.0, kappa))
                    : kappa - 0.5 * std::log(2.0 * std::numbers::pi * kappa) +
                          std::log1p(1.0 / (8.0 * kappa) + 9.0 / (128.0 * kappa * kappa));
  return kappa * std::cos(x) - std::log(2.0 * std::numbers::pi) - log_i0;
}

}  // namespace rsvi
