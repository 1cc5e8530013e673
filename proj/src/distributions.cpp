#include "rsvi/distributions.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "rsvi/errors.hpp"
#include "rsvi/special.hpp"

namespace rsvi {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

bool positive_finite(double x) { return x > 0.0 && std::isfinite(x); }

void require_arity(std::span<const double> v, std::size_t n, const char* what) {
  if (v.size() != n) {
    throw ContractError(std::string(what) + ": expected " + std::to_string(n) + " values, got " +
                        std::to_string(v.size()));
  }
}

}  // namespace

GammaParams::GammaParams(double shape, double rate) : shape_(shape), rate_(rate) {
  if (!positive_finite(shape) || !positive_finite(rate)) {
    throw DomainError("GammaParams: shape and rate must be positive, got (" +
                      std::to_string(shape) + ", " + std::to_string(rate) + ")");
  }
}

GammaMeanShapeParams::GammaMeanShapeParams(double shape, double mean) : shape_(shape), mean_(mean) {
  if (!positive_finite(shape) || !positive_finite(mean)) {
    throw DomainError("GammaMeanShapeParams: shape and mean must be positive, got (" +
                      std::to_string(shape) + ", " + std::to_string(mean) + ")");
  }
}

DirichletParams::DirichletParams(std::vector<double> concentrations)
    : alpha_(std::move(concentrations)) {
  if (alpha_.size() < 2) throw ContractError("DirichletParams: need at least two components");
  for (double a : alpha_) {
    if (!positive_finite(a)) throw DomainError("DirichletParams: concentrations must be positive");
  }
  total_ = std::accumulate(alpha_.begin(), alpha_.end(), 0.0);
}

double gamma_log_pdf(double z, const GammaParams& p) {
  if (!(z > 0.0) || std::isinf(z)) return kNegInf;
  const double a = p.shape();
  const double b = p.rate();
  return (a - 1.0) * std::log(z) - b * z + a * std::log(b) - log_gamma_fn(a);
}

double gamma_log_pdf(double z, const GammaMeanShapeParams& p) {
  return gamma_log_pdf(z, p.to_rate_form());
}

double gamma_entropy(const GammaParams& p) {
  const double a = p.shape();
  return a - std::log(p.rate()) + log_gamma_fn(a) + (1.0 - a) * digamma(a);
}

double gamma_entropy(const GammaMeanShapeParams& p) { return gamma_entropy(p.to_rate_form()); }

GammaRateGrad gamma_entropy_grad(const GammaParams& p) {
  const double a = p.shape();
  return {1.0 + (1.0 - a) * trigamma(a), -1.0 / p.rate()};
}

GammaMeanShapeGrad gamma_entropy_grad(const GammaMeanShapeParams& p) {
  // H = α - ln α + ln μ + ln Γ(α) + (1 - α) ψ(α)
  const double a = p.shape();
  return {1.0 - 1.0 / a + (1.0 - a) * trigamma(a), 1.0 / p.mean()};
}

GammaMeanShapeGrad gamma_score(double z, const GammaMeanShapeParams& p) {
  if (!(z > 0.0)) throw DomainError("gamma_score: z must be positive");
  const double a = p.shape();
  const double mu = p.mean();
  return {std::log(a / mu) + 1.0 - digamma(a) + std::log(z) - z / mu, a * (z - mu) / (mu * mu)};
}

double dirichlet_log_pdf(std::span<const double> z, const DirichletParams& p) {
  require_arity(z, p.size(), "dirichlet_log_pdf");
  double sum = 0.0;
  bool boundary = false;
  for (double zk : z) {
    if (!(zk >= 0.0)) throw DomainError("dirichlet_log_pdf: negative coordinate");
    if (zk == 0.0) boundary = true;
    sum += zk;
  }
  if (std::abs(sum - 1.0) > kSimplexTolerance) {
    throw DomainError("dirichlet_log_pdf: point is off the simplex (sum = " +
                      std::to_string(sum) + ")");
  }
  if (boundary) return kNegInf;
  double lp = log_gamma_fn(p.total());
  for (std::size_t k = 0; k < z.size(); ++k) {
    lp += (p[k] - 1.0) * std::log(z[k]) - log_gamma_fn(p[k]);
  }
  return lp;
}

double dirichlet_entropy(const DirichletParams& p) {
  const double a0 = p.total();
  const double k = static_cast<double>(p.size());
  double h = -log_gamma_fn(a0) + (a0 - k) * digamma(a0);
  for (double a : p.concentrations()) h += log_gamma_fn(a) - (a - 1.0) * digamma(a);
  return h;
}

std::vector<double> dirichlet_entropy_grad(const DirichletParams& p) {
  const double a0 = p.total();
  const double common = (a0 - static_cast<double>(p.size())) * trigamma(a0);
  std::vector<double> g(p.size());
  for (std::size_t k = 0; k < p.size(); ++k) g[k] = common - (p[k] - 1.0) * trigamma(p[k]);
  return g;
}

double dirichlet_kl(const DirichletParams& p, const DirichletParams& q) {
  if (p.size() != q.size()) throw ContractError("dirichlet_kl: dimension mismatch");
  if (p == q) return 0.0;
  const double p0 = p.total();
  const double psi0 = digamma(p0);
  double kl = log_gamma_fn(p0) - log_gamma_fn(q.total());
  for (std::size_t k = 0; k < p.size(); ++k) {
    kl += log_gamma_fn(q[k]) - log_gamma_fn(p[k]) + (p[k] - q[k]) * (digamma(p[k]) - psi0);
  }
  return std::max(kl, 0.0);
}

std::vector<double> dirichlet_score(std::span<const double> z, const DirichletParams& p) {
  require_arity(z, p.size(), "dirichlet_score");
  const double psi0 = digamma(p.total());
  std::vector<double> g(p.size());
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (!(z[k] > 0.0)) throw DomainError("dirichlet_score: coordinate must be positive");
    g[k] = psi0 - digamma(p[k]) + std::log(z[k]);
  }
  return g;
}

AuxiliaryRecipe auxiliary_recipe(DerivedFamily family, std::span<const double> params) {
  for (double v : params) {
    if (!positive_finite(v)) throw DomainError("auxiliary_recipe: parameters must be positive");
  }
  switch (family) {
    case DerivedFamily::beta:
      require_arity(params, 2, "beta parameters");
      return {{params[0], params[1]}, false};
    case DerivedFamily::dirichlet:
      if (params.size() < 2) throw ContractError("dirichlet parameters: need K >= 2");
      return {{params.begin(), params.end()}, false};
    case DerivedFamily::student_t:
      require_arity(params, 1, "student_t parameters");
      return {{params[0] / 2.0}, true};
    case DerivedFamily::chi_squared:
      require_arity(params, 1, "chi_squared parameters");
      return {{params[0] / 2.0}, false};
    case DerivedFamily::f_dist:
      require_arity(params, 2, "f_dist parameters");
      return {{params[0] / 2.0, params[1] / 2.0}, false};
    case DerivedFamily::nakagami:
      require_arity(params, 2, "nakagami parameters");
      return {{params[0]}, false};
  }
  throw ContractError("auxiliary_recipe: unknown family");
}

std::vector<double> derived_transform(DerivedFamily family, std::span<const double> aux,
                                      std::span<const double> params) {
  const AuxiliaryRecipe recipe = auxiliary_recipe(family, params);
  require_arity(aux, recipe.gamma_shapes.size() + (recipe.trailing_normal ? 1 : 0),
                "derived_transform auxiliary draws");
  switch (family) {
    case DerivedFamily::beta:
      return {aux[0] / (aux[0] + aux[1])};
    case DerivedFamily::dirichlet: {
      const double s = std::accumulate(aux.begin(), aux.end(), 0.0);
      std::vector<double> z(aux.begin(), aux.end());
      for (double& v : z) v /= s;
      return z;
    }
    case DerivedFamily::student_t:
      return {std::sqrt(params[0] / (2.0 * aux[0])) * aux[1]};
    case DerivedFamily::chi_squared:
      return {2.0 * aux[0]};
    case DerivedFamily::f_dist:
      return {(params[1] * aux[0]) / (params[0] * aux[1])};
    case DerivedFamily::nakagami:
      return {std::sqrt(params[1] * aux[0] / params[0])};
  }
  throw ContractError("derived_transform: unknown family");
}

}  // namespace rsvi
