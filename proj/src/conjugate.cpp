#include <cmath>
#include <numeric>

#include "rsvi/errors.hpp"
#include "rsvi/models.hpp"
#include "rsvi/rejection.hpp"
#include "rsvi/special.hpp"

namespace rsvi {

ConjugateModel::ConjugateModel(std::vector<double> prior, std::vector<std::uint64_t> counts)
    : prior_(std::move(prior)), counts_(std::move(counts)) {
  if (prior_.size() < 2) throw DomainError("ConjugateModel: need K >= 2");
  if (counts_.size() != prior_.size()) {
    throw ContractError("ConjugateModel: prior and counts differ in length");
  }
  for (double a : prior_) {
    if (!(a > 0.0) || !std::isfinite(a)) throw DomainError("ConjugateModel: prior must be positive");
  }
  trials_ = std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});

  const double prior_total = std::accumulate(prior_.begin(), prior_.end(), 0.0);
  constant_ = log_gamma_fn(static_cast<double>(trials_) + 1.0) + log_gamma_fn(prior_total);
  for (std::size_t k = 0; k < prior_.size(); ++k) {
    constant_ -= log_gamma_fn(static_cast<double>(counts_[k]) + 1.0) + log_gamma_fn(prior_[k]);
  }
}

DirichletParams ConjugateModel::posterior() const {
  std::vector<double> a(prior_.size());
  for (std::size_t k = 0; k < a.size(); ++k) a[k] = prior_[k] + static_cast<double>(counts_[k]);
  return DirichletParams(std::move(a));
}

double ConjugateModel::log_evidence() const {
  const DirichletParams post = posterior();
  double lp = log_gamma_fn(static_cast<double>(trials_) + 1.0) +
              log_gamma_fn(std::accumulate(prior_.begin(), prior_.end(), 0.0)) -
              log_gamma_fn(post.total());
  for (std::size_t k = 0; k < prior_.size(); ++k) {
    lp += log_gamma_fn(post[k]) - log_gamma_fn(prior_[k]) -
          log_gamma_fn(static_cast<double>(counts_[k]) + 1.0);
  }
  return lp;
}

double conjugate_log_joint(const ConjugateModel& m, std::span<const double> z) {
  if (z.size() != m.dim()) throw ContractError("conjugate_log_joint: dimension mismatch");
  double f = m.log_joint_constant();
  for (std::size_t k = 0; k < z.size(); ++k) {
    if (!(z[k] > 0.0)) throw DomainError("conjugate_log_joint: coordinates must be positive");
    f += (m.prior()[k] - 1.0 + static_cast<double>(m.counts()[k])) * std::log(z[k]);
  }
  return f;
}

std::vector<double> conjugate_grad_latents(const ConjugateModel& m, std::span<const double> z) {
  if (z.size() != m.dim()) throw ContractError("conjugate_grad_latents: dimension mismatch");
  std::vector<double> g(z.size());
  for (std::size_t k = 0; k < z.size(); ++k) {
    if (!(z[k] > 0.0)) throw DomainError("conjugate_grad_latents: coordinates must be positive");
    g[k] = (m.prior()[k] - 1.0 + static_cast<double>(m.counts()[k])) / z[k];
  }
  return g;
}

std::vector<double> conjugate_grad(const ConjugateModel& m, std::span<const double> z_tilde) {
  if (z_tilde.size() != m.dim()) throw ContractError("conjugate_grad: dimension mismatch");
  // f(z̃/S) = C + Σ c_k (ln z̃_k - ln S)
  double total = 0.0;
  double c_sum = 0.0;
  for (std::size_t k = 0; k < z_tilde.size(); ++k) {
    if (!(z_tilde[k] > 0.0)) throw DomainError("conjugate_grad: z̃ must be strictly positive");
    total += z_tilde[k];
    c_sum += m.prior()[k] - 1.0 + static_cast<double>(m.counts()[k]);
  }
  std::vector<double> g(z_tilde.size());
  for (std::size_t k = 0; k < g.size(); ++k) {
    g[k] = (m.prior()[k] - 1.0 + static_cast<double>(m.counts()[k])) / z_tilde[k] - c_sum / total;
  }
  return g;
}

double conjugate_exact_elbo(const ConjugateModel& m, const DirichletParams& q) {
  if (q.size() != m.dim()) throw ContractError("conjugate_exact_elbo: dimension mismatch");
  const double psi0 = digamma(q.total());
  double elbo = m.log_joint_constant() + dirichlet_entropy(q);
  for (std::size_t k = 0; k < q.size(); ++k) {
    const double c = m.prior()[k] - 1.0 + static_cast<double>(m.counts()[k]);
    elbo += c * (digamma(q[k]) - psi0);
  }
  return elbo;
}

std::vector<double> conjugate_exact_elbo_grad(const ConjugateModel& m, const DirichletParams& q) {
  if (q.size() != m.dim()) throw ContractError("conjugate_exact_elbo_grad: dimension mismatch");
  const DirichletParams post = m.posterior();
  const double common = (post.total() - q.total()) * trigamma(q.total());
  std::vector<double> g(q.size());
  for (std::size_t k = 0; k < g.size(); ++k) g[k] = (post[k] - q[k]) * trigamma(q[k]) - common;
  return g;
}

ModelSpec make_conjugate_model_spec(std::shared_ptr<const ConjugateModel> m) {
  ModelSpec spec;
  spec.layout = {{"theta", LatentFamily::dirichlet, m->dim()}};
  spec.log_joint = [m](std::span<const double> z) { return conjugate_log_joint(*m, z); };
  spec.grad_latents = [m](std::span<const double> z) { return conjugate_grad_latents(*m, z); };
  return spec;
}

ConjugateModel make_synthetic_conjugate(std::vector<double> prior, std::uint64_t trials,
                                        RandomStream& stream) {
  const DirichletParams p(prior);
  const DirichletDraw draw = sample_dirichlet_eps(p, 1, stream);
  std::vector<double> cdf(draw.point.size());
  std::partial_sum(draw.point.begin(), draw.point.end(), cdf.begin());
  std::vector<std::uint64_t> counts(prior.size(), 0);
  for (std::uint64_t t = 0; t < trials; ++t) {
    const double u = stream.uniform() * cdf.back();
    std::size_t k = 0;
    while (k + 1 < cdf.size() && u >= cdf[k]) ++k;
    ++counts[k];
  }
  return ConjugateModel(std::move(prior), std::move(counts));
}

std::vector<double> default_initialization(const LatentLayout& layout) {
  std::vector<double> theta;
  theta.reserve(parameter_count(layout));
  for (const auto& b : layout) {
    if (b.family == LatentFamily::gamma_mean_shape) {
      theta.insert(theta.end(), b.dim, 0.5);
      theta.insert(theta.end(), b.dim, 1.0);
    } else {
      theta.insert(theta.end(), b.dim, 1.0);
    }
  }
  return theta;
}

}  // namespace rsvi
