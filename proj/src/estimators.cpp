#include "rsvi/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rsvi/distributions.hpp"
#include "rsvi/errors.hpp"
#include "rsvi/special.hpp"
#include "rsvi/stats.hpp"

namespace rsvi {
namespace {

constexpr std::size_t kNoParam = std::numeric_limits<std::size_t>::max();

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

using detail::LatentIndex;

LatentIndex index_layout(const LatentLayout& layout) {
  LatentIndex idx;
  std::size_t po = 0;
  std::size_t lo = 0;
  for (const auto& b : layout) {
    if (b.family == LatentFamily::gamma_mean_shape) {
      for (std::size_t i = 0; i < b.dim; ++i) {
        idx.shape_param.push_back(po + i);
        idx.mean_param.push_back(po + b.dim + i);
      }
      po += 2 * b.dim;
    } else {
      for (std::size_t i = 0; i < b.dim; ++i) {
        idx.shape_param.push_back(po + i);
        idx.mean_param.push_back(kNoParam);
      }
      idx.simplex_ranges.emplace_back(lo, lo + b.dim);
      po += b.dim;
    }
    lo += b.dim;
  }
  return idx;
}

// Normalizes each simplex block of the auxiliary gammas in place.
void normalize_simplex_blocks(const LatentIndex& idx, std::span<double> z) {
  for (auto [begin, end] : idx.simplex_ranges) {
    double total = 0.0;
    for (std::size_t k = begin; k < end; ++k) total += z[k];
    for (std::size_t k = begin; k < end; ++k) z[k] /= total;
  }
}

// Turns ∇_z f into ∇_z̃ f on simplex blocks: z = z̃ / S gives
// ∂f/∂z̃_j = (∂f/∂z_j - Σ_k z_k ∂f/∂z_k) / S.
void pull_back_simplex(const LatentIndex& idx, std::span<const double> z_tilde,
                       std::span<const double> z, std::span<double> grad) {
  for (auto [begin, end] : idx.simplex_ranges) {
    double total = 0.0;
    double inner = 0.0;
    for (std::size_t k = begin; k < end; ++k) {
      total += z_tilde[k];
      inner += z[k] * grad[k];
    }
    for (std::size_t k = begin; k < end; ++k) grad[k] = (grad[k] - inner) / total;
  }
}

}  // namespace

std::string to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::rsvi:
      return "rsvi";
    case EstimatorKind::score_function:
      return "score_function";
    case EstimatorKind::importance:
      return "importance";
  }
  return "unknown";
}

EstimatorKind parse_estimator_kind(const std::string& name) {
  if (name == "rsvi") return EstimatorKind::rsvi;
  if (name == "score_function" || name == "score") return EstimatorKind::score_function;
  if (name == "importance") return EstimatorKind::importance;
  throw ContractError("unknown estimator kind '" + name + "'");
}

double grad_log_ratio_gamma(double eps, double shape) {
  const double h = h_gam(eps, shape).value_or(0.0);
  if (!(h > 0.0)) throw DomainError("grad_log_ratio_gamma: epsilon outside transform support");
  const double dh = dh_dalpha(eps, shape);
  const double k = 9.0 * shape - 3.0;
  const double y = 1.0 + eps / std::sqrt(k);
  const double d_log_q = std::log(h) + (shape - 1.0) * dh / h - dh - digamma(shape);
  const double d_log_jac = 1.0 / (2.0 * (shape - 1.0 / 3.0)) - 9.0 * eps / (y * k * std::sqrt(k));
  return d_log_q + d_log_jac;
}

// VariationalFamily ---------------------------------------------------------

VariationalFamily::VariationalFamily(const LatentLayout& layout, std::span<const double> theta,
                                     unsigned aug_steps)
    : layout_(&layout),
      theta_(theta.begin(), theta.end()),
      aug_steps_(aug_steps),
      latent_count_(rsvi::latent_count(layout)) {
  check_parameters(layout, theta);
  samplers_.reserve(latent_count_);
  std::size_t po = 0;
  for (const auto& b : layout) {
    if (b.family == LatentFamily::gamma_mean_shape) {
      for (std::size_t i = 0; i < b.dim; ++i) {
        const GammaMeanShapeParams p(theta[po + i], theta[po + b.dim + i]);
        samplers_.emplace_back(p.to_rate_form(), aug_steps);
      }
      po += 2 * b.dim;
    } else {
      for (std::size_t i = 0; i < b.dim; ++i) {
        samplers_.emplace_back(GammaParams(theta[po + i], 1.0), aug_steps);
      }
      po += b.dim;
    }
  }
}

double VariationalFamily::entropy() const {
  double h = 0.0;
  std::size_t po = 0;
  for (const auto& b : *layout_) {
    if (b.family == LatentFamily::gamma_mean_shape) {
      for (std::size_t i = 0; i < b.dim; ++i) {
        h += gamma_entropy(GammaMeanShapeParams(theta_[po + i], theta_[po + b.dim + i]));
      }
      po += 2 * b.dim;
    } else {
      h += dirichlet_entropy(DirichletParams({theta_.begin() + static_cast<std::ptrdiff_t>(po),
                                              theta_.begin() + static_cast<std::ptrdiff_t>(po + b.dim)}));
      po += b.dim;
    }
  }
  return h;
}

std::vector<double> VariationalFamily::entropy_grad() const {
  std::vector<double> g(theta_.size());
  std::size_t po = 0;
  for (const auto& b : *layout_) {
    if (b.family == LatentFamily::gamma_mean_shape) {
      for (std::size_t i = 0; i < b.dim; ++i) {
        const auto eg = gamma_entropy_grad(GammaMeanShapeParams(theta_[po + i], theta_[po + b.dim + i]));
        g[po + i] = eg.d_shape;
        g[po + b.dim + i] = eg.d_mean;
      }
      po += 2 * b.dim;
    } else {
      const auto eg = dirichlet_entropy_grad(
          DirichletParams({theta_.begin() + static_cast<std::ptrdiff_t>(po),
                           theta_.begin() + static_cast<std::ptrdiff_t>(po + b.dim)}));
      std::copy(eg.begin(), eg.end(), g.begin() + static_cast<std::ptrdiff_t>(po));
      po += b.dim;
    }
  }
  return g;
}

std::uint64_t VariationalFamily::sample(RandomStream& stream, std::span<double> z) const {
  if (z.size() != latent_count_) throw ContractError("VariationalFamily::sample: size mismatch");
  std::uint64_t trials = 0;
  for (std::size_t j = 0; j < samplers_.size(); ++j) {
    const AcceptedDraw d = samplers_[j].sample(stream);
    z[j] = d.z;
    trials += d.trials;
  }
  std::size_t lo = 0;
  for (const auto& b : *layout_) {
    if (b.family == LatentFamily::dirichlet) {
      double total = 0.0;
      for (std::size_t k = lo; k < lo + b.dim; ++k) total += z[k];
      for (std::size_t k = lo; k < lo + b.dim; ++k) z[k] /= total;
    }
    lo += b.dim;
  }
  return trials;
}

// GradientEstimator ---------------------------------------------------------

GradientEstimator::GradientEstimator(const ModelSpec& model, std::span<const double> theta,
                                     EstimatorConfig cfg)
    : model_(&model),
      cfg_(cfg),
      family_(model.layout, theta, cfg.aug_steps),
      index_(index_layout(model.layout)) {
  if (cfg_.draws == 0) throw DomainError("EstimatorConfig: draws must be >= 1");
  entropy_grad_ = family_.entropy_grad();
}

double GradientEstimator::eval_log_joint(std::span<const double> z) const {
  const double f = model_->log_joint(z);
  if (!std::isfinite(f)) {
    throw EstimateRejected("log joint is non-finite (" + std::to_string(f) + ") at a sampled point");
  }
  return f;
}

std::vector<double> GradientEstimator::eval_grad(std::span<const double> z) const {
  std::vector<double> g = model_->grad_latents(z);
  if (g.size() != z.size()) throw ContractError("grad_latents returned the wrong size");
  if (!all_finite(g)) throw EstimateRejected("model gradient is non-finite at a sampled point");
  return g;
}

double GradientEstimator::dlogz_dshape(std::size_t j, double eps,
                                       std::span<const double> aug) const {
  const GammaSampler& s = family_.sampler(j);
  const double alpha_eff = s.effective_shape();
  double d = dh_dalpha(eps, alpha_eff) / *h_gam(eps, alpha_eff);
  // z depends on α through Π u_i^{1/(α+i-1)} as well.
  const double alpha = s.target().shape();
  for (std::size_t i = 0; i < aug.size(); ++i) {
    const double a = alpha + static_cast<double>(i);
    d -= std::log(aug[i]) / (a * a);
  }
  return d;
}

void GradientEstimator::rsvi_draw(RandomStream& stream, GradientEstimate& acc) const {
  const LatentIndex& idx = index_;
  const std::size_t n = family_.latent_count();
  std::vector<AcceptedDraw> draws(n);
  std::vector<double> z_tilde(n);
  for (std::size_t j = 0; j < n; ++j) {
    draws[j] = family_.sampler(j).sample(stream);
    z_tilde[j] = draws[j].z;
    acc.trials += draws[j].trials;
  }
  std::vector<double> z = z_tilde;
  normalize_simplex_blocks(idx, z);

  const double f = eval_log_joint(z);
  std::vector<double> g = eval_grad(z);
  pull_back_simplex(idx, z_tilde, z, g);

  const auto theta = family_.theta();
  for (std::size_t j = 0; j < n; ++j) {
    const AcceptedDraw& d = draws[j];
    const GammaSampler& s = family_.sampler(j);
    const std::size_t a = idx.shape_param[j];
    const std::size_t m = idx.mean_param[j];
    double dlogz = dlogz_dshape(j, d.epsilon, d.aug_uniforms);
    if (m != kNoParam) {
      dlogz -= 1.0 / theta[a];  // rate α/μ moves with the shape
      acc.g_rep[m] += g[j] * z_tilde[j] / theta[m];
    }
    acc.g_rep[a] += g[j] * z_tilde[j] * dlogz;
    acc.g_cor[a] += f * grad_log_ratio_gamma(d.epsilon, s.effective_shape());
  }
}

void GradientEstimator::score_draw(RandomStream& stream, GradientEstimate& acc) const {
  const LatentIndex& idx = index_;
  std::vector<double> z(family_.latent_count());
  acc.trials += family_.sample(stream, z);
  const double f = eval_log_joint(z);
  const auto theta = family_.theta();

  for (std::size_t j = 0; j < z.size(); ++j) {
    const std::size_t m = idx.mean_param[j];
    if (m == kNoParam) continue;
    const std::size_t a = idx.shape_param[j];
    const auto score = gamma_score(z[j], GammaMeanShapeParams(theta[a], theta[m]));
    acc.g_cor[a] += f * score.d_shape;
    acc.g_cor[m] += f * score.d_mean;
  }
  for (auto [begin, end] : idx.simplex_ranges) {
    const std::size_t p0 = idx.shape_param[begin];
    const DirichletParams q({theta.begin() + static_cast<std::ptrdiff_t>(p0),
                             theta.begin() + static_cast<std::ptrdiff_t>(p0 + end - begin)});
    const auto score = dirichlet_score(std::span<const double>(z).subspan(begin, end - begin), q);
    for (std::size_t k = 0; k < score.size(); ++k) acc.g_cor[p0 + k] += f * score[k];
  }
}

void GradientEstimator::importance_draw(RandomStream& stream, GradientEstimate& acc) const {
  const LatentIndex& idx = index_;
  const std::size_t n = family_.latent_count();
  std::vector<double> eps(n);
  std::vector<std::vector<double>> aug(n);
  double log_w = 0.0;
  double log_m_total = 0.0;
  bool in_support = true;
  for (std::size_t j = 0; j < n; ++j) {
    const GammaSampler& s = family_.sampler(j);
    eps[j] = stream.std_normal();
    aug[j].resize(s.aug_steps());
    for (double& u : aug[j]) u = stream.uniform_open();
    if (!in_gamma_transform_support(eps[j], s.effective_shape())) {
      in_support = false;
      continue;
    }
    log_w += s.log_ratio(eps[j]);
    log_m_total += s.log_envelope();
  }
  if (!in_support) return;  // q/r vanishes outside the transform's range
  acc.max_log_weight_excess = std::max(acc.max_log_weight_excess, log_w - log_m_total);
  const double w = std::exp(log_w);
  if (w == 0.0) return;

  std::vector<double> z_tilde(n);
  for (std::size_t j = 0; j < n; ++j) z_tilde[j] = family_.sampler(j).recompute_z(eps[j], aug[j]);
  std::vector<double> z = z_tilde;
  normalize_simplex_blocks(idx, z);
  const double f = eval_log_joint(z);
  std::vector<double> g = eval_grad(z);
  pull_back_simplex(idx, z_tilde, z, g);

  const auto theta = family_.theta();
  for (std::size_t j = 0; j < n; ++j) {
    const GammaSampler& s = family_.sampler(j);
    const std::size_t a = idx.shape_param[j];
    const std::size_t m = idx.mean_param[j];
    double dlogz = dlogz_dshape(j, eps[j], aug[j]);
    if (m != kNoParam) {
      dlogz -= 1.0 / theta[a];
      acc.g_rep[m] += w * g[j] * z_tilde[j] / theta[m];
    }
    acc.g_rep[a] += w * g[j] * z_tilde[j] * dlogz;
    acc.g_cor[a] += w * f * grad_log_ratio_gamma(eps[j], s.effective_shape());
  }
}

GradientEstimate GradientEstimator::operator()(RandomStream& stream) const {
  const std::size_t np = family_.theta().size();
  GradientEstimate est;
  est.g_rep.assign(np, 0.0);
  est.g_cor.assign(np, 0.0);
  est.max_log_weight_excess = -std::numeric_limits<double>::infinity();
  for (unsigned s = 0; s < cfg_.draws; ++s) {
    switch (cfg_.kind) {
      case EstimatorKind::rsvi:
        rsvi_draw(stream, est);
        break;
      case EstimatorKind::score_function:
        score_draw(stream, est);
        break;
      case EstimatorKind::importance:
        importance_draw(stream, est);
        break;
    }
  }
  if (cfg_.kind != EstimatorKind::importance) est.max_log_weight_excess = 0.0;
  const double inv = 1.0 / static_cast<double>(cfg_.draws);
  est.g_entropy = entropy_grad_;
  est.total.resize(np);
  for (std::size_t i = 0; i < np; ++i) {
    est.g_rep[i] *= inv;
    est.g_cor[i] *= inv;
    est.total[i] = est.g_rep[i] + est.g_cor[i] + est.g_entropy[i];
  }
  est.draws = cfg_.draws;
  if (!all_finite(est.total)) throw EstimateRejected("gradient estimate has non-finite entries");
  return est;
}

// Free functions ------------------------------------------------------------

GradientEstimate estimate_gradient(const ModelSpec& model, std::span<const double> theta,
                                   const EstimatorConfig& cfg, RandomStream& stream) {
  EstimatorConfig c = cfg;
  c.kind = EstimatorKind::rsvi;
  return GradientEstimator(model, theta, c)(stream);
}

GradientEstimate estimate_gradient_score(const ModelSpec& model, std::span<const double> theta,
                                         const EstimatorConfig& cfg, RandomStream& stream) {
  EstimatorConfig c = cfg;
  c.kind = EstimatorKind::score_function;
  return GradientEstimator(model, theta, c)(stream);
}

GradientEstimate estimate_gradient_importance(const ModelSpec& model,
                                              std::span<const double> theta,
                                              const EstimatorConfig& cfg, RandomStream& stream) {
  EstimatorConfig c = cfg;
  c.kind = EstimatorKind::importance;
  return GradientEstimator(model, theta, c)(stream);
}

GradientEstimate estimate_any(const ModelSpec& model, std::span<const double> theta,
                              const EstimatorConfig& cfg, RandomStream& stream) {
  return GradientEstimator(model, theta, cfg)(stream);
}

std::string estimator_label(const EstimatorConfig& cfg) {
  std::string label = to_string(cfg.kind);
  if (cfg.kind != EstimatorKind::score_function) label += "(B=" + std::to_string(cfg.aug_steps) + ")";
  if (cfg.draws != 1) label += "[S=" + std::to_string(cfg.draws) + "]";
  return label;
}

VarianceProfile variance_profile(const ModelSpec& model, std::span<const double> theta,
                                 const EstimatorConfig& cfg, std::size_t replicates,
                                 const RandomStream& stream) {
  if (replicates < 2) throw DomainError("variance_profile: need at least 2 replicates");
  const GradientEstimator estimator(model, theta, cfg);
  const std::size_t np = theta.size();
  std::vector<double> mean(np, 0.0);
  std::vector<double> m2(np, 0.0);
  for (std::size_t r = 0; r < replicates; ++r) {
    RandomStream child = stream.derive(r);
    const GradientEstimate est = estimator(child);
    const double n = static_cast<double>(r + 1);
    for (std::size_t i = 0; i < np; ++i) {
      const double delta = est.total[i] - mean[i];
      mean[i] += delta / n;
      m2[i] += delta * (est.total[i] - mean[i]);
    }
  }
  VarianceProfile prof;
  prof.label = estimator_label(cfg);
  prof.replicates = replicates;
  prof.means = mean;
  prof.variances.resize(np);
  for (std::size_t i = 0; i < np; ++i) {
    prof.variances[i] = m2[i] / static_cast<double>(replicates - 1);
  }
  prof.min = *std::min_element(prof.variances.begin(), prof.variances.end());
  prof.max = *std::max_element(prof.variances.begin(), prof.variances.end());
  prof.median = median(prof.variances);
  return prof;
}

double estimate_elbo(const ModelSpec& model, const VariationalFamily& q, std::size_t draws,
                     RandomStream& stream) {
  if (draws == 0) throw DomainError("estimate_elbo: draws must be >= 1");
  std::vector<double> z(q.latent_count());
  double acc = 0.0;
  for (std::size_t d = 0; d < draws; ++d) {
    q.sample(stream, z);
    const double f = model.log_joint(z);
    if (!std::isfinite(f)) throw EstimateRejected("ELBO draw produced a non-finite log joint");
    acc += f;
  }
  return acc / static_cast<double>(draws) + q.entropy();
}

}  // namespace rsvi
