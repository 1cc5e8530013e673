#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rsvi/model.hpp"
#include "rsvi/random.hpp"
#include "rsvi/rejection.hpp"

namespace rsvi {

enum class EstimatorKind { rsvi, score_function, importance };

struct EstimatorConfig {
  EstimatorKind kind = EstimatorKind::rsvi;
  unsigned aug_steps = 1;  // B
  unsigned draws = 1;      // S, averaged per estimate
};

std::string to_string(EstimatorKind kind);
EstimatorKind parse_estimator_kind(const std::string& name);

/// One stochastic ELBO gradient, kept in its three parts.
/// total = g_rep + g_cor + g_entropy elementwise.
struct GradientEstimate {
  std::vector<double> g_rep;
  std::vector<double> g_cor;
  std::vector<double> g_entropy;
  std::vector<double> total;
  std::size_t draws = 0;
  std::uint64_t trials = 0;  // propose/test rounds consumed (rsvi, score_function)
  /// Importance estimator only: max over draws of ln w - Σ ln M. Never positive.
  double max_log_weight_excess = 0.0;
};

/// ∂/∂α of ln q(h(ε,α); α) - ln r(h(ε,α); α) for the gamma transform:
/// the score of q along the path plus the log-Jacobian derivative.
double grad_log_ratio_gamma(double eps, double shape);

namespace detail {
// For flattened latent j: the parameter holding its shape (or concentration)
// and the one holding its mean (absent for dirichlet coordinates).
struct LatentIndex {
  std::vector<std::size_t> shape_param;
  std::vector<std::size_t> mean_param;
  std::vector<std::pair<std::size_t, std::size_t>> simplex_ranges;  // [begin, end) latents
};
}  // namespace detail

/// Variational distribution prepared at one parameter point: validated
/// parameters plus a rejection sampler per gamma coordinate.
class VariationalFamily {
 public:
  VariationalFamily(const LatentLayout& layout, std::span<const double> theta, unsigned aug_steps);

  const LatentLayout& layout() const noexcept { return *layout_; }
  std::span<const double> theta() const noexcept { return theta_; }
  unsigned aug_steps() const noexcept { return aug_steps_; }
  std::size_t latent_count() const noexcept { return latent_count_; }

  /// Analytic entropy and its gradient with respect to θ.
  double entropy() const;
  std::vector<double> entropy_grad() const;

  /// Writes one exact draw of every latent into z; returns trials used.
  std::uint64_t sample(RandomStream& stream, std::span<double> z) const;

  /// Sampler for gamma coordinate `j` of the flattened auxiliary gammas
  /// (gamma latents and dirichlet coordinates in layout order).
  const GammaSampler& sampler(std::size_t j) const { return samplers_[j]; }
  std::size_t sampler_count() const noexcept { return samplers_.size(); }

 private:
  const LatentLayout* layout_;
  std::vector<double> theta_;
  unsigned aug_steps_;
  std::size_t latent_count_;
  std::vector<GammaSampler> samplers_;
};

/// Draws gradient estimates of one kind at a fixed parameter point.
class GradientEstimator {
 public:
  GradientEstimator(const ModelSpec& model, std::span<const double> theta, EstimatorConfig cfg);

  GradientEstimate operator()(RandomStream& stream) const;

  const VariationalFamily& family() const noexcept { return family_; }

 private:
  // Accumulate one draw's g_rep / g_cor contributions.
  void rsvi_draw(RandomStream& stream, GradientEstimate& acc) const;
  void score_draw(RandomStream& stream, GradientEstimate& acc) const;
  void importance_draw(RandomStream& stream, GradientEstimate& acc) const;

  // ∂z̃_j/∂(own shape) for the gamma coordinate behind sampler j.
  double dlogz_dshape(std::size_t j, double eps, std::span<const double> aug) const;

  double eval_log_joint(std::span<const double> z) const;
  std::vector<double> eval_grad(std::span<const double> z) const;

  const ModelSpec* model_;
  EstimatorConfig cfg_;
  VariationalFamily family_;
  detail::LatentIndex index_;
  std::vector<double> entropy_grad_;
};

/// RSVI: accepted ε per latent, ĝ = ĝ_rep + ĝ_cor + ∇H from the same draw.
GradientEstimate estimate_gradient(const ModelSpec& model, std::span<const double> theta,
                                   const EstimatorConfig& cfg, RandomStream& stream);

/// Score function f(z) ∇ ln q(z) + ∇H; g_rep is zero.
GradientEstimate estimate_gradient_score(const ModelSpec& model, std::span<const double> theta,
                                         const EstimatorConfig& cfg, RandomStream& stream);

/// ε drawn from the proposal directly, both terms weighted by q/r.
GradientEstimate estimate_gradient_importance(const ModelSpec& model,
                                              std::span<const double> theta,
                                              const EstimatorConfig& cfg, RandomStream& stream);

/// Dispatches on cfg.kind.
GradientEstimate estimate_any(const ModelSpec& model, std::span<const double> theta,
                              const EstimatorConfig& cfg, RandomStream& stream);

struct VarianceProfile {
  std::string label;
  std::vector<double> variances;  // per parameter, unbiased
  std::vector<double> means;      // per parameter
  double min = 0.0;
  double median = 0.0;
  double max = 0.0;
  std::size_t replicates = 0;
};

std::string estimator_label(const EstimatorConfig& cfg);

/// G independent estimates (replicate g uses stream.derive(g)); per-coordinate
/// sample variance and its min / median / max.
VarianceProfile variance_profile(const ModelSpec& model, std::span<const double> theta,
                                 const EstimatorConfig& cfg, std::size_t replicates,
                                 const RandomStream& stream);

/// Monte Carlo ELBO: mean of f over `draws` fresh samples plus the analytic entropy.
double estimate_elbo(const ModelSpec& model, const VariationalFamily& q, std::size_t draws,
                     RandomStream& stream);

}  // namespace rsvi
