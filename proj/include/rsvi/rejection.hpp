#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "rsvi/distributions.hpp"
#include "rsvi/random.hpp"

namespace rsvi {

// Marsaglia-Tsang transform ---------------------------------------------------
//
// h(ε, α) = (α - 1/3)(1 + ε / sqrt(9α - 3))³ with ε ~ N(0, 1) proposes
// Gam(α, 1) for α >= 1. The transform is invertible on ε > -sqrt(9α - 3).

/// True when ε lies strictly inside the transform's support for shape α.
bool in_gamma_transform_support(double eps, double shape) noexcept;

/// h(ε, α). Returns nullopt when ε is at or below -sqrt(9α - 3): the cube
/// would be non-positive and the proposal is an automatic reject. Throws
/// DomainError for α < 1.
std::optional<double> h_gam(double eps, double shape);

/// ∂h/∂ε. Throws DomainError outside the support.
double dh_deps(double eps, double shape);

/// ∂h/∂α. Throws DomainError outside the support.
double dh_dalpha(double eps, double shape);

/// ln q(h(ε,α); α, 1) - ln r(h(ε,α); α), written via the change of variables
/// r(h(ε)) = s(ε) / |dh/dε|. The accepted-ε density is s(ε) exp(log_ratio).
double log_ratio_q_over_r(double eps, double shape);

/// ln M for the sampler at shape α: the supremum over ε of the log-ratio,
/// located by golden-section search. The acceptance probability is exp(-log_M).
double envelope_log_M(double shape);

// Sampling ------------------------------------------------------------------

inline constexpr std::uint64_t kDefaultTrialBudget = 1'000'000;

/// One accepted run of the reparameterized rejection sampler.
struct AcceptedDraw {
  double epsilon = 0.0;
  double z = 0.0;  // h(ε, α + B) · Π u_i^{1/(α+i-1)} / β
  std::uint64_t trials = 0;
  std::vector<double> aug_uniforms;  // u_1..u_B, each in (0, 1)
};

/// Immutable gamma sampler. Shapes below one are lifted by augmentation so the
/// transform always runs at effective_shape = α + B >= 1.
class GammaSampler {
 public:
  GammaSampler(const GammaParams& target, unsigned aug_steps,
               std::uint64_t trial_budget = kDefaultTrialBudget);

  const GammaParams& target() const noexcept { return target_; }
  unsigned aug_steps() const noexcept { return aug_steps_; }
  double effective_shape() const noexcept { return effective_shape_; }
  double log_envelope() const noexcept { return log_M_; }
  std::uint64_t trial_budget() const noexcept { return trial_budget_; }

  /// Runs propose/test rounds until acceptance. Throws SamplerStall once the
  /// trial budget is spent.
  AcceptedDraw sample(RandomStream& stream) const;

  /// z from its ingredients; sample() uses the same arithmetic.
  double recompute_z(double eps, std::span<const double> aug_uniforms) const;

  /// Log-ratio at the effective shape, evaluated with cached constants.
  double log_ratio(double eps) const;

 private:
  GammaParams target_;
  unsigned aug_steps_;
  double effective_shape_;
  double log_M_;
  std::uint64_t trial_budget_;
  double d_;         // α_eff - 1/3
  double c_;         // 1 / sqrt(9 α_eff - 3)
  double log_norm_;  // ε-independent part of the log-ratio
};

/// Builds a sampler for `p`, raising B to at least one when shape < 1.
GammaSampler make_gamma_sampler(const GammaParams& p, unsigned aug_steps,
                                std::uint64_t trial_budget = kDefaultTrialBudget);

AcceptedDraw sample_gamma_eps(const GammaSampler& sampler, RandomStream& stream);

struct DirichletDraw {
  std::vector<AcceptedDraw> coordinates;  // rate-1 gamma draws, z holds z̃_k
  std::vector<double> point;              // z̃ / Σ z̃
};

/// One rate-1 gamma sampler per concentration.
std::vector<GammaSampler> make_dirichlet_samplers(const DirichletParams& p, unsigned aug_steps);

DirichletDraw sample_dirichlet_eps(std::span<const GammaSampler> samplers, RandomStream& stream);
DirichletDraw sample_dirichlet_eps(const DirichletParams& p, unsigned aug_steps,
                                   RandomStream& stream);

/// Draw from a derived family by sampling its auxiliary variables and
/// applying derived_transform.
std::vector<double> sample_derived(DerivedFamily family, std::span<const double> params,
                                   unsigned aug_steps, RandomStream& stream);

// Other reparameterizable proposals -------------------------------------------

enum class ExtrasFamily { truncated_normal_tail, von_mises };

/// truncated_normal_tail (params: a > 0; ε in (0, 1]):  sqrt(a² - 2 ln ε)
/// von_mises (params: κ > 0; ε in [-1, 1]): Best-Fisher wrapped-Cauchy proposal
///   sign(ε) arccos((1 + c cos πε) / (c + cos πε)), c = (1 + ρ²) / 2ρ,
///   ρ = (r - sqrt(2r)) / 2κ, r = 1 + sqrt(1 + 4κ²).
double extras_transform(ExtrasFamily family, double eps, std::span<const double> params);

/// Log density of N(0, 1) restricted to [a, ∞).
double truncated_normal_tail_log_pdf(double z, double a);

/// Log density of the von Mises distribution with zero mean on [-π, π].
double von_mises_log_pdf(double x, double kappa);

}  // namespace rsvi
