#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "rsvi/distributions.hpp"
#include "rsvi/model.hpp"
#include "rsvi/random.hpp"

namespace rsvi {

// Conjugate Dirichlet-multinomial ---------------------------------------------

/// Multinomial counts with a Dirichlet prior, approximated by a Dirichlet q.
/// The posterior Dir(prior + counts) is exact, which makes this the reference
/// model for unbiasedness and convergence checks.
class ConjugateModel {
 public:
  ConjugateModel(std::vector<double> prior, std::vector<std::uint64_t> counts);

  std::size_t dim() const noexcept { return prior_.size(); }
  std::span<const double> prior() const noexcept { return prior_; }
  std::span<const std::uint64_t> counts() const noexcept { return counts_; }
  std::uint64_t trials() const noexcept { return trials_; }
  DirichletParams posterior() const;
  /// ln p(x), the ELBO's supremum.
  double log_evidence() const;
  /// z-independent part of the log joint.
  double log_joint_constant() const noexcept { return constant_; }

 private:
  std::vector<double> prior_;
  std::vector<std::uint64_t> counts_;
  std::uint64_t trials_ = 0;
  double constant_ = 0.0;
};

/// f(z) = C + Σ (α⁰_k - 1 + n_k) ln z_k, defined for any positive z; on the
/// simplex it is the exact log p(x, z).
double conjugate_log_joint(const ConjugateModel& m, std::span<const double> z);

/// ∇_z f of the extension above.
std::vector<double> conjugate_grad_latents(const ConjugateModel& m, std::span<const double> z);

/// Gradient of z̃ ↦ f(z̃ / Σ z̃) with respect to the auxiliary gammas z̃.
std::vector<double> conjugate_grad(const ConjugateModel& m, std::span<const double> z_tilde);

/// Exact ELBO at q: E_q[f] + H[q] in closed form.
double conjugate_exact_elbo(const ConjugateModel& m, const DirichletParams& q);

/// Exact ∇_α ELBO: (a_k - α_k) ψ'(α_k) - (a_0 - α_0) ψ'(α_0) with a the posterior.
std::vector<double> conjugate_exact_elbo_grad(const ConjugateModel& m, const DirichletParams& q);

/// Single dirichlet block named "theta".
ModelSpec make_conjugate_model_spec(std::shared_ptr<const ConjugateModel> m);

/// Draws z ~ Dir(prior) and then N multinomial counts from z.
ConjugateModel make_synthetic_conjugate(std::vector<double> prior, std::uint64_t trials,
                                        RandomStream& stream);

// Sparse gamma deep exponential family ----------------------------------------

/// Dense non-negative integer matrix, row-major.
struct CountMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint32_t> values;

  std::uint32_t at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
  std::uint32_t& at(std::size_t r, std::size_t c) { return values[r * cols + c]; }
};

struct DefHyperparams {
  double alpha_z = 0.1;
  double weight_shape = 0.1;
  double weight_rate = 0.3;
  double top_shape = 0.1;
  double top_rate = 0.1;
};

/// Layers ℓ = 1..L with K_ℓ components. For every observation n:
///   z^L_{n,k} ~ Gam(top_shape, top_rate)
///   z^ℓ_{n,k} ~ Gam(α_z, α_z / Σ_k' w^ℓ_{k',k} z^{ℓ+1}_{n,k'})     ℓ < L
///   x_{n,d}   ~ Poisson(Σ_k w^0_{k,d} z^1_{n,k})
/// with weights w ~ Gam(weight_shape, weight_rate).
///
/// Latent layout (all gamma_mean_shape, row-major):
///   z1 [N x K_1], ..., zL [N x K_L], w0 [K_1 x D], w1 [K_2 x K_1], ..., w{L-1} [K_L x K_{L-1}]
class SparseGammaDEF {
 public:
  SparseGammaDEF(std::vector<std::size_t> layer_sizes, CountMatrix data, DefHyperparams hyper = {});

  std::span<const std::size_t> layer_sizes() const noexcept { return layers_; }
  const CountMatrix& data() const noexcept { return data_; }
  const DefHyperparams& hyper() const noexcept { return hyper_; }
  std::size_t observations() const noexcept { return data_.rows; }
  std::size_t data_dim() const noexcept { return data_.cols; }

  LatentLayout layout() const;
  /// Offset of z^ℓ (ℓ = 1..L) and w^ℓ (ℓ = 0..L-1) in the flat latent vector.
  std::size_t z_offset(std::size_t layer) const { return z_offsets_.at(layer - 1); }
  std::size_t w_offset(std::size_t layer) const { return w_offsets_.at(layer); }
  std::size_t latent_count() const noexcept { return total_latents_; }

  /// Log joint; throws DomainError on non-positive latents.
  /// -inf when a positive count meets a rate that underflowed to zero.
  double log_joint(std::span<const double> latents) const;
  std::vector<double> grad(std::span<const double> latents) const;

 private:
  std::size_t upper_dim(std::size_t layer) const;  // size of the layer feeding w^ℓ's rows
  std::size_t lower_dim(std::size_t layer) const;  // D for ℓ = 0, else K_ℓ

  std::vector<std::size_t> layers_;
  CountMatrix data_;
  DefHyperparams hyper_;
  std::vector<std::size_t> z_offsets_;
  std::vector<std::size_t> w_offsets_;
  std::size_t total_latents_ = 0;
  double log_factorial_sum_ = 0.0;
};

ModelSpec make_def_model_spec(std::shared_ptr<const SparseGammaDEF> m);

struct SyntheticDefData {
  CountMatrix counts;
  std::vector<double> latents;  // generating latents in the model's layout order
};

struct SyntheticDefOptions {
  std::optional<double> fixed_weight;  // overrides sampled weights when set
};

/// Ancestral sampling from the DEF prior. A rate that underflows to zero gives
/// a zero count.
SyntheticDefData make_synthetic_def_data(std::span<const std::size_t> layer_sizes,
                                         std::size_t n_obs, std::size_t dim,
                                         const DefHyperparams& hyper, RandomStream& stream,
                                         const SyntheticDefOptions& options = {});

/// Poisson(λ) draw: sequential inversion below λ = 10, PTRS above.
std::uint64_t draw_poisson(RandomStream& stream, double lambda);

/// Starting point for the optimizer: gamma shapes 0.5, means 1.0, dirichlet
/// concentrations 1.0.
std::vector<double> default_initialization(const LatentLayout& layout);

}  // namespace rsvi
