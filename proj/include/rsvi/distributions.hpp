#pragma once

#include <span>
#include <vector>

namespace rsvi {

/// Gam(shape, rate); both strictly positive.
class GammaParams {
 public:
  GammaParams(double shape, double rate);

  double shape() const noexcept { return shape_; }
  double rate() const noexcept { return rate_; }
  double mean() const noexcept { return shape_ / rate_; }

 private:
  double shape_;
  double rate_;
};

/// Gamma in (shape, mean) coordinates, the parameterization the optimizer
/// works in. The rate is shape / mean. Gradients in this space differ from
/// the (shape, rate) ones, hence a separate type.
class GammaMeanShapeParams {
 public:
  GammaMeanShapeParams(double shape, double mean);

  double shape() const noexcept { return shape_; }
  double mean() const noexcept { return mean_; }
  double rate() const noexcept { return shape_ / mean_; }
  GammaParams to_rate_form() const { return GammaParams(shape_, rate()); }

 private:
  double shape_;
  double mean_;
};

/// Dir(α_1..α_K), K >= 2, all α_k > 0.
class DirichletParams {
 public:
  explicit DirichletParams(std::vector<double> concentrations);

  std::span<const double> concentrations() const noexcept { return alpha_; }
  std::size_t size() const noexcept { return alpha_.size(); }
  double operator[](std::size_t k) const { return alpha_[k]; }
  double total() const noexcept { return total_; }

  friend bool operator==(const DirichletParams&, const DirichletParams&) = default;

 private:
  std::vector<double> alpha_;
  double total_;
};

struct GammaRateGrad {
  double d_shape;
  double d_rate;
};

struct GammaMeanShapeGrad {
  double d_shape;
  double d_mean;
};

// Gamma ---------------------------------------------------------------------

/// (α-1) ln z - βz + α ln β - ln Γ(α); -inf outside z > 0.
double gamma_log_pdf(double z, const GammaParams& p);
double gamma_log_pdf(double z, const GammaMeanShapeParams& p);

double gamma_entropy(const GammaParams& p);
double gamma_entropy(const GammaMeanShapeParams& p);
GammaRateGrad gamma_entropy_grad(const GammaParams& p);
GammaMeanShapeGrad gamma_entropy_grad(const GammaMeanShapeParams& p);

/// Score ∇ ln q(z) with respect to (shape, mean).
GammaMeanShapeGrad gamma_score(double z, const GammaMeanShapeParams& p);

// Dirichlet -----------------------------------------------------------------

/// Tolerance on |Σ z - 1| before a point counts as off the simplex.
inline constexpr double kSimplexTolerance = 1e-9;

/// Log density on the simplex. Points on the boundary give -inf; points off
/// the simplex (negative coordinate or sum away from 1) throw DomainError.
double dirichlet_log_pdf(std::span<const double> z, const DirichletParams& p);
double dirichlet_entropy(const DirichletParams& p);
std::vector<double> dirichlet_entropy_grad(const DirichletParams& p);
/// KL(p || q).
double dirichlet_kl(const DirichletParams& p, const DirichletParams& q);
/// Score ∇_α ln q(z; α).
std::vector<double> dirichlet_score(std::span<const double> z, const DirichletParams& p);

// Distributions built from auxiliary gamma draws ------------------------------

enum class DerivedFamily { beta, dirichlet, student_t, chi_squared, f_dist, nakagami };

/// Recipe for the auxiliary variables of a derived family: shapes of the
/// rate-1 gamma draws, plus whether one standard normal follows them.
struct AuxiliaryRecipe {
  std::vector<double> gamma_shapes;
  bool trailing_normal = false;
};

/// Parameter conventions:
///   beta(a, b), dirichlet(α_1..α_K), student_t(ν), chi_squared(k),
///   f_dist(d1, d2), nakagami(m, Ω).
AuxiliaryRecipe auxiliary_recipe(DerivedFamily family, std::span<const double> params);

/// Maps auxiliary draws (gammas in recipe order, then the normal if any) to a
/// draw of the derived family. Scalar families return a single element.
std::vector<double> derived_transform(DerivedFamily family, std::span<const double> aux,
                                      std::span<const double> params);

}  // namespace rsvi
