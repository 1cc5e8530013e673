#pragma once

namespace rsvi {

/// ln Γ(x) for x > 0. Throws DomainError otherwise.
double log_gamma_fn(double x);

/// Digamma ψ(x) = d/dx ln Γ(x), x > 0.
double digamma(double x);

/// Trigamma ψ'(x), x > 0.
double trigamma(double x);

/// Regularized lower incomplete gamma P(a, x) = γ(a, x) / Γ(a); the CDF of Gam(a, 1) at x,
/// so any x <= 0 gives 0.
double gamma_p(double a, double x);

/// Standard normal CDF.
double normal_cdf(double x);

/// ln of the standard normal density.
double normal_log_pdf(double x);

}  // namespace rsvi
