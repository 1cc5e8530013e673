#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "rsvi/distributions.hpp"
#include "rsvi/errors.hpp"
#include "rsvi/finite_diff.hpp"
#include "rsvi/rejection.hpp"
#include "rsvi/special.hpp"
#include "rsvi/stats.hpp"
#include "support/oracles.hpp"

using namespace rsvi;

TEST(GammaParams, ValidatesDomain) {
  EXPECT_THROW(GammaParams(0.0, 1.0), DomainError);
  EXPECT_THROW(GammaParams(1.0, -1.0), DomainError);
  EXPECT_THROW(GammaParams(std::nan(""), 1.0), DomainError);
  EXPECT_THROW(GammaMeanShapeParams(1.0, 0.0), DomainError);
  const GammaMeanShapeParams p(3.0, 1.5);
  EXPECT_DOUBLE_EQ(p.rate(), 2.0);
  EXPECT_DOUBLE_EQ(p.to_rate_form().rate(), 2.0);
}

TEST(GammaLogPdf, PlugInValues) {
  EXPECT_DOUBLE_EQ(gamma_log_pdf(1.0, GammaParams(1.0, 1.0)), -1.0);
  EXPECT_NEAR(gamma_log_pdf(2.0, GammaParams(2.0, 1.0)), std::log(2.0) - 2.0, 1e-15);
  EXPECT_EQ(gamma_log_pdf(0.0, GammaParams(2.0, 1.0)), -std::numeric_limits<double>::infinity());
  EXPECT_EQ(gamma_log_pdf(-1.0, GammaParams(2.0, 1.0)), -std::numeric_limits<double>::infinity());
}

TEST(GammaLogPdf, IntegratesToOne) {
  const GammaParams p(2.0, 1.0);
  const double mass = oracle::integrate_pieces(
      [&](double z) { return z <= 0.0 ? 0.0 : std::exp(gamma_log_pdf(z, p)); }, {0, 2, 5, 10, 20, 50});
  EXPECT_NEAR(mass, 1.0, 1e-8);
}

TEST(GammaLogPdf, MeanShapeFormAgrees) {
  const GammaMeanShapeParams ms(2.5, 0.8);
  for (double z : {0.1, 0.8, 3.0}) {
    EXPECT_NEAR(gamma_log_pdf(z, ms), gamma_log_pdf(z, ms.to_rate_form()), 1e-13);
  }
}

TEST(GammaEntropy, ClosedFormCases) {
  EXPECT_NEAR(gamma_entropy(GammaParams(1.0, 1.0)), 1.0, 1e-14);
  EXPECT_NEAR(gamma_entropy(GammaParams(1.0, std::numbers::e)), 0.0, 1e-14);
}

TEST(GammaEntropy, MatchesQuadrature) {
  for (double a : {0.7, 2.0, 9.0}) {
    const GammaParams p(a, 1.3);
    const double h = -oracle::integrate_pieces(
        [&](double z) {
          if (z <= 0.0) return 0.0;
          const double lp = gamma_log_pdf(z, p);
          return std::exp(lp) * lp;
        },
        {0, 1e-6, 1e-3, 0.1, 1, 5, 15, 40, 80});
    EXPECT_NEAR(gamma_entropy(p), h, 1e-6) << a;
  }
}

TEST(GammaEntropy, GradientMatchesFiniteDifferences) {
  const std::vector<double> x{2.0, 1.0};
  const auto fd = finite_diff_grad(
      [](std::span<const double> v) { return gamma_entropy(GammaParams(v[0], v[1])); }, x, 1e-6);
  const auto g = gamma_entropy_grad(GammaParams(2.0, 1.0));
  EXPECT_LE(relative_error(g.d_shape, fd[0]), 1e-6);
  EXPECT_LE(relative_error(g.d_rate, fd[1]), 1e-6);

  const std::vector<double> y{0.6, 3.0};
  const auto fd2 = finite_diff_grad(
      [](std::span<const double> v) { return gamma_entropy(GammaMeanShapeParams(v[0], v[1])); }, y, 1e-6);
  const auto g2 = gamma_entropy_grad(GammaMeanShapeParams(0.6, 3.0));
  EXPECT_LE(relative_error(g2.d_shape, fd2[0]), 1e-6);
  EXPECT_LE(relative_error(g2.d_mean, fd2[1]), 1e-6);
}

TEST(GammaScore, MatchesFiniteDifferencesOfLogPdf) {
  const double z = 1.7;
  const std::vector<double> x{1.4, 2.2};
  const auto fd = finite_diff_grad(
      [&](std::span<const double> v) { return gamma_log_pdf(z, GammaMeanShapeParams(v[0], v[1])); }, x, 1e-6);
  const auto g = gamma_score(z, GammaMeanShapeParams(1.4, 2.2));
  EXPECT_LE(relative_error(g.d_shape, fd[0]), 1e-6);
  EXPECT_LE(relative_error(g.d_mean, fd[1]), 1e-6);
}

TEST(DirichletParams, Validation) {
  EXPECT_THROW(DirichletParams({1.0}), ContractError);
  EXPECT_THROW(DirichletParams({1.0, 0.0}), DomainError);
  const DirichletParams p({1.0, 2.0, 3.0});
  EXPECT_DOUBLE_EQ(p.total(), 6.0);
  EXPECT_EQ(p.size(), 3u);
}

TEST(DirichletLogPdf, UniformIsLogGammaK) {
  for (std::size_t k : {2u, 3u, 7u}) {
    const DirichletParams p(std::vector<double>(k, 1.0));
    const std::vector<double> z(k, 1.0 / double(k));
    EXPECT_NEAR(dirichlet_log_pdf(z, p), std::lgamma(double(k)), 1e-12);
  }
}

TEST(DirichletLogPdf, SimplexHandling) {
  const DirichletParams p({2.0, 2.0, 2.0});
  EXPECT_THROW(dirichlet_log_pdf(std::vector<double>{0.5, 0.5, 0.1}, p), DomainError);
  EXPECT_THROW(dirichlet_log_pdf(std::vector<double>{-0.1, 0.6, 0.5}, p), DomainError);
  EXPECT_THROW(dirichlet_log_pdf(std::vector<double>{0.5, 0.5}, p), ContractError);
  EXPECT_EQ(dirichlet_log_pdf(std::vector<double>{0.0, 0.5, 0.5}, p),
            -std::numeric_limits<double>::infinity());
  // Inside tolerance is accepted.
  EXPECT_NO_THROW(dirichlet_log_pdf(std::vector<double>{0.2, 0.3, 0.5 + 1e-11}, p));
}

TEST(DirichletLogPdf, BetaMarginalIntegratesToOne) {
  const DirichletParams p({2.5, 1.5});
  const double mass = oracle::integrate(
      [&](double x) {
        if (x <= 0.0 || x >= 1.0) return 0.0;
        return std::exp(dirichlet_log_pdf(std::vector<double>{x, 1.0 - x}, p));
      },
      0.0, 1.0, 1e-12);
  EXPECT_NEAR(mass, 1.0, 1e-7);
}

TEST(DirichletKl, IdentityAndPositivity) {
  const DirichletParams p({0.5, 2.0, 4.0});
  const DirichletParams q({1.0, 1.0, 1.0});
  EXPECT_NEAR(dirichlet_kl(p, p), 0.0, 1e-14);
  EXPECT_GT(dirichlet_kl(p, q), 0.0);
  EXPECT_GT(dirichlet_kl(q, p), 0.0);
  EXPECT_THROW(dirichlet_kl(p, DirichletParams({1.0, 1.0})), ContractError);
}

TEST(DirichletKl, MatchesQuadratureForK2) {
  const DirichletParams p({2.0, 3.0}), q({1.5, 1.2});
  const double kl = oracle::integrate(
      [&](double x) {
        if (x <= 0.0 || x >= 1.0) return 0.0;
        const std::vector<double> z{x, 1.0 - x};
        const double lp = dirichlet_log_pdf(z, p);
        return std::exp(lp) * (lp - dirichlet_log_pdf(z, q));
      },
      0.0, 1.0, 1e-12);
  EXPECT_NEAR(dirichlet_kl(p, q), kl, 1e-8);
}

TEST(DirichletEntropy, GradientMatchesFiniteDifferences) {
  const std::vector<double> a{0.8, 1.9, 3.3, 5.0};
  const auto fd = finite_diff_grad(
      [](std::span<const double> v) { return dirichlet_entropy(DirichletParams({v.begin(), v.end()})); }, a,
      1e-6);
  const auto g = dirichlet_entropy_grad(DirichletParams(a));
  EXPECT_LE(max_relative_error(g, fd), 1e-6);
}

TEST(DirichletScore, MatchesFiniteDifferences) {
  const std::vector<double> z{0.2, 0.3, 0.5};
  const std::vector<double> a{1.2, 0.7, 2.5};
  const auto fd = finite_diff_grad(
      [&](std::span<const double> v) { return dirichlet_log_pdf(z, DirichletParams({v.begin(), v.end()})); },
      a, 1e-6);
  EXPECT_LE(max_relative_error(dirichlet_score(z, DirichletParams(a)), fd), 1e-6);
}

TEST(DerivedFamilies, PlugInTransforms) {
  EXPECT_DOUBLE_EQ(derived_transform(DerivedFamily::beta, std::vector<double>{1.0, 1.0},
                                     std::vector<double>{2.0, 3.0})[0],
                   0.5);
  EXPECT_DOUBLE_EQ(derived_transform(DerivedFamily::chi_squared, std::vector<double>{3.0},
                                     std::vector<double>{4.0})[0],
                   6.0);
  const auto d = derived_transform(DerivedFamily::dirichlet, std::vector<double>{1.0, 3.0},
                                   std::vector<double>{1.0, 1.0});
  EXPECT_DOUBLE_EQ(d[0], 0.25);
  EXPECT_DOUBLE_EQ(d[1], 0.75);
  // F(d1, d2) = (X1 / d1) / (X2 / d2) with X = 2z̃.
  EXPECT_DOUBLE_EQ(derived_transform(DerivedFamily::f_dist, std::vector<double>{2.0, 1.0},
                                     std::vector<double>{4.0, 6.0})[0],
                   3.0);
  EXPECT_DOUBLE_EQ(derived_transform(DerivedFamily::nakagami, std::vector<double>{2.0},
                                     std::vector<double>{2.0, 8.0})[0],
                   std::sqrt(8.0));
  EXPECT_DOUBLE_EQ(derived_transform(DerivedFamily::student_t, std::vector<double>{2.0, 1.5},
                                     std::vector<double>{4.0})[0],
                   1.5);
}

TEST(DerivedFamilies, ArityAndDomain) {
  EXPECT_THROW(derived_transform(DerivedFamily::beta, std::vector<double>{1.0},
                                 std::vector<double>{2.0, 3.0}),
               ContractError);
  EXPECT_THROW(derived_transform(DerivedFamily::student_t, std::vector<double>{1.0},
                                 std::vector<double>{3.0}),
               ContractError);
  EXPECT_THROW(auxiliary_recipe(DerivedFamily::beta, std::vector<double>{1.0}), ContractError);
  EXPECT_THROW(auxiliary_recipe(DerivedFamily::chi_squared, std::vector<double>{-1.0}), DomainError);
  const auto r = auxiliary_recipe(DerivedFamily::student_t, std::vector<double>{5.0});
  EXPECT_EQ(r.gamma_shapes, std::vector<double>{2.5});
  EXPECT_TRUE(r.trailing_normal);
}

TEST(DerivedFamilies, BetaMeanFromGammas) {
  RandomStream s(11, 0);
  std::vector<double> xs(100000);
  for (auto& x : xs) x = sample_derived(DerivedFamily::beta, std::vector<double>{2.0, 3.0}, 1, s)[0];
  const auto m = sample_moments(xs);
  EXPECT_NEAR(m.mean, 0.4, 3.0 * m.std_error);
}

TEST(DerivedFamilies, StudentTPassesKs) {
  // ν = 1 is Cauchy, whose CDF is closed form.
  RandomStream s(12, 0);
  std::vector<double> xs(20000);
  for (auto& x : xs) x = sample_derived(DerivedFamily::student_t, std::vector<double>{1.0}, 1, s)[0];
  const double d = ks_statistic(xs, [](double x) { return 0.5 + std::atan(x) / std::numbers::pi; });
  EXPECT_GT(ks_p_value(d, xs.size()), 0.01);
}

TEST(DerivedFamilies, ChiSquaredPassesKs) {
  RandomStream s(13, 0);
  std::vector<double> xs(20000);
  for (auto& x : xs) x = sample_derived(DerivedFamily::chi_squared, std::vector<double>{3.0}, 1, s)[0];
  const double d = ks_statistic(xs, [](double x) { return gamma_p(1.5, 0.5 * x); });
  EXPECT_GT(ks_p_value(d, xs.size()), 0.01);
}
