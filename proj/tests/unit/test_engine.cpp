#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <vector>

#include "rsvi/distributions.hpp"
#include "rsvi/engine.hpp"
#include "rsvi/errors.hpp"
#include "rsvi/finite_diff.hpp"
#include "rsvi/models.hpp"
#include "rsvi/stats.hpp"

using namespace rsvi;

namespace {

std::shared_ptr<const ConjugateModel> conj5() {
  return std::make_shared<const ConjugateModel>(std::vector<double>(5, 1.0),
                                                std::vector<std::uint64_t>{7, 1, 4, 0, 8});
}

}  // namespace

TEST(Softplus, KnownValues) {
  EXPECT_NEAR(softplus(0.0), std::log(2.0), 1e-15);
  EXPECT_DOUBLE_EQ(softplus(1000.0), 1000.0);
  EXPECT_GT(softplus(-700.0), 0.0);
  EXPECT_NEAR(softplus_inv(softplus(50.0)), 50.0, 1e-10);
  EXPECT_THROW(softplus_inv(0.0), DomainError);
  EXPECT_THROW(softplus_inv(-1.0), DomainError);
}

TEST(Softplus, MutuallyInverseAcrossRange) {
  for (double lt = std::log(1e-6); lt <= std::log(1e6); lt += 0.05) {
    const double theta = std::exp(lt);
    EXPECT_LE(std::abs(softplus(softplus_inv(theta)) - theta), 1e-10 * std::max(1.0, theta)) << theta;
  }
  for (double v = -12.0; v <= 40.0; v += 0.37) {
    EXPECT_NEAR(softplus_inv(softplus(v)), v, 1e-10 * std::max(1.0, std::abs(v))) << v;
  }
}

TEST(Softplus, JacobianMatchesFiniteDifferences) {
  for (double v : {-20.0, -3.0, -0.5, 0.0, 0.7, 4.0, 25.0}) {
    const std::vector<double> x{v};
    const auto fd = finite_diff_grad([](std::span<const double> p) { return softplus(p[0]); }, x, 1e-5);
    EXPECT_LE(relative_error(softplus_jacobian(v), fd[0], 1e-12), 1e-8) << v;
  }
}

TEST(Softplus, VectorForms) {
  const std::vector<double> v{-1.0, 0.0, 2.0};
  const auto t = softplus(v);
  const auto back = softplus_inv(t);
  for (std::size_t i = 0; i < v.size(); ++i) EXPECT_NEAR(back[i], v[i], 1e-14);
}

TEST(StepSize, FirstStepSeedsSecondMoment) {
  OptimizerState st;
  st.vartheta = {0.0};
  const auto r = step_size(st, std::vector<double>{3.0});
  EXPECT_NEAR(r.rho[0], 0.25, 1e-15);
  EXPECT_EQ(r.next.s, std::vector<double>{9.0});
  EXPECT_EQ(r.next.n, 2u);
}

TEST(StepSize, RecursionAfterFirstStep) {
  OptimizerState st;
  st.vartheta = {0.0};
  st.eta = 0.5;
  auto r = step_size(st, std::vector<double>{2.0});
  r = step_size(r.next, std::vector<double>{1.0});
  const double s2 = 0.1 * 1.0 + 0.9 * 4.0;
  EXPECT_NEAR(r.rho[0], 0.5 * std::pow(2.0, -0.5 + 1e-16) / (1.0 + std::sqrt(s2)), 1e-15);
}

TEST(StepSize, ZeroGradientFollowsSchedule) {
  OptimizerState st;
  st.vartheta = {0.0, 0.0};
  st.eta = 0.75;
  for (std::uint64_t n = 1; n <= 200; ++n) {
    const auto r = step_size(st, std::vector<double>{0.0, 0.0});
    ASSERT_NEAR(r.rho[0], 0.75 * std::pow(double(n), -0.5 + 1e-16), 1e-15);
    ASSERT_EQ(r.rho[0], r.rho[1]);
    st = r.next;
  }
}

TEST(StepSize, DecaysAsInverseRoot) {
  OptimizerState st;
  st.vartheta = {0.0};
  std::vector<double> rho;
  for (int n = 1; n <= 4096; ++n) {
    const auto r = step_size(st, std::vector<double>{1.5});
    rho.push_back(r.rho[0]);
    st = r.next;
  }
  EXPECT_NEAR(rho[4095] / rho[1023], 0.5, 1e-6);
  EXPECT_NEAR(rho[1023] * 32.0, rho[3] * 2.0, 1e-3 * rho[3]);
}

TEST(StepSize, NonFiniteGradientLeavesStateAlone) {
  OptimizerState st;
  st.vartheta = {1.0};
  const OptimizerState copy = st;
  EXPECT_THROW(step_size(st, std::vector<double>{std::nan("")}), DomainError);
  EXPECT_THROW(step_size(st, std::vector<double>{INFINITY}), DomainError);
  EXPECT_EQ(st.n, copy.n);
  EXPECT_EQ(st.s, copy.s);
}

TEST(Run, ZeroIterationsReturnsInitialization) {
  const ModelSpec m = make_conjugate_model_spec(conj5());
  const std::vector<double> init(5, 1.3);
  RunConfig cfg;
  cfg.max_iters = 0;
  const auto r = run_rsvi(m, init, cfg, RandomStream(1, 0));
  EXPECT_TRUE(r.trace.empty());
  for (std::size_t i = 0; i < init.size(); ++i) EXPECT_NEAR(r.theta[i], init[i], 1e-12);
  EXPECT_EQ(r.stop, StopReason::max_iters);
}

TEST(Run, DeterministicTrace) {
  const ModelSpec m = make_conjugate_model_spec(conj5());
  const std::vector<double> init(5, 1.0);
  RunConfig cfg;
  cfg.max_iters = 200;
  cfg.trace_draws = 10;
  const auto a = run_rsvi(m, init, cfg, RandomStream(2, 0));
  const auto b = run_rsvi(m, init, cfg, RandomStream(2, 0));
  ASSERT_EQ(a.trace.size(), b.trace.size());
  for (std::size_t i = 0; i < a.trace.size(); ++i) {
    ASSERT_EQ(a.trace[i].elbo, b.trace[i].elbo);
    ASSERT_EQ(a.trace[i].step_norm, b.trace[i].step_norm);
  }
  EXPECT_EQ(a.theta, b.theta);
  const auto c = run_rsvi(m, init, cfg, RandomStream(3, 0));
  EXPECT_NE(a.theta, c.theta);
}

TEST(Run, TraceIterationsIncreaseAndParametersStayPositive) {
  const ModelSpec m = make_conjugate_model_spec(conj5());
  RunConfig cfg;
  cfg.max_iters = 300;
  cfg.trace_draws = 5;
  cfg.eta = 5.0;
  std::vector<std::uint64_t> seen;
  RunObserver obs;
  obs.on_record = [&](const TraceRecord& r) { seen.push_back(r.iteration); };
  const auto r = run_rsvi(m, std::vector<double>(5, 0.2), cfg, RandomStream(4, 0), obs);
  ASSERT_EQ(seen.size(), r.trace.size());
  for (std::size_t i = 1; i < seen.size(); ++i) EXPECT_GT(seen[i], seen[i - 1]);
  for (double t : r.theta) EXPECT_GT(t, 0.0);
  for (const auto& rec : r.trace) {
    EXPECT_GE(rec.trials, rec.accepted);
    EXPECT_GT(rec.accepted, 0u);
  }
}

TEST(Run, ConjugateConvergesToPosterior) {
  // η = 2 converges within 5000 iterations; see the notes on step sizes.
  const auto model = conj5();
  const ModelSpec m = make_conjugate_model_spec(model);
  RunConfig cfg;
  cfg.eta = 2.0;
  cfg.max_iters = 5000;
  cfg.trace_draws = 1;
  cfg.plateau_window = 0;
  std::vector<double> kls;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto r = run_rsvi(m, std::vector<double>(5, 1.0), cfg, RandomStream(seed, 0));
    kls.push_back(dirichlet_kl(DirichletParams(r.theta), model->posterior()));
  }
  EXPECT_LT(median(kls), 0.01);
}

TEST(Run, ElboImprovesOnDef) {
  RandomStream ds(5, 0);
  const std::vector<std::size_t> layers{3, 2};
  const auto data = make_synthetic_def_data(layers, 10, 6, {}, ds);
  const auto model = std::make_shared<const SparseGammaDEF>(layers, data.counts);
  const ModelSpec m = make_def_model_spec(model);
  RunConfig cfg;
  cfg.eta = 0.75;
  cfg.max_iters = 400;
  cfg.trace_draws = 20;
  cfg.plateau_window = 0;
  const auto r = run_rsvi(m, default_initialization(m.layout), cfg, RandomStream(6, 0));
  // Shapes near 0.05 occasionally underflow a draw to zero; such iterations are skipped.
  ASSERT_EQ(r.trace.size() + r.failures, 400u);
  EXPECT_LE(r.failures, 4u);
  // Tiny upper-layer draws make single ELBO estimates heavy tailed, so compare medians.
  std::vector<double> early, late;
  for (int i = 0; i < 50; ++i) {
    early.push_back(r.trace[i].elbo);
    late.push_back(r.trace[350 + i].elbo);
  }
  EXPECT_GT(median(late), median(early) + 20.0);
}

TEST(Run, ThreeConsecutiveFailuresAbort) {
  ModelSpec m = make_conjugate_model_spec(conj5());
  auto calls = std::make_shared<int>(0);
  auto inner = m.log_joint;
  m.log_joint = [inner, calls](std::span<const double> z) {
    return ++*calls > 500 ? std::nan("") : inner(z);
  };
  RunConfig cfg;
  cfg.max_iters = 1000;
  cfg.trace_draws = 10;
  std::vector<std::uint64_t> failed_at;
  RunObserver obs;
  obs.on_failure = [&](std::uint64_t it, const std::string&) { failed_at.push_back(it); };
  const auto r = run_rsvi(m, std::vector<double>(5, 1.0), cfg, RandomStream(7, 0), obs);
  EXPECT_EQ(r.stop, StopReason::aborted);
  EXPECT_EQ(r.failures, 3u);
  EXPECT_EQ(failed_at.size(), 3u);
  EXPECT_FALSE(r.trace.empty());
  EXPECT_LT(r.trace.size(), 1000u);
  EXPECT_FALSE(r.last_error.empty());
}

TEST(Run, IsolatedFailuresAreSkipped) {
  ModelSpec m = make_conjugate_model_spec(conj5());
  auto calls = std::make_shared<int>(0);
  auto inner = m.log_joint;
  // Every 37th evaluation fails; never three iterations in a row.
  m.log_joint = [inner, calls](std::span<const double> z) {
    return ++*calls % 37 == 0 ? std::nan("") : inner(z);
  };
  RunConfig cfg;
  cfg.max_iters = 300;
  cfg.trace_draws = 3;
  cfg.plateau_window = 0;
  const auto r = run_rsvi(m, std::vector<double>(5, 1.0), cfg, RandomStream(8, 0));
  EXPECT_EQ(r.stop, StopReason::max_iters);
  EXPECT_GT(r.failures, 0u);
  EXPECT_EQ(r.trace.size() + r.failures, 300u);
}

TEST(Run, PlateauStopsEarly) {
  const ModelSpec m = make_conjugate_model_spec(conj5());
  RunConfig cfg;
  cfg.eta = 2.0;
  cfg.max_iters = 5000;
  cfg.trace_draws = 50;
  cfg.plateau_window = 100;
  cfg.plateau_tol = 1e-2;
  const auto r = run_rsvi(m, std::vector<double>(5, 1.0), cfg, RandomStream(9, 0));
  EXPECT_EQ(r.stop, StopReason::plateau);
  EXPECT_LT(r.trace.size(), 5000u);
}

TEST(Run, ShapeFloorHolds) {
  RandomStream ds(10, 0);
  const std::vector<std::size_t> layers{2};
  const auto data = make_synthetic_def_data(layers, 5, 4, {}, ds);
  const ModelSpec m = make_def_model_spec(std::make_shared<const SparseGammaDEF>(layers, data.counts));
  RunConfig cfg;
  cfg.max_iters = 200;
  cfg.trace_draws = 5;
  cfg.shape_floor = 0.2;
  cfg.eta = 2.0;
  const auto r = run_rsvi(m, default_initialization(m.layout), cfg, RandomStream(11, 0));
  // Shapes sit in the first half of each gamma block.
  std::size_t offset = 0;
  for (const auto& b : m.layout) {
    for (std::size_t i = 0; i < b.dim; ++i) EXPECT_GT(r.theta[offset + i], 0.2);
    offset += 2 * b.dim;
  }
}

TEST(Run, ConfigValidation) {
  const ModelSpec m = make_conjugate_model_spec(conj5());
  const std::vector<double> init(5, 1.0);
  RunConfig cfg;
  cfg.eta = 0.0;
  EXPECT_THROW(run_rsvi(m, init, cfg, RandomStream(1, 0)), DomainError);
  cfg = {};
  cfg.trace_draws = 0;
  EXPECT_THROW(run_rsvi(m, init, cfg, RandomStream(1, 0)), DomainError);
  cfg = {};
  cfg.shape_floor = 1.5;
  EXPECT_THROW(run_rsvi(m, init, cfg, RandomStream(1, 0)), DomainError);
  cfg = {};
  EXPECT_THROW(run_rsvi(m, std::vector<double>(4, 1.0), cfg, RandomStream(1, 0)), ContractError);
  EXPECT_EQ(to_string(StopReason::plateau), "plateau");
}
