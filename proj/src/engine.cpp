#include "rsvi/engine.hpp"

#include <chrono>
#include <cmath>
#include <deque>

#include "rsvi/errors.hpp"

namespace rsvi {

double softplus(double v) {
  if (v > 0.0) return v + std::log1p(std::exp(-v));
  return std::log1p(std::exp(v));
}

double softplus_inv(double theta) {
  if (!(theta > 0.0) || !std::isfinite(theta)) {
    throw DomainError("softplus_inv: argument must be positive and finite");
  }
  // ϑ = θ + ln(1 - e^{-θ}); expm1 keeps the small-θ end accurate.
  if (theta > 30.0) return theta + std::log1p(-std::exp(-theta));
  return std::log(std::expm1(theta));
}

double softplus_jacobian(double v) {
  if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

std::vector<double> softplus(std::span<const double> vartheta) {
  std::vector<double> out(vartheta.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = softplus(vartheta[i]);
  return out;
}

std::vector<double> softplus_inv(std::span<const double> theta) {
  std::vector<double> out(theta.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = softplus_inv(theta[i]);
  return out;
}

StepSize step_size(const OptimizerState& state, std::span<const double> g) {
  if (state.n < 1) throw DomainError("step_size: iteration index starts at 1");
  if (!state.s.empty() && state.s.size() != g.size()) {
    throw ContractError("step_size: gradient length changed between steps");
  }
  for (double gi : g) {
    if (!std::isfinite(gi)) throw DomainError("step_size: gradient is non-finite");
  }
  StepSize out{std::vector<double>(g.size()), state};
  out.next.s.resize(g.size());
  const double schedule =
      state.eta * std::pow(static_cast<double>(state.n), -0.5 + state.delta);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double g2 = g[i] * g[i];
    const double s = state.n == 1 ? g2 : state.t * g2 + (1.0 - state.t) * state.s[i];
    out.next.s[i] = s;
    out.rho[i] = schedule / (1.0 + std::sqrt(s));
  }
  out.next.n = state.n + 1;
  return out;
}

std::string to_string(StopReason reason) {
  switch (reason) {
    case StopReason::max_iters: return "max_iters";
    case StopReason::plateau: return "plateau";
    case StopReason::aborted: return "aborted";
  }
  return "unknown";
}

namespace {

double norm2(std::span<const double> v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return std::sqrt(acc);
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// Tracks the last 2W ELBO values to compare consecutive window means.
class PlateauDetector {
 public:
  PlateauDetector(std::size_t window, double tol) : window_(window), tol_(tol) {}

  bool push(double elbo) {
    if (window_ == 0) return false;
    values_.push_back(elbo);
    if (values_.size() > 2 * window_) values_.pop_front();
    if (values_.size() < 2 * window_) return false;
    double older = 0.0;
    double newer = 0.0;
    for (std::size_t i = 0; i < window_; ++i) older += values_[i];
    for (std::size_t i = window_; i < 2 * window_; ++i) newer += values_[i];
    older /= static_cast<double>(window_);
    newer /= static_cast<double>(window_);
    return std::abs(newer - older) < tol_ * std::abs(older);
  }

 private:
  std::size_t window_;
  double tol_;
  std::deque<double> values_;
};

// Per-parameter offsets: shape_floor on shapes / concentrations, 0 on means.
std::vector<double> parameter_offsets(const LatentLayout& layout, double shape_floor) {
  std::vector<double> offsets;
  for (const auto& b : layout) {
    if (b.family == LatentFamily::gamma_mean_shape) {
      offsets.insert(offsets.end(), b.dim, shape_floor);
      offsets.insert(offsets.end(), b.dim, 0.0);
    } else {
      offsets.insert(offsets.end(), b.dim, shape_floor);
    }
  }
  return offsets;
}

}  // namespace

RunResult run_rsvi(const ModelSpec& model, std::span<const double> theta_init,
                   const RunConfig& cfg, const RandomStream& stream,
                   const RunObserver& observer) {
  check_parameters(model.layout, theta_init);
  if (!(cfg.eta > 0.0) || !std::isfinite(cfg.eta)) throw DomainError("run_rsvi: eta must be positive");
  if (cfg.trace_draws == 0) throw DomainError("run_rsvi: trace_draws must be >= 1");
  if (cfg.max_consecutive_failures == 0) {
    throw DomainError("run_rsvi: max_consecutive_failures must be >= 1");
  }

  if (!(cfg.shape_floor >= 0.0) || !std::isfinite(cfg.shape_floor)) {
    throw DomainError("run_rsvi: shape_floor must be non-negative");
  }
  const std::vector<double> offsets = parameter_offsets(model.layout, cfg.shape_floor);

  OptimizerState state;
  state.eta = cfg.eta;
  state.vartheta.resize(theta_init.size());
  for (std::size_t i = 0; i < theta_init.size(); ++i) {
    if (!(theta_init[i] > offsets[i])) {
      throw DomainError("run_rsvi: initial shape must exceed shape_floor");
    }
    state.vartheta[i] = softplus_inv(theta_init[i] - offsets[i]);
  }

  RunResult result;
  result.theta.assign(theta_init.begin(), theta_init.end());
  const RandomStream optimize_root = stream.derive(0);
  const RandomStream trace_root = stream.derive(1);
  PlateauDetector plateau(cfg.plateau_window, cfg.plateau_tol);
  unsigned consecutive = 0;

  for (std::uint64_t iter = 1; iter <= cfg.max_iters; ++iter) {
    TraceRecord rec;
    rec.iteration = iter;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      RandomStream gs = optimize_root.derive(iter);
      const GradientEstimator estimator(model, result.theta, cfg.estimator);
      const GradientEstimate est = estimator(gs);

      // Chain rule into unconstrained space: ∂L/∂ϑ = ∂L/∂θ · sigmoid(ϑ).
      std::vector<double> g(est.total.size());
      for (std::size_t i = 0; i < g.size(); ++i) {
        g[i] = est.total[i] * softplus_jacobian(state.vartheta[i]);
      }
      StepSize step = step_size(state, g);

      // Ascent: ϑ ← ϑ + ρ ⊙ ĝ.
      std::vector<double> delta(g.size());
      for (std::size_t i = 0; i < g.size(); ++i) {
        delta[i] = step.rho[i] * g[i];
        step.next.vartheta[i] += delta[i];
      }
      std::vector<double> theta = softplus(step.next.vartheta);
      for (std::size_t i = 0; i < theta.size(); ++i) {
        theta[i] += offsets[i];
        if (!(theta[i] > 0.0)) throw NumericalError("parameter underflowed to zero");
      }
      rec.optimize_seconds = seconds_since(t0);

      const auto t1 = std::chrono::steady_clock::now();
      RandomStream ts = trace_root.derive(iter);
      const VariationalFamily q(model.layout, theta, cfg.estimator.aug_steps);
      rec.elbo = estimate_elbo(model, q, cfg.trace_draws, ts);
      rec.trace_seconds = seconds_since(t1);

      // Commit only after the whole iteration succeeded.
      state = std::move(step.next);
      result.theta = std::move(theta);
      rec.grad_norm = norm2(g);
      rec.step_norm = norm2(delta);
      rec.accepted = est.trials > 0 ? est.draws * estimator.family().sampler_count() : 0;
      rec.trials = est.trials;
      consecutive = 0;
    } catch (const ContractError&) {
      throw;
    } catch (const std::exception& e) {
      ++result.failures;
      ++consecutive;
      result.last_error = e.what();
      if (observer.on_failure) observer.on_failure(iter, e.what());
      if (consecutive >= cfg.max_consecutive_failures) {
        result.stop = StopReason::aborted;
        break;
      }
      continue;
    }
    result.trace.push_back(rec);
    if (observer.on_record) observer.on_record(rec);
    if (plateau.push(rec.elbo)) {
      result.stop = StopReason::plateau;
      break;
    }
  }
  result.vartheta = state.vartheta;
  return result;
}

}  // namespace rsvi
