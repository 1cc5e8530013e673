#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "rsvi/estimators.hpp"
#include "rsvi/model.hpp"
#include "rsvi/random.hpp"

namespace rsvi {

// θ = ln(1 + e^ϑ), evaluated without overflow at either tail.
double softplus(double vartheta);
/// Inverse softplus; DomainError unless θ > 0.
double softplus_inv(double theta);
/// ∂θ/∂ϑ = sigmoid(ϑ).
double softplus_jacobian(double vartheta);

std::vector<double> softplus(std::span<const double> vartheta);
std::vector<double> softplus_inv(std::span<const double> theta);

/// Adaptive step-size state. `n` is the index of the next step (1-based).
struct OptimizerState {
  std::uint64_t n = 1;
  std::vector<double> vartheta;
  std::vector<double> s;  // running second moment, empty until the first step
  double eta = 1.0;
  double delta = 1e-16;
  double t = 0.1;
};

struct StepSize {
  std::vector<double> rho;
  OptimizerState next;
};

/// ρⁿ = η n^{-1/2+δ} / (1 + √sⁿ) with sⁿ = t ĝ² + (1 - t) sⁿ⁻¹ and s¹ = (ĝ¹)².
/// Pure: the input state is never modified. DomainError on non-finite ĝ.
StepSize step_size(const OptimizerState& state, std::span<const double> g);

struct TraceRecord {
  std::uint64_t iteration = 0;
  double elbo = 0.0;
  double step_norm = 0.0;  // ‖ρ ⊙ ĝ‖ in unconstrained space
  double grad_norm = 0.0;  // ‖ĝ‖ in unconstrained space
  double optimize_seconds = 0.0;
  double trace_seconds = 0.0;
  std::uint64_t accepted = 0;  // gamma draws delivered to the estimator
  std::uint64_t trials = 0;    // proposals those draws consumed (0 for importance)
};

struct RunConfig {
  EstimatorConfig estimator;
  double eta = 1.0;
  std::uint64_t max_iters = 1000;
  std::size_t trace_draws = 100;
  /// Stop once the moving-average ELBO changes by less than plateau_tol
  /// (relative) across plateau_window iterations. A window of 0 disables it.
  std::size_t plateau_window = 200;
  double plateau_tol = 1e-6;
  unsigned max_consecutive_failures = 3;
  /// Lower bound on gamma shapes and dirichlet concentrations: those
  /// parameters use θ = shape_floor + softplus(ϑ). 0 keeps plain softplus.
  double shape_floor = 0.0;
};

enum class StopReason { max_iters, plateau, aborted };
std::string to_string(StopReason reason);

struct RunResult {
  std::vector<double> theta;
  std::vector<double> vartheta;
  std::vector<TraceRecord> trace;
  StopReason stop = StopReason::max_iters;
  std::uint64_t failures = 0;  // estimator failures, consecutive or not
  std::string last_error;
};

struct RunObserver {
  std::function<void(const TraceRecord&)> on_record;
  std::function<void(std::uint64_t iteration, const std::string& what)> on_failure;
};

/// Stochastic gradient ascent on the ELBO in softplus coordinates.
///
/// Iteration n draws its gradient from stream.derive(0).derive(n) and its
/// ELBO estimate from stream.derive(1).derive(n), so the trace never reuses
/// the optimization draw and the whole run is fixed by the stream.
RunResult run_rsvi(const ModelSpec& model, std::span<const double> theta_init,
                   const RunConfig& cfg, const RandomStream& stream,
                   const RunObserver& observer = {});

}  // namespace rsvi
