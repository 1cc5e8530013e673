#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <memory>
#include <optional>
#include <ostream>

#include "internal.hpp"
#include "json.hpp"
#include "rsvi/distributions.hpp"
#include "rsvi/errors.hpp"
#include "rsvi/estimators.hpp"
#include "rsvi/finite_diff.hpp"
#include "rsvi/rejection.hpp"
#include "rsvi/special.hpp"
#include "rsvi/stats.hpp"

namespace rsvi::cli {

// Derivative checks ----------------------------------------------------------

namespace {

// Random point helpers: uniform on [lo, hi] and log-uniform on [lo, hi].
double uniform_in(RandomStream& s, double lo, double hi) { return lo + (hi - lo) * s.uniform(); }
double log_uniform_in(RandomStream& s, double lo, double hi) {
  return lo * std::exp(std::log(hi / lo) * s.uniform());
}

// Accumulates the worst relative error of analytic vs numeric vectors.
struct Worst {
  double err = 0.0;
  void add(std::span<const double> a, std::span<const double> b, double floor) {
    err = std::max(err, max_relative_error(a, b, floor));
  }
};

CheckOutcome finish(std::string name, const Worst& w, std::size_t points, double tol) {
  return {std::move(name), w.err, points, w.err <= tol};
}

}  // namespace

std::vector<CheckOutcome> run_derivative_checks(const ModelSpec& model, RandomStream& stream,
                                                std::size_t points, double tolerance) {
  constexpr double kStep = 1e-6;
  constexpr double kFloor = 1e-6;
  // ln(q/r) cancels O(α ln α) terms, so a tiny step drowns in roundoff.
  constexpr double kRatioStep = 1e-4;
  std::vector<CheckOutcome> out;

  {  // dh/dε and dh/dα of the gamma transform
    Worst w_eps, w_alpha;
    for (std::size_t p = 0; p < points; ++p) {
      const double alpha = log_uniform_in(stream, 1.0, 50.0);
      const double eps = uniform_in(stream, -2.5, 2.5);
      const double x[2] = {eps, alpha};
      const auto fd = finite_diff_grad(
          [](std::span<const double> v) { return *h_gam(v[0], v[1]); }, x, kStep);
      const double de = dh_deps(eps, alpha);
      const double da = dh_dalpha(eps, alpha);
      w_eps.add(std::span<const double>(&de, 1), std::span<const double>(&fd[0], 1), kFloor);
      w_alpha.add(std::span<const double>(&da, 1), std::span<const double>(&fd[1], 1), kFloor);
    }
    out.push_back(finish("transform_dh_deps", w_eps, points, tolerance));
    out.push_back(finish("transform_dh_dalpha", w_alpha, points, tolerance));
  }
  {  // ∂/∂α ln(q/r)
    Worst w;
    for (std::size_t p = 0; p < points; ++p) {
      const double alpha = log_uniform_in(stream, 1.0, 50.0);
      const double eps = uniform_in(stream, -2.5, 2.5);
      const double x[1] = {alpha};
      const auto fd = finite_diff_grad(
          [eps](std::span<const double> v) { return log_ratio_q_over_r(eps, v[0]); }, x,
          kRatioStep * alpha);
      const double g = grad_log_ratio_gamma(eps, alpha);
      w.add(std::span<const double>(&g, 1), fd, kFloor);
    }
    out.push_back(finish("grad_log_ratio", w, points, tolerance));
  }
  {  // gamma entropy in (shape, mean)
    Worst w;
    for (std::size_t p = 0; p < points; ++p) {
      const double x[2] = {log_uniform_in(stream, 0.05, 50.0), log_uniform_in(stream, 0.05, 50.0)};
      const auto fd = finite_diff_grad(
          [](std::span<const double> v) {
            return gamma_entropy(GammaMeanShapeParams(v[0], v[1]));
          },
          x, kStep * x[0]);
      const auto g = gamma_entropy_grad(GammaMeanShapeParams(x[0], x[1]));
      const double a[2] = {g.d_shape, g.d_mean};
      w.add(a, fd, kFloor);
    }
    out.push_back(finish("gamma_entropy_grad", w, points, tolerance));
  }
  {  // dirichlet entropy
    Worst w;
    for (std::size_t p = 0; p < points; ++p) {
      std::vector<double> alpha(4);
      for (double& a : alpha) a = log_uniform_in(stream, 0.2, 20.0);
      const auto fd = finite_diff_grad(
          [](std::span<const double> v) {
            return dirichlet_entropy(DirichletParams({v.begin(), v.end()}));
          },
          alpha, kStep);
      w.add(dirichlet_entropy_grad(DirichletParams(alpha)), fd, kFloor);
    }
    out.push_back(finish("dirichlet_entropy_grad", w, points, tolerance));
  }
  {  // softplus
    Worst w;
    for (std::size_t p = 0; p < points; ++p) {
      const double x[1] = {uniform_in(stream, -20.0, 20.0)};
      const auto fd = finite_diff_grad(
          [](std::span<const double> v) { return softplus(v[0]); }, x, kStep);
      const double j = softplus_jacobian(x[0]);
      w.add(std::span<const double>(&j, 1), fd, 1e-12);
    }
    out.push_back(finish("softplus_jacobian", w, points, tolerance));
  }
  {
    const GradientCheckResult r = check_model_gradient(model, stream, points, tolerance);
    out.push_back({"model_gradient", r.max_relative_error, r.points, r.passed});
  }
  return out;
}

SmoothedElboReport smoothed_elbo_report(const std::vector<TraceRecord>& trace,
                                        std::size_t window, std::size_t tail,
                                        double noise_sigmas) {
  SmoothedElboReport r;
  if (window < 2 || tail < window) throw DomainError("smoothed_elbo_report: bad window");
  r.enough_iterations = trace.size() >= tail;
  if (!r.enough_iterations) return r;
  for (std::size_t b = trace.size() - tail; b + window <= trace.size(); b += window) {
    std::vector<double> block;
    for (std::size_t i = b; i < b + window; ++i) block.push_back(trace[i].elbo);
    const SampleMoments m = sample_moments(block);
    r.block_means.push_back(m.mean);
    r.block_errors.push_back(m.std_error);
  }
  r.strictly_non_decreasing = std::is_sorted(r.block_means.begin(), r.block_means.end());
  r.non_decreasing = true;
  for (std::size_t i = 1; i < r.block_means.size(); ++i) {
    const double se = std::hypot(r.block_errors[i], r.block_errors[i - 1]);
    if (r.block_means[i - 1] - r.block_means[i] > noise_sigmas * se) r.non_decreasing = false;
  }
  return r;
}

namespace detail {
namespace {

using nlohmann::ordered_json;

// Seeds: the root stream (seed, 0) splits into data (1) and algorithm (2).
RandomStream data_stream(const Context& ctx) { return RandomStream(ctx.seed, 0).derive(1); }
RandomStream algorithm_stream(const Context& ctx) { return RandomStream(ctx.seed, 0).derive(2); }

struct BuiltModel {
  ModelSpec spec;
  std::shared_ptr<const ConjugateModel> conjugate;
  std::shared_ptr<const SparseGammaDEF> def;
};

BuiltModel build_model(const Context& ctx, const ModelOptions& m) {
  BuiltModel b;
  RandomStream ds = data_stream(ctx);
  if (m.model == "conjugate") {
    if (!m.data.empty()) {
      const CountMatrix counts = read_counts(m.data);
      std::vector<std::uint64_t> totals(counts.cols, 0);
      for (std::size_t r = 0; r < counts.rows; ++r) {
        for (std::size_t c = 0; c < counts.cols; ++c) totals[c] += counts.at(r, c);
      }
      b.conjugate = std::make_shared<const ConjugateModel>(
          std::vector<double>(counts.cols, m.prior), std::move(totals));
    } else {
      b.conjugate = std::make_shared<const ConjugateModel>(
          make_synthetic_conjugate(std::vector<double>(m.dim, m.prior), m.trials, ds));
    }
    b.spec = make_conjugate_model_spec(b.conjugate);
  } else {
    CountMatrix counts = m.data.empty()
                             ? make_synthetic_def_data(m.layers, m.observations, m.vocab,
                                                       DefHyperparams{}, ds)
                                   .counts
                             : read_counts(m.data);
    b.def = std::make_shared<const SparseGammaDEF>(m.layers, std::move(counts));
    b.spec = make_def_model_spec(b.def);
  }
  return b;
}

// Output sink: a file, or the command's stdout for "" / "-".
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) {
    if (path.empty() || path == "-") {
      stream_ = &fallback;
    } else {
      file_.open(path, std::ios::binary | std::ios::trunc);
      if (!file_) throw ConfigError("cannot write output file '" + path + "'");
      stream_ = &file_;
    }
  }
  std::ostream& operator*() { return *stream_; }
  bool is_file() const { return file_.is_open(); }

 private:
  std::ofstream file_;
  std::ostream* stream_;
};

ordered_json settings_json(const Settings& s) {
  ordered_json j = ordered_json::object();
  for (const auto& [k, v] : s) j[k] = v;
  return j;
}

ordered_json number_or_null(double x) {
  return std::isfinite(x) ? ordered_json(x) : ordered_json(nullptr);
}

}  // namespace

int cmd_sample(const Context& ctx, const SampleOptions& opt) {
  const GammaParams target(opt.shape, opt.rate);
  const GammaSampler sampler(target, opt.aug_steps, opt.trial_budget);
  RandomStream stream = algorithm_stream(ctx);
  Sink sink(ctx.out, *ctx.stdout_stream);
  std::ostream& os = *sink;

  os << "# " << settings_line(ctx.settings) << "\n";
  os << "epsilon,z,trials\n";
  std::vector<double> zs;
  zs.reserve(opt.n_draws);
  std::uint64_t trials = 0;
  for (std::uint64_t i = 0; i < opt.n_draws; ++i) {
    const AcceptedDraw d = sampler.sample(stream);
    os << format_double(d.epsilon) << ',' << format_double(d.z) << ',' << d.trials << "\n";
    zs.push_back(d.z);
    trials += d.trials;
  }
  std::string summary;
  if (zs.empty()) {
    summary = "summary no draws";
  } else {
    const double ks = ks_statistic(zs, [&](double z) {
      return z <= 0.0 ? 0.0 : gamma_p(opt.shape, opt.rate * z);
    });
    summary = "summary draws=" + std::to_string(zs.size()) + " trials=" + std::to_string(trials) +
              " acceptance=" + format_double(static_cast<double>(zs.size()) / trials) +
              " ks_statistic=" + format_double(ks) +
              " ks_p_value=" + format_double(ks_p_value(ks, zs.size()));
  }
  os << "# " << summary << "\n";
  if (sink.is_file()) *ctx.stdout_stream << summary << "\n";
  return kExitOk;
}

int cmd_gradcheck(const Context& ctx, const ModelOptions& model, const GradcheckOptions& opt) {
  BuiltModel b = build_model(ctx, model);
  if (opt.corrupt_gradient) {
    auto inner = b.spec.grad_latents;
    b.spec.grad_latents = [inner](std::span<const double> z) {
      std::vector<double> g = inner(z);
      g.front() = 1.01 * g.front() + 0.5;
      return g;
    };
  }
  RandomStream stream = algorithm_stream(ctx);
  const auto outcomes = run_derivative_checks(b.spec, stream, opt.points, opt.tolerance);

  Sink sink(ctx.out, *ctx.stdout_stream);
  std::ostream& os = *sink;
  os << "# " << settings_line(ctx.settings) << "\n";
  std::vector<std::string> failed;
  for (const auto& c : outcomes) {
    os << "check " << c.name << " max_rel_err=" << format_double(c.max_relative_error)
       << " points=" << c.points << ' ' << (c.passed ? "PASS" : "FAIL") << "\n";
    if (!c.passed) failed.push_back(c.name);
  }
  os << "# summary checks=" << outcomes.size() << " failed=" << failed.size() << "\n";
  if (failed.empty()) return kExitOk;
  std::string names;
  for (const auto& f : failed) names += (names.empty() ? "" : ", ") + f;
  *ctx.stderr_stream << "rsvi: gradient check failed: " << names << "\n";
  return kExitCheckFailed;
}

int cmd_variance(const Context& ctx, const ModelOptions& model, const VarianceOptions& opt) {
  if (opt.replicates < 2) throw ConfigError("replicates must be at least 2 to estimate a variance");
  if (opt.estimators.empty() || opt.aug_steps.empty()) {
    throw ConfigError("variance needs at least one estimator and one B value");
  }
  std::vector<EstimatorKind> kinds;
  for (const auto& name : opt.estimators) {
    try {
      kinds.push_back(parse_estimator_kind(name));
    } catch (const ContractError& e) {
      throw ConfigError(e.what());
    }
  }
  const BuiltModel b = build_model(ctx, model);
  std::vector<double> theta;
  for (const auto& block : b.spec.layout) {
    if (block.family == LatentFamily::gamma_mean_shape) {
      theta.insert(theta.end(), block.dim, opt.init_shape);
      theta.insert(theta.end(), block.dim, opt.init_mean);
    } else {
      theta.insert(theta.end(), block.dim, opt.init_shape);
    }
  }

  const RandomStream root = algorithm_stream(ctx);
  Sink sink(ctx.out, *ctx.stdout_stream);
  std::ostream& os = *sink;
  os << "# " << settings_line(ctx.settings) << "\n";
  os << "estimator,B,min,median,max\n";
  std::uint64_t row = 0;
  for (EstimatorKind kind : kinds) {
    for (unsigned aug : opt.aug_steps) {
      EstimatorConfig cfg{kind, aug, opt.draws};
      const VarianceProfile p = variance_profile(b.spec, theta, cfg, opt.replicates, root.derive(row++));
      os << to_string(kind) << ',' << aug << ',' << format_double(p.min) << ','
         << format_double(p.median) << ',' << format_double(p.max) << "\n";
    }
  }
  os << "# summary rows=" << row << " parameters=" << theta.size()
     << " replicates=" << opt.replicates << "\n";
  return kExitOk;
}

int cmd_fit(const Context& ctx, const ModelOptions& model, const FitOptions& opt) {
  BuiltModel b = build_model(ctx, model);
  if (opt.poison_after > 0) {
    auto calls = std::make_shared<std::uint64_t>(0);
    auto inner = b.spec.log_joint;
    b.spec.log_joint = [inner, calls, limit = opt.poison_after](std::span<const double> z) {
      return ++*calls > limit ? std::numeric_limits<double>::quiet_NaN() : inner(z);
    };
  }
  RunConfig cfg;
  try {
    cfg.estimator = EstimatorConfig{parse_estimator_kind(opt.estimator), opt.aug_steps, opt.draws};
  } catch (const ContractError& e) {
    throw ConfigError(e.what());
  }
  cfg.eta = opt.eta;
  cfg.max_iters = opt.iterations;
  cfg.trace_draws = opt.trace_draws;
  cfg.plateau_window = opt.plateau_window;
  cfg.plateau_tol = opt.plateau_tol;
  cfg.shape_floor = opt.shape_floor;
  const std::vector<double> init = default_initialization(b.spec.layout);

  const std::string prefix = ctx.out.empty() || ctx.out == "-" ? std::string("fit") : ctx.out;
  Sink trace_sink(prefix + ".trace.jsonl", *ctx.stdout_stream);
  std::ostream& ts = *trace_sink;
  ts << ordered_json{{"config", settings_json(ctx.settings)}}.dump() << "\n";

  RunObserver observer;
  observer.on_record = [&](const TraceRecord& r) {
    ordered_json j;
    j["iteration"] = r.iteration;
    j["elbo"] = number_or_null(r.elbo);
    j["step_norm"] = r.step_norm;
    j["grad_norm"] = r.grad_norm;
    j["accepted"] = r.accepted;
    j["trials"] = r.trials;
    j["acceptance"] = r.trials > 0 ? ordered_json(static_cast<double>(r.accepted) / r.trials)
                                   : ordered_json(nullptr);
    if (opt.timings) {
      j["optimize_seconds"] = r.optimize_seconds;
      j["trace_seconds"] = r.trace_seconds;
    }
    ts << j.dump() << "\n";
    ts.flush();
  };
  observer.on_failure = [&](std::uint64_t iteration, const std::string& what) {
    *ctx.stderr_stream << "rsvi: iteration " << iteration << " skipped: " << what << "\n";
  };

  const RunResult result = run_rsvi(b.spec, init, cfg, algorithm_stream(ctx), observer);

  ordered_json summary;
  summary["stop"] = to_string(result.stop);
  summary["iterations"] = result.trace.size();
  summary["failures"] = result.failures;
  summary["final_elbo"] =
      result.trace.empty() ? ordered_json(nullptr) : number_or_null(result.trace.back().elbo);
  if (b.conjugate) {
    const double kl = dirichlet_kl(DirichletParams(result.theta), b.conjugate->posterior());
    summary["kl_to_posterior"] = kl;
    summary["exact_elbo"] = conjugate_exact_elbo(*b.conjugate, DirichletParams(result.theta));
    summary["log_evidence"] = b.conjugate->log_evidence();
  } else {
    const SmoothedElboReport rep = smoothed_elbo_report(result.trace);
    summary["smoothed_elbo_evaluated"] = rep.enough_iterations;
    summary["smoothed_elbo_non_decreasing"] = rep.non_decreasing;
    summary["smoothed_elbo_strictly_non_decreasing"] = rep.strictly_non_decreasing;
    summary["smoothed_elbo_block_means"] = rep.block_means;
    summary["smoothed_elbo_block_errors"] = rep.block_errors;
  }
  ts << ordered_json{{"summary", summary}}.dump() << "\n";
  ts.flush();

  Sink param_sink(prefix + ".params.csv", *ctx.stdout_stream);
  std::ostream& ps = *param_sink;
  ps << "# " << settings_line(ctx.settings) << "\n";
  ps << "# constrained = " << (opt.shape_floor > 0.0 ? "shape_floor + " : "")
     << "softplus(unconstrained)" << (opt.shape_floor > 0.0 ? " for shapes" : "") << "\n";
  ps << "name,unconstrained,constrained\n";
  const auto names = parameter_names(b.spec.layout);
  for (std::size_t i = 0; i < names.size(); ++i) {
    ps << names[i] << ',' << format_double(result.vartheta[i]) << ','
       << format_double(result.theta[i]) << "\n";
  }
  ps << "# summary stop=" << to_string(result.stop) << " iterations=" << result.trace.size() << "\n";

  if (result.stop == StopReason::aborted) {
    *ctx.stderr_stream << "rsvi: optimizer aborted after " << cfg.max_consecutive_failures
                       << " consecutive failures: " << result.last_error << "\n";
    return kExitOptimizerAbort;
  }
  return kExitOk;
}

}  // namespace detail
}  // namespace rsvi::cli
