#include <cstring>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <string>

#include "CLI11.hpp"
#include "internal.hpp"
#include "rsvi/errors.hpp"

namespace rsvi::cli {
namespace {

using detail::Context;
using detail::Settings;

// Flat "key=value" lines; '#' starts a comment line. Keys are long flag names.
std::vector<std::pair<std::string, std::string>> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::vector<std::pair<std::string, std::string>> entries;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos || line[b] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key=value");
    }
    auto strip = [](std::string s) {
      const auto first = s.find_first_not_of(" \t\r");
      if (first == std::string::npos) return std::string();
      return s.substr(first, s.find_last_not_of(" \t\r") - first + 1);
    };
    entries.emplace_back(strip(line.substr(0, eq)), strip(line.substr(eq + 1)));
  }
  return entries;
}

// Finds "--config PATH" / "--config=PATH" after the subcommand.
std::string find_config_path(const std::vector<std::string>& args) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) return args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) return args[i].substr(9);
  }
  return {};
}

Settings resolved_settings(const CLI::App& sub) {
  Settings s;
  for (const CLI::Option* opt : sub.get_options()) {
    const auto& names = opt->get_lnames();
    if (names.empty() || names.front() == "help" || names.front() == "config") continue;
    if (opt->get_group().empty()) continue;  // hidden test hooks stay out of the audit trail
    std::string value;
    if (opt->count() > 0) {
      for (const auto& r : opt->results()) value += (value.empty() ? "" : ",") + r;
    } else {
      value = opt->get_default_str();
    }
    s.emplace_back(names.front(), value);
  }
  return s;
}

void add_model_options(CLI::App* sub, detail::ModelOptions& m) {
  sub->add_option("--model", m.model, "conjugate | def")
      ->check(CLI::IsMember({"conjugate", "def"}));
  sub->add_option("--data", m.data, "counts file (.csv dense, otherwise bag-of-words)");
  sub->add_option("--dim", m.dim, "conjugate: number of categories")->check(CLI::PositiveNumber);
  sub->add_option("--trials", m.trials, "conjugate: multinomial draws");
  sub->add_option("--prior", m.prior, "conjugate: symmetric prior concentration")
      ->check(CLI::PositiveNumber);
  sub->add_option("--layers", m.layers, "def: components per layer, bottom first")
      ->delimiter(',')
      ->check(CLI::PositiveNumber);
  sub->add_option("--observations", m.observations, "def: synthetic rows")
      ->check(CLI::PositiveNumber);
  sub->add_option("--vocab", m.vocab, "def: synthetic columns")->check(CLI::PositiveNumber);
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Reparameterized rejection sampling variational inference"};
  app.name("rsvi");
  app.option_defaults()->always_capture_default()->multi_option_policy(
      CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1, 1);

  Context ctx;
  ctx.stdout_stream = &out;
  ctx.stderr_stream = &err;
  std::string config_path;
  detail::ModelOptions model;
  detail::SampleOptions sample;
  detail::GradcheckOptions gradcheck;
  detail::VarianceOptions variance;
  detail::FitOptions fit;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "flat key=value file; flags take precedence");
    sub->add_option("--seed", ctx.seed, "random seed")->envname("RSVI_SEED");
    sub->add_option("--out", ctx.out, "output path ('-' or empty: standard output)");
  };

  CLI::App* s = app.add_subcommand("sample", "draw from a rejection sampler; CSV + summary");
  common(s);
  s->add_option("--distribution", sample.distribution, "target family")
      ->check(CLI::IsMember({"gamma"}));
  s->add_option("--shape", sample.shape, "gamma shape")->check(CLI::PositiveNumber);
  s->add_option("--rate", sample.rate, "gamma rate")->check(CLI::PositiveNumber);
  s->add_option("-B,--aug-steps", sample.aug_steps, "shape augmentation steps");
  s->add_option("--n-draws", sample.n_draws, "accepted draws to produce");
  s->add_option("--trial-budget", sample.trial_budget, "proposals allowed per accepted draw")
      ->check(CLI::PositiveNumber);

  CLI::App* g = app.add_subcommand("gradcheck", "analytic vs finite-difference derivatives");
  common(g);
  add_model_options(g, model);
  g->add_option("--points", gradcheck.points, "random points per check")
      ->check(CLI::PositiveNumber);
  g->add_option("--tolerance", gradcheck.tolerance, "max relative error")
      ->check(CLI::PositiveNumber);
  g->add_flag("--corrupt-gradient", gradcheck.corrupt_gradient)->group("");

  CLI::App* v = app.add_subcommand("variance", "per-parameter gradient variance table");
  common(v);
  add_model_options(v, model);
  v->add_option("--estimators", variance.estimators, "rsvi, score_function, importance")
      ->delimiter(',');
  v->add_option("-B,--aug-steps", variance.aug_steps, "shape augmentation list")->delimiter(',');
  v->add_option("-G,--replicates", variance.replicates, "independent estimates per row");
  v->add_option("--init-shape", variance.init_shape, "variational shapes / concentrations")
      ->check(CLI::PositiveNumber);
  v->add_option("--init-mean", variance.init_mean, "variational means (gamma latents)")
      ->check(CLI::PositiveNumber);
  v->add_option("--draws", variance.draws, "samples averaged per estimate")
      ->check(CLI::PositiveNumber);

  CLI::App* f = app.add_subcommand("fit", "run the optimizer; JSONL trace + parameter dump");
  common(f);
  add_model_options(f, model);
  f->add_option("--estimator", fit.estimator, "rsvi | score_function | importance")
      ->check(CLI::IsMember({"rsvi", "score_function", "score", "importance"}));
  f->add_option("-B,--aug-steps", fit.aug_steps, "shape augmentation steps");
  f->add_option("--draws", fit.draws, "samples averaged per gradient")
      ->check(CLI::PositiveNumber);
  f->add_option("--eta", fit.eta, "step-size scale")->check(CLI::PositiveNumber);
  f->add_option("--iterations", fit.iterations, "maximum iterations");
  f->add_option("--trace-draws", fit.trace_draws, "fresh draws per ELBO trace value")
      ->check(CLI::PositiveNumber);
  f->add_option("--plateau-window", fit.plateau_window, "stopping window (0 disables)");
  f->add_option("--plateau-tol", fit.plateau_tol, "relative moving-average tolerance");
  f->add_option("--shape-floor", fit.shape_floor, "lower bound on variational shapes")
      ->check(CLI::NonNegativeNumber);
  f->add_flag("--timings", fit.timings, "include wall-clock seconds in the trace");
  f->add_option("--poison-after", fit.poison_after)->group("");

  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);

  try {
    // Config entries go in front of the user's flags. Keys the user also set
    // on the command line are dropped: vector options would otherwise merge.
    if (!args.empty()) {
      const std::string path = find_config_path(args);
      if (!path.empty()) {
        const CLI::App* target = nullptr;
        for (const CLI::App* sub : app.get_subcommands({})) {
          if (sub->get_name() == args.front()) target = sub;
        }
        if (target != nullptr) {
          std::set<const CLI::Option*> given;
          for (std::size_t i = 1; i < args.size(); ++i) {
            if (args[i].size() < 2 || args[i][0] != '-') continue;
            const std::string flag = args[i].substr(0, args[i].find('='));
            if (const CLI::Option* o = target->get_option_no_throw(flag)) given.insert(o);
          }
          std::vector<std::string> injected;
          for (const auto& [key, value] : read_config_file(path)) {
            const CLI::Option* opt = target->get_option_no_throw("--" + key);
            if (opt == nullptr || key == "config" || opt->get_group().empty()) {
              throw ConfigError(path + ": unknown key '" + key + "'");
            }
            if (!given.contains(opt)) injected.push_back("--" + key + "=" + value);
          }
          args.insert(args.begin() + 1, injected.begin(), injected.end());
        }
      }
    }
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "rsvi: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ConfigError& e) {
    err << "rsvi: " << e.what() << "\n";
    return kExitConfig;
  }

  CLI::App* chosen = app.get_subcommands().front();
  ctx.settings.emplace_back("command", chosen->get_name());
  for (auto& kv : resolved_settings(*chosen)) ctx.settings.push_back(std::move(kv));

  try {
    if (chosen == s) return detail::cmd_sample(ctx, sample);
    if (chosen == g) return detail::cmd_gradcheck(ctx, model, gradcheck);
    if (chosen == v) return detail::cmd_variance(ctx, model, variance);
    return detail::cmd_fit(ctx, model, fit);
  } catch (const ConfigError& e) {
    err << "rsvi: " << e.what() << "\n";
    return kExitConfig;
  } catch (const SamplerStall& e) {
    err << "rsvi: " << e.what() << "\n";
    return kExitSamplerStall;
  } catch (const DomainError& e) {
    err << "rsvi: invalid configuration: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ContractError& e) {
    err << "rsvi: invalid configuration: " << e.what() << "\n";
    return kExitConfig;
  }
}

}  // namespace rsvi::cli
