#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "rsvi/cli.hpp"

namespace rsvi::cli::detail {

using Settings = std::vector<std::pair<std::string, std::string>>;

struct ModelOptions {
  std::string model = "conjugate";  // conjugate | def
  std::string data;                 // optional counts file; synthetic when empty
  std::size_t dim = 5;              // conjugate: categories
  std::uint64_t trials = 20;        // conjugate: multinomial draws
  double prior = 1.0;               // conjugate: symmetric prior concentration
  std::vector<std::size_t> layers{10, 5};
  std::size_t observations = 50;    // def: rows of synthetic data
  std::size_t vocab = 20;           // def: columns of synthetic data
};

struct SampleOptions {
  std::string distribution = "gamma";
  double shape = 2.0;
  double rate = 1.0;
  unsigned aug_steps = 0;
  std::uint64_t n_draws = 100000;
  std::uint64_t trial_budget = 1'000'000;  // per accepted draw
};

struct GradcheckOptions {
  std::size_t points = 20;
  double tolerance = 1e-4;
  bool corrupt_gradient = false;  // negative control, hidden from help
};

struct VarianceOptions {
  std::vector<std::string> estimators{"rsvi", "score_function"};
  std::vector<unsigned> aug_steps{0, 1, 4};
  std::size_t replicates = 1000;
  double init_shape = 1.0;
  double init_mean = 1.0;
  unsigned draws = 1;
};

struct FitOptions {
  std::string estimator = "rsvi";
  unsigned aug_steps = 1;
  unsigned draws = 1;
  double eta = 1.0;
  std::uint64_t iterations = 1000;
  std::size_t trace_draws = 100;
  std::size_t plateau_window = 200;
  double plateau_tol = 1e-6;
  double shape_floor = 0.0;
  bool timings = false;
  std::uint64_t poison_after = 0;  // test hook: log joint turns NaN after this many calls
};

struct Context {
  std::uint64_t seed = 0;
  std::string out;
  Settings settings;  // resolved configuration, for headers and trailers
  std::ostream* stdout_stream = nullptr;
  std::ostream* stderr_stream = nullptr;
};

// io.cpp
std::string format_double(double x);
std::string settings_line(const Settings& s);  // "key=value key=value ..."

// commands.cpp
int cmd_sample(const Context& ctx, const SampleOptions& opt);
int cmd_gradcheck(const Context& ctx, const ModelOptions& model, const GradcheckOptions& opt);
int cmd_variance(const Context& ctx, const ModelOptions& model, const VarianceOptions& opt);
int cmd_fit(const Context& ctx, const ModelOptions& model, const FitOptions& opt);

}  // namespace rsvi::cli::detail
