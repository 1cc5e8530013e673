#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "rsvi/engine.hpp"
#include "rsvi/models.hpp"

namespace rsvi::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitCheckFailed = 1,
  kExitConfig = 2,
  kExitSamplerStall = 3,
  kExitOptimizerAbort = 4,
};

/// Raised for anything the user can fix by changing flags, config or input
/// files; maps to kExitConfig.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Entry point shared by the executable and the tests.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

// Input formats -----------------------------------------------------------

/// Lines "doc_id word_id count", whitespace separated, 0-indexed. Blank lines
/// and lines starting with '#' are skipped. Repeated (doc, word) pairs add up.
/// `cols` of 0 sizes the vocabulary from the largest word id.
CountMatrix read_bag_of_words(const std::filesystem::path& path, std::size_t cols = 0);

/// Dense CSV of non-negative integers, one row per observation.
CountMatrix read_dense_csv(const std::filesystem::path& path);

/// Dispatches on extension: ".csv" is dense, anything else bag-of-words.
CountMatrix read_counts(const std::filesystem::path& path);

// Derivative checks -------------------------------------------------------

struct CheckOutcome {
  std::string name;
  double max_relative_error = 0.0;
  std::size_t points = 0;
  bool passed = false;
};

/// Every analytic-vs-central-difference check: transform derivatives, the
/// log-ratio gradient, entropy gradients, the softplus jacobian and the
/// model's ∇f. Each runs at `points` random points drawn from `stream`.
std::vector<CheckOutcome> run_derivative_checks(const ModelSpec& model, RandomStream& stream,
                                                std::size_t points = 20, double tolerance = 1e-4);

// Smoothed-ELBO stability -------------------------------------------------

struct SmoothedElboReport {
  std::vector<double> block_means;   // consecutive `window`-iteration means over the tail
  std::vector<double> block_errors;  // standard error of each block mean
  /// No block mean below its predecessor by more than `noise_sigmas` combined
  /// standard errors. The trace ELBO is itself a Monte Carlo estimate, so a
  /// drop inside that band is not evidence of a decrease.
  bool non_decreasing = false;
  /// No block mean below its predecessor at all.
  bool strictly_non_decreasing = false;
  bool enough_iterations = false;
};

/// Moving average of width `window` sampled every `window` iterations over
/// the last `tail` records.
SmoothedElboReport smoothed_elbo_report(const std::vector<TraceRecord>& trace,
                                        std::size_t window = 100, std::size_t tail = 1000,
                                        double noise_sigmas = 3.0);

}  // namespace rsvi::cli
