#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace rsvi {

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Caller violated a structural contract (wrong arity, mismatched sizes).
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A rejection sampler exhausted its trial budget without accepting.
class SamplerStall : public std::runtime_error {
 public:
  SamplerStall(double shape, double log_envelope, std::uint64_t trials)
      : std::runtime_error("rejection sampler stalled: shape=" + std::to_string(shape) +
                           " log_M=" + std::to_string(log_envelope) +
                           " trials=" + std::to_string(trials)),
        shape_(shape),
        log_envelope_(log_envelope),
        trials_(trials) {}

  double shape() const noexcept { return shape_; }
  double log_envelope() const noexcept { return log_envelope_; }
  std::uint64_t trials() const noexcept { return trials_; }

 private:
  double shape_;
  double log_envelope_;
  std::uint64_t trials_;
};

/// A gradient estimate came out non-finite and was discarded.
class EstimateRejected : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerical routine failed to converge where convergence was expected.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace rsvi
