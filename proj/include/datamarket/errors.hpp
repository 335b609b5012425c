#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace datamarket {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation
/// (non-positive incentive, effort outside the effort set, negative matrix entry).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Incentive level outside [a_lower, a_upper] of a source.
class OutOfRangeError : public Error {
 public:
  using Error::Error;
};

/// Mismatched vector/table lengths.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// The estimator's design matrix is rank deficient or too ill-conditioned.
class IllDefinedEstimatorError : public Error {
 public:
  using Error::Error;
};

/// A leave-one-out design is rank deficient, so the payment contract cannot be formed.
class IllDefinedPaymentError : public Error {
 public:
  using Error::Error;
};

/// Scenario or parameters fail the hypotheses required by an operation.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A direct linear solve failed inside the regime where it should succeed.
class NumericalFailureError : public Error {
 public:
  NumericalFailureError(const std::string& what, double condition_estimate)
      : Error(what), condition_estimate_(condition_estimate) {}

  double condition_estimate() const noexcept { return condition_estimate_; }

 private:
  double condition_estimate_;
};

/// Iterative solver exhausted its budget. This is a solver limitation, not
/// evidence that no equilibrium exists.
class NonConvergenceError : public Error {
 public:
  NonConvergenceError(const std::string& what, std::vector<double> last_iterate,
                      double residual, std::size_t iterations)
      : Error(what),
        last_iterate_(std::move(last_iterate)),
        residual_(residual),
        iterations_(iterations) {}

  const std::vector<double>& last_iterate() const noexcept { return last_iterate_; }
  double residual() const noexcept { return residual_; }
  std::size_t iterations() const noexcept { return iterations_; }

 private:
  std::vector<double> last_iterate_;
  double residual_;
  std::size_t iterations_;
};

/// Malformed scenario or result document. `line` is 0 when the error is
/// semantic and only the field path is known.
class ParseError : public Error {
 public:
  ParseError(const std::string& field, std::size_t line, const std::string& message)
      : Error(compose(field, line, message)), field_(field), line_(line) {}

  const std::string& field() const noexcept { return field_; }
  std::size_t line() const noexcept { return line_; }

 private:
  static std::string compose(const std::string& field, std::size_t line,
                             const std::string& message) {
    std::string out;
    if (line > 0) out += "line " + std::to_string(line) + ": ";
    if (!field.empty()) out += field + ": ";
    return out + message;
  }

  std::string field_;
  std::size_t line_;
};

/// Scenario generator request that can never be satisfied, or that could not
/// be satisfied within the retry budget.
class GenerationError : public Error {
 public:
  GenerationError(const std::string& what, std::size_t attempts)
      : Error(what), attempts_(attempts) {}
  std::size_t attempts() const noexcept { return attempts_; }

 private:
  std::size_t attempts_;
};

}  // namespace datamarket
