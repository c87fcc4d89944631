#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace se3opt {

/// Base of every error thrown by the library. The message can be prefixed with
/// context (step index, body/slot pair, phase label) while the error travels up.
class Error : public std::exception {
 public:
  explicit Error(std::string message) : message_(std::move(message)) {}

  const char* what() const noexcept override { return message_.c_str(); }

  void add_context(const std::string& context) { message_ = context + ": " + message_; }

 private:
  std::string message_;
};

/// Invalid geometric input: non-skew matrix, cut-locus logarithm, non-rotation.
class GeometryError : public Error {
 public:
  using Error::Error;
};

/// A sphere of a body came too close to the attracting center.
class SingularityError : public Error {
 public:
  SingularityError(std::string message, int sphere) : Error(std::move(message)), sphere_(sphere) {}
  int sphere() const noexcept { return sphere_; }

 private:
  int sphere_;
};

/// An iterative solve (implicit step, shooting, line search) did not converge.
class ConvergenceError : public Error {
 public:
  ConvergenceError(std::string message, double residual)
      : Error(std::move(message)), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// Newton matrix too ill-conditioned to invert reliably.
class IllConditionedError : public ConvergenceError {
 public:
  IllConditionedError(std::string message, double condition)
      : ConvergenceError(std::move(message), condition) {}
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class BudgetError : public Error {
 public:
  using Error::Error;
};

}  // namespace se3opt
