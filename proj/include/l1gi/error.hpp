#pragma once

#include <cstdio>
#include <stdexcept>
#include <string>

namespace l1gi {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the domain of a function (non-finite input, bad shape).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration or violated precondition on a model object.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A numerical procedure failed: singular matrix, non-convergence, etc.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// File could not be read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Iterative solver stopped before certifying optimality.
class ConvergenceError : public NumericalError {
 public:
  ConvergenceError(const std::string& what, double residual)
      : NumericalError(what + " (residual " + format_residual(residual) + ")"), residual_(residual) {}
  // Keeps an already annotated message as is.
  ConvergenceError(const ConvergenceError& inner, const std::string& what)
      : NumericalError(what), residual_(inner.residual_) {}
  double residual() const noexcept { return residual_; }

 private:
  static std::string format_residual(double r) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", r);
    return buf;
  }
  double residual_;
};

}  // namespace l1gi
