#pragma once

#include <stdexcept>
#include <string>

namespace impulse {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A value left its admissible set (a user callable produced an out-of-range
/// state, a parameter is non-positive, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// The caller asked for something that has no meaning, e.g. the post-jump
/// state of a never-intervene action.
class UsageError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  NumericError(const std::string& what, double achieved)
      : Error(what), achieved_(achieved) {}
  double achieved() const noexcept { return achieved_; }

 private:
  double achieved_;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double last_residual)
      : Error(what), last_residual_(last_residual) {}
  double last_residual() const noexcept { return last_residual_; }

 private:
  double last_residual_;
};

/// A stationary strategy revisits a state without the clock advancing.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

/// A closed-form quantity is undefined in the current parameter regime.
class RegimeError : public Error {
 public:
  using Error::Error;
};

class CapacityError : public Error {
 public:
  CapacityError(const std::string& what, double required)
      : Error(what), required_(required) {}
  double required() const noexcept { return required_; }

 private:
  double required_;
};

class UnsupportedError : public Error {
 public:
  using Error::Error;
};

class InfeasibleError : public Error {
 public:
  using Error::Error;
};

}  // namespace impulse
