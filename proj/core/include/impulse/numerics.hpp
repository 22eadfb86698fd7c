#pragma once

#include <cstddef>
#include <functional>

namespace impulse::numerics {

struct QuadratureResult {
  double value = 0.0;
  double error_estimate = 0.0;
  bool converged = true;
  std::size_t evaluations = 0;
};

/// Adaptive Simpson quadrature of f over [a, b] to absolute tolerance.
QuadratureResult adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                                  double abs_tol, int max_depth = 48);

/// Root of an increasing-through-zero function on [lo, hi] with f(lo) < 0 < f(hi).
/// Bisects until the bracket is narrower than abs_tol, then applies up to
/// `newton_steps` Newton steps (kept only while they stay inside the bracket).
double bisect_newton(const std::function<double(double)>& f,
                     const std::function<double(double)>& df, double lo, double hi,
                     double abs_tol, int newton_steps = 2);

/// Plain bisection for a function that changes sign from negative to positive.
double bisect(const std::function<double(double)>& f, double lo, double hi, double abs_tol);

struct GoldenResult {
  double argmax = 0.0;
  double max = 0.0;
  std::size_t evaluations = 0;
};

/// Golden-section search for the maximum of a concave (unimodal) function.
/// Ties move the bracket left, so flat functions report the leftmost point.
GoldenResult golden_section_maximize(const std::function<double(double)>& f, double lo, double hi,
                                     double tol);

/// e^z - 1 - z without cancellation for small |z|.
double expm1_minus_x(double z);

}  // namespace impulse::numerics
