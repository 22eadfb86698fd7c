#pragma once

// Test-side reference computations. They deliberately avoid the library's
// numerics so that a bug there cannot hide behind itself.

#include <cmath>
#include <functional>

namespace oracle {

inline double bisect(const std::function<double(double)>& f, double lo, double hi) {
  double flo = f(lo);
  for (int i = 0; i < 300; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    const double fm = f(mid);
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// Composite Simpson with n (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n = 20000) {
  if (b <= a) return 0.0;
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

struct Inv {
  double D = 1.0, K = 0.5, H = 1.0, alpha = 1.0, L = 10.0;
};

// a_g from e^{z} - 1 - z = alpha^2 K / (g H D), z = alpha a / D, by bisection in long double.
inline double a_g(const Inv& p, double g) {
  const long double rhs = (long double)p.alpha * p.alpha * p.K / (g * p.H * p.D);
  auto f = [&](double a) {
    const long double z = (long double)p.alpha * a / p.D;
    return (double)(expl(z) - 1.0L - z - rhs);
  };
  double hi = 1.0;
  while (f(hi) < 0.0) hi *= 2.0;
  return bisect(f, 0.0, hi);
}

// Discounted costs of "from x wait x/D + tau, then raise stock to min(a, L)",
// summed cycle by cycle with Simpson quadrature for the running costs.
struct Costs {
  double v0 = 0.0, v1 = 0.0;
};

inline Costs brute_force_cycle(const Inv& p, double tau, double a, double x0, int cycles = 80) {
  Costs c;
  double t0 = 0.0;
  double x = x0;
  for (int k = 0; k < cycles; ++k) {
    const double theta = x / p.D + tau;
    const double disc = std::exp(-p.alpha * t0);
    const double hit = x / p.D;
    const double xs = x;
    auto stock = [&](double t) { return std::max(xs - p.D * t, 0.0); };
    c.v1 += disc * simpson([&](double t) { return std::exp(-p.alpha * t) * p.H * stock(t); }, 0.0,
                           std::min(hit, theta));
    c.v0 += disc * simpson([&](double t) { return std::exp(-p.alpha * t) * p.D; }, hit, theta);
    c.v0 += disc * std::exp(-p.alpha * theta) * p.K;
    t0 += theta;
    x = std::min(a, p.L);
    if (std::exp(-p.alpha * t0) < 1e-17) break;
  }
  return c;
}

}  // namespace oracle
