#include "impulse/numerics.hpp"

#include <cmath>

#include "impulse/errors.hpp"

namespace impulse::numerics {
namespace {

struct SimpsonState {
  const std::function<double(double)>& f;
  int max_depth;
  std::size_t evaluations = 0;
  double unresolved = 0.0;
  bool converged = true;

  double eval(double x) {
    ++evaluations;
    return f(x);
  }

  double recurse(double a, double b, double fa, double fm, double fb, double whole, double tol,
                 int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = eval(lm);
    const double frm = eval(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (std::abs(delta) <= 15.0 * tol) {
      return left + right + delta / 15.0;
    }
    if (depth >= max_depth) {
      converged = false;
      unresolved += std::abs(delta) / 15.0;
      return left + right + delta / 15.0;
    }
    return recurse(a, m, fa, flm, fm, left, 0.5 * tol, depth + 1) +
           recurse(m, b, fm, frm, fb, right, 0.5 * tol, depth + 1);
  }
};

}  // namespace

QuadratureResult adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                                  double abs_tol, int max_depth) {
  QuadratureResult out;
  if (!(b > a)) return out;
  SimpsonState st{f, max_depth};
  const double fa = st.eval(a);
  const double fb = st.eval(b);
  const double m = 0.5 * (a + b);
  const double fm = st.eval(m);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  out.value = st.recurse(a, b, fa, fm, fb, whole, abs_tol, 0);
  out.converged = st.converged;
  out.error_estimate = st.unresolved;
  out.evaluations = st.evaluations;
  return out;
}

double bisect(const std::function<double(double)>& f, double lo, double hi, double abs_tol) {
  double flo = f(lo);
  double fhi = f(hi);
  if (flo > 0.0 || fhi < 0.0) {
    throw NumericError("bisect: bracket does not straddle a root", std::abs(hi - lo));
  }
  while (hi - lo > abs_tol) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;  // bracket at machine resolution
    const double fm = f(mid);
    if (fm > 0.0) {
      hi = mid;
    } else if (fm < 0.0) {
      lo = mid;
    } else {
      return mid;
    }
  }
  return 0.5 * (lo + hi);
}

double bisect_newton(const std::function<double(double)>& f,
                     const std::function<double(double)>& df, double lo, double hi,
                     double abs_tol, int newton_steps) {
  double root = bisect(f, lo, hi, abs_tol);
  const double bracket_lo = root - abs_tol;
  const double bracket_hi = root + abs_tol;
  for (int i = 0; i < newton_steps; ++i) {
    const double slope = df(root);
    if (!(std::abs(slope) > 0.0) || !std::isfinite(slope)) break;
    const double next = root - f(root) / slope;
    if (!(next >= bracket_lo && next <= bracket_hi)) break;
    root = next;
  }
  return root;
}

GoldenResult golden_section_maximize(const std::function<double(double)>& f, double lo,
                                     double hi, double tol) {
  static const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  GoldenResult out;
  double a = lo;
  double b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  out.evaluations = 2;
  while (b - a > tol) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
    ++out.evaluations;
    if (c >= d) break;  // resolution exhausted
  }
  if (fc >= fd) {
    out.argmax = c;
    out.max = fc;
  } else {
    out.argmax = d;
    out.max = fd;
  }
  return out;
}

double expm1_minus_x(double z) {
  if (std::abs(z) < 2.0) {
    // z^2/2 + z^3/6 + ... ; expm1(z) - z cancels badly for moderate |z|.
    double term = z * z / 2.0;
    double sum = term;
    for (int k = 3; k <= 40 && std::abs(term) > 1e-18 * std::abs(sum); ++k) {
      term *= z / k;
      sum += term;
    }
    return sum;
  }
  return std::expm1(z) - z;
}

}  // namespace impulse::numerics
