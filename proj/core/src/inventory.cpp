#include "impulse/inventory.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "impulse/errors.hpp"
#include "impulse/numerics.hpp"

namespace impulse::inventory {
namespace {

constexpr double kRootTol = 1e-12;

std::string num(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

// Regime sign alpha K + H g a_g - D, relative to D.
double regime_gap(const InventoryParams& p, double g, double a_g) {
  return (p.discount * p.setup_cost + p.holding_cost * g * a_g - p.demand_rate) / p.demand_rate;
}

}  // namespace

void InventoryParams::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw DomainError(std::string(name) + " must be positive and finite");
    }
  };
  positive(demand_rate, "demand rate D");
  positive(setup_cost, "setup cost K");
  positive(holding_cost, "holding cost H");
  positive(discount, "discount alpha");
  positive(capacity, "capacity L");
  if (!(holding_limit >= 0.0) || !std::isfinite(holding_limit)) {
    throw DomainError("holding-cost limit d must be finite and non-negative");
  }
}

bool InventoryParams::never_orders() const noexcept {
  return discount * setup_cost >= demand_rate;
}

const char* to_string(Regime r) noexcept {
  switch (r) {
    case Regime::never_order:
      return "never_order";
    case Regime::delayed_order:
      return "delayed_order";
    case Regime::immediate_order:
      return "immediate_order";
  }
  return "unknown";
}

ImpulseModel make_model(const InventoryParams& p) {
  p.validate();
  const double D = p.demand_rate;
  const double K = p.setup_cost;
  const double H = p.holding_cost;
  const double alpha = p.discount;
  const double L = p.capacity;
  // Stock levels this close to zero count as empty (the stock-out rate is an
  // indicator, and x - D * (x / D) need not round to exactly 0).
  const double empty = 1e-12 * std::max(1.0, L);

  ImpulseModel m;
  m.name = "inventory";
  m.states = {0.0, L};
  m.actions = {0.0, L};
  m.alpha = alpha;
  m.flow = [D](double x, double t) {
    const double y = x - D * t;
    return y > 0.0 ? y : 0.0;
  };
  m.jump = [L](double x, double a) { return std::min(x + a, L); };
  m.gradual_costs = {[D, empty](double x) { return x <= empty ? D : 0.0; },
                     [H](double x) { return H * x; }};
  m.lump_costs = {[K](double, double) { return K; }, [](double, double) { return 0.0; }};
  m.gradual_cost_bound = std::max(D, H * L);
  m.lump_cost_bound = K;
  m.kink_times = [D](double x) {
    return x > 0.0 ? std::vector<double>{x / D} : std::vector<double>{};
  };
  m.gradual_closed_form = [D, H, alpha](std::size_t j, double x, Theta theta) {
    const double hit = x / D;
    const bool past_hit = theta.is_never() || theta.value() >= hit;
    if (j == 0) {
      if (theta.is_never()) return D / alpha * std::exp(-alpha * hit);
      if (!past_hit) return 0.0;
      return D / alpha * (std::exp(-alpha * hit) - std::exp(-alpha * theta.value()));
    }
    if (past_hit) {
      // Hx/alpha + (HD/alpha^2)(e^{-alpha x/D} - 1)
      return H * D / (alpha * alpha) * numerics::expm1_minus_x(-alpha * hit);
    }
    // (Hx/alpha)(1 - e^{-u}) + HD[e^{-u}(theta/alpha + 1/alpha^2) - 1/alpha^2], u = alpha theta
    const double u = alpha * theta.value();
    return H * x / alpha * (-std::expm1(-u)) -
           H * D / (alpha * alpha) * (-std::expm1(-u) - u * std::exp(-u));
  };
  m.traversal_time = L / D;
  return m;
}

double solve_a_g(const InventoryParams& p, double g) {
  if (!(g > 0.0)) throw DomainError("solve_a_g: multiplier must be positive, got " + num(g));
  const double D = p.demand_rate;
  const double alpha = p.discount;
  const double scale = g * p.holding_cost / alpha;
  const double target = alpha * p.setup_cost / D;
  auto f = [&](double a) { return scale * numerics::expm1_minus_x(alpha * a / D) - target; };
  auto df = [&](double a) { return g * p.holding_cost / D * std::expm1(alpha * a / D); };

  double hi = D / alpha;
  while (f(hi) <= 0.0) hi *= 2.0;
  return numerics::bisect_newton(f, df, 0.0, hi, std::max(kRootTol, 1e-15 * hi));
}

double g_from_a(const InventoryParams& p, double a) {
  if (!(a > 0.0)) throw DomainError("g_from_a: order level must be positive, got " + num(a));
  const double alpha = p.discount;
  const double z = alpha * a / p.demand_rate;
  return alpha * alpha * p.setup_cost /
         (p.holding_cost * p.demand_rate * numerics::expm1_minus_x(z));
}

CriticalMultiplier critical_g(const InventoryParams& p) {
  if (p.never_orders()) {
    throw RegimeError("never-order regime (alpha K >= D): g_c undefined");
  }
  const double target = (p.demand_rate - p.discount * p.setup_cost) / p.holding_cost;
  auto product = [&](double g) { return g * solve_a_g(p, g); };
  double lo = 1.0;
  double hi = 1.0;
  while (product(lo) > target) lo *= 0.5;
  while (product(hi) < target) hi *= 2.0;
  // g -> g a_g is increasing; bisect down to the resolution of g itself.
  while (hi - lo > 1e-15 * hi) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double pm = product(mid);
    if (std::abs(pm - target) <= kRootTol * 1e-3) {
      lo = hi = mid;
      break;
    }
    (pm < target ? lo : hi) = mid;
  }
  CriticalMultiplier out;
  out.g = 0.5 * (lo + hi);
  out.a = solve_a_g(p, out.g);
  return out;
}

double critical_d(const InventoryParams& p) {
  const double a = critical_g(p).a;
  const double D = p.demand_rate;
  const double H = p.holding_cost;
  const double alpha = p.discount;
  const double z = alpha * a / D;
  return H * a * std::exp(z) / (alpha * std::expm1(z)) - D * H / (alpha * alpha);
}

double a_star(const InventoryParams& p) {
  const double dc = critical_d(p);
  const double d = p.holding_limit;
  if (!(d > dc)) {
    throw RegimeError("a*: holding limit d=" + num(d) + " does not exceed d_c=" + num(dc) +
                      "; the delayed-order branch applies");
  }
  const double D = p.demand_rate;
  const double H = p.holding_cost;
  const double alpha = p.discount;
  auto f = [&](double a) {
    const double z = alpha * a / D;
    return H * a / alpha * std::exp(z) / std::expm1(z) - D * H / (alpha * alpha) - d;
  };
  auto df = [&](double a) {
    const double z = alpha * a / D;
    const double em1 = std::expm1(z);
    return H / alpha * std::exp(z) * numerics::expm1_minus_x(z) / (em1 * em1);
  };
  const double lo = critical_g(p).a;  // f(lo) = d_c - d < 0
  double hi = 2.0 * lo;
  while (f(hi) <= 0.0) hi *= 2.0;
  return numerics::bisect_newton(f, df, lo, hi, std::max(kRootTol, 1e-15 * hi));
}

double g_hat(const InventoryParams& p) { return g_from_a(p, a_star(p)); }

double hat_a(const InventoryParams& p, double g) {
  if (!(g > 0.0)) throw DomainError("hat_a: multiplier must be positive");
  return p.demand_rate / p.discount * std::log1p(p.discount / (g * p.holding_cost));
}

double bellman_closed_form(const InventoryParams& p, double g, double x) {
  if (!(x >= 0.0 && x <= p.capacity)) {
    throw DomainError("bellman_closed_form: x=" + num(x) + " outside [0, L]");
  }
  if (!(g >= 0.0)) throw DomainError("bellman_closed_form: multiplier must be non-negative");
  const double D = p.demand_rate;
  const double H = p.holding_cost;
  const double alpha = p.discount;
  const double base = x * g * H / alpha - D * g * H / (alpha * alpha);
  if (g == 0.0) {
    if (!p.never_orders()) {
      throw UnsupportedError(
          "no closed-form Bellman function at g=0 when alpha K < D; use the grid engine");
    }
    return D / alpha * std::exp(-alpha * x / D);
  }
  const double a = solve_a_g(p, g);
  if (regime_gap(p, g, a) < -1e-12) {
    if (a > p.capacity) {
      throw CapacityError("bellman_closed_form: a_g=" + num(a) + " exceeds capacity L=" +
                              num(p.capacity),
                          a);
    }
    return base + D * g * H / (alpha * alpha) * std::exp(alpha * (a - x) / D);
  }
  return base + (D * g * H / (alpha * alpha) + D / alpha) * std::exp(-alpha * x / D);
}

StationaryStrategy weighted_optimal_strategy(const InventoryParams& p, double g) {
  if (p.never_orders()) return cyclic_strategy(p, Theta::never(), 0.0);
  if (!(g > 0.0)) {
    throw UnsupportedError("no closed-form optimal strategy at g=0 when alpha K < D");
  }
  const double a = solve_a_g(p, g);
  if (regime_gap(p, g, a) < -1e-12) return cyclic_strategy(p, Theta::after(0.0), a);
  return cyclic_strategy(p, Theta::never(), 0.0);
}

double dual_slope_below_critical(const InventoryParams& p, double g) {
  const double a = solve_a_g(p, g);
  const double alpha = p.discount;
  const double z = alpha * a / p.demand_rate;
  return p.holding_cost * a / alpha * std::exp(z) / std::expm1(z) -
         p.demand_rate * p.holding_cost / (alpha * alpha) - p.holding_limit;
}

InventorySolution solve_constrained(const InventoryParams& p) {
  p.validate();
  const double D = p.demand_rate;
  const double H = p.holding_cost;
  const double alpha = p.discount;
  const double d = p.holding_limit;

  InventorySolution sol;
  if (p.never_orders()) {
    sol.regime = Regime::never_order;
    sol.v0 = D / alpha;
    return sol;
  }
  const double required = min_capacity(p);
  if (p.capacity < required) {
    throw CapacityError("capacity L=" + num(p.capacity) + " is below the required " + num(required),
                        required);
  }
  const auto crit = critical_g(p);
  const double dc = critical_d(p);
  if (d <= dc) {
    sol.g_star = crit.g;
    if (d == 0.0) {
      // The delay tends to infinity as d -> 0: never ordering is the limit.
      sol.regime = Regime::never_order;
      sol.v0 = D / alpha;
      return sol;
    }
    const double z = alpha * crit.a / D;
    sol.regime = Regime::delayed_order;
    sol.order_qty = crit.a;
    sol.tau_star = std::log(-std::expm1(-z) * dc / d + std::exp(-z)) / alpha;
    sol.v1 = d;
    sol.v0 = D / alpha - sol.g_star * d;
    return sol;
  }
  const double a = a_star(p);
  sol.regime = Regime::immediate_order;
  sol.order_qty = a;
  sol.g_star = g_from_a(p, a);
  sol.v1 = d;
  sol.v0 = D * sol.g_star * H / (alpha * alpha) * std::expm1(alpha * a / D) - sol.g_star * d;
  return sol;
}

StationaryStrategy cyclic_strategy(const InventoryParams& p, Theta tau, double order) {
  StationaryStrategy f;
  if (tau.is_never()) {
    f.description = "never order";
    f.rule = [](double) { return ImpulseAction{Theta::never(), 0.0}; };
    return f;
  }
  const double D = p.demand_rate;
  const double delay = tau.value();
  std::ostringstream os;
  os.precision(12);
  os << "wait x/D + " << delay << ", order " << order;
  f.description = os.str();
  f.rule = [D, delay, order](double x) { return ImpulseAction{Theta::after(x / D + delay), order}; };
  return f;
}

StationaryStrategy strategy_of(const InventoryParams& p, const InventorySolution& sol) {
  switch (sol.regime) {
    case Regime::never_order:
      return cyclic_strategy(p, Theta::never(), 0.0);
    case Regime::delayed_order:
      return cyclic_strategy(p, Theta::after(sol.tau_star), sol.order_qty);
    case Regime::immediate_order:
      return cyclic_strategy(p, Theta::after(0.0), sol.order_qty);
  }
  throw UsageError("strategy_of: unknown regime");
}

double eoq_limit(const InventoryParams& p, double g) {
  if (!(g > 0.0)) throw DomainError("eoq_limit: multiplier must be positive");
  return std::sqrt(2.0 * p.setup_cost * p.demand_rate / (g * p.holding_cost));
}

bool eoq_gate(const InventoryParams& p, double g) {
  return std::sqrt(2.0 * p.setup_cost * p.demand_rate * p.holding_cost * g) < p.demand_rate;
}

double min_capacity(const InventoryParams& p) {
  if (p.never_orders()) return 0.0;
  const double a_c = critical_g(p).a;
  if (p.holding_limit <= critical_d(p)) return a_c;
  return std::max(a_c, a_star(p));
}

double closed_form_v1(const InventoryParams& p, Theta tau, double a) {
  if (!(a > 0.0) || a > p.capacity) {
    throw DomainError("closed_form_v1: order level must lie in (0, L]");
  }
  if (tau.is_never()) return 0.0;
  const double alpha = p.discount;
  const double z = alpha * a / p.demand_rate;
  // Ha/alpha + (HD/alpha^2)(e^{-z} - 1)
  const double per_cycle =
      p.holding_cost * p.demand_rate / (alpha * alpha) * numerics::expm1_minus_x(-z);
  return per_cycle / (std::exp(alpha * tau.value()) - std::exp(-z));
}

Theta delay_for_level(const InventoryParams& p, double a, double level) {
  if (!(level >= 0.0)) throw DomainError("delay_for_level: level must be non-negative");
  if (level == 0.0) return Theta::never();
  const double alpha = p.discount;
  const double z = alpha * a / p.demand_rate;
  const double per_cycle =
      p.holding_cost * p.demand_rate / (alpha * alpha) * numerics::expm1_minus_x(-z);
  const double growth = per_cycle / level + std::exp(-z);
  if (growth <= 1.0) return Theta::after(0.0);
  return Theta::after(std::log(growth) / alpha);
}

}  // namespace impulse::inventory
