#pragma once

#include "impulse/model.hpp"
#include "impulse/rollout.hpp"

/// Single-item inventory with instantaneous replenishment, lost sales at
/// rate D when empty, setup cost K per order and a discounted holding-cost
/// budget d. Everything here is closed form or a one-dimensional root.
namespace impulse::inventory {

struct InventoryParams {
  double demand_rate = 1.0;   // D, units per unit time
  double setup_cost = 0.5;    // K, per order
  double holding_cost = 1.0;  // H, per unit per unit time
  double discount = 1.0;      // alpha
  double capacity = 10.0;     // L
  double holding_limit = 0.0; // d, constraint level on the discounted holding cost

  /// Throws DomainError unless D, K, H, alpha, L > 0 and d >= 0.
  void validate() const;
  /// alpha K >= D: ordering never pays off.
  bool never_orders() const noexcept;
};

enum class Regime { never_order, delayed_order, immediate_order };

const char* to_string(Regime r) noexcept;

struct InventorySolution {
  Regime regime = Regime::never_order;
  double g_star = 0.0;
  double order_qty = 0.0;
  double tau_star = 0.0;
  double v0 = 0.0;
  double v1 = 0.0;
};

/// The impulse model on X = A = [0, L] with the closed-form gradual costs
/// registered and the stock-out time x/D declared as a kink.
ImpulseModel make_model(const InventoryParams& p);

/// a_g: the positive root of alpha K/D + gH/alpha + (gH/D) a = (gH/alpha) e^{alpha a/D}.
double solve_a_g(const InventoryParams& p, double g);

/// Inverse of solve_a_g: g = alpha^2 K / (H D [e^{alpha a/D} - 1 - alpha a/D]).
double g_from_a(const InventoryParams& p, double a);

struct CriticalMultiplier {
  double g = 0.0;  // g_c with alpha K + H g_c a_{g_c} = D
  double a = 0.0;  // a_{g_c}
};

CriticalMultiplier critical_g(const InventoryParams& p);

/// d_c: the holding-cost level below which the optimal strategy idles at zero stock.
double critical_d(const InventoryParams& p);

/// a*: root of (H a/alpha) e^{z}/(e^{z} - 1) - DH/alpha^2 - d, z = alpha a/D. Requires d > d_c.
double a_star(const InventoryParams& p);

/// g-hat = alpha^2 K / (DH e^{alpha a*/D} - DH - alpha H a*).
double g_hat(const InventoryParams& p);

/// Minimizer of the never-order Bellman function over impulses:
/// (D/alpha) ln(1 + alpha/(gH)).
double hat_a(const InventoryParams& p, double g);

/// W*_g(x) for the Lagrangian weight g.
double bellman_closed_form(const InventoryParams& p, double g, double x);

/// The uniformly optimal stationary strategy for weight g (one of them on
/// the regime boundary, where the immediate-order rule is returned).
StationaryStrategy weighted_optimal_strategy(const InventoryParams& p, double g);

/// dh/dg below g_c: (H a_g/alpha) e^{z}/(e^{z}-1) - DH/alpha^2 - d, z = alpha a_g/D.
double dual_slope_below_critical(const InventoryParams& p, double g);

/// Constraint-optimal strategy from x0 = 0.
InventorySolution solve_constrained(const InventoryParams& p);

/// Rule x -> (x/D + tau, a), or never() for the never-order regime.
StationaryStrategy strategy_of(const InventoryParams& p, const InventorySolution& sol);

/// Rule x -> (x/D + tau, a) for arbitrary (tau, a); tau may be never().
StationaryStrategy cyclic_strategy(const InventoryParams& p, Theta tau, double order);

/// Undiscounted-limit order size sqrt(2KD/(gH)).
double eoq_limit(const InventoryParams& p, double g);
/// sqrt(2 K D H g) < D: the limit comparison is meaningful.
bool eoq_gate(const InventoryParams& p, double g);

/// Smallest capacity for which the constrained solution is attainable.
double min_capacity(const InventoryParams& p);

/// V_1(0, f) for f(x) = (x/D + tau, a), summed as a geometric series.
double closed_form_v1(const InventoryParams& p, Theta tau, double a);

/// Idle time tau >= 0 making closed_form_v1(tau, a) = level; never() for
/// level 0 and 0 when the level is out of reach.
Theta delay_for_level(const InventoryParams& p, double a, double level);

}  // namespace impulse::inventory
