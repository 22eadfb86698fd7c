#include "impulse/dual.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <sstream>

#include "impulse/errors.hpp"
#include "impulse/numerics.hpp"

namespace impulse {
namespace {

class ClosedFormEngine final : public DualEngine {
 public:
  explicit ClosedFormEngine(const inventory::InventoryParams& p)
      : params_(p), model_(inventory::make_model(p)) {
    if (!p.never_orders()) g_c_ = inventory::critical_g(p);
  }

  EngineKind kind() const noexcept override { return EngineKind::closed_form; }
  const ImpulseModel& model() const noexcept override { return model_; }

  double bellman_value(double g, double x0) const override {
    return inventory::bellman_closed_form(params_, g, x0);
  }

  StationaryStrategy primal_strategy(double g, double d, double x0) const override {
    if (params_.never_orders()) return inventory::cyclic_strategy(params_, Theta::never(), 0.0);
    const double gc = g_c_.g;
    if (std::abs(g - gc) <= 1e-6 * std::max(1.0, gc)) {
      // At the kink of h: idle long enough at zero stock to meet the level.
      if (x0 != 0.0) {
        throw UnsupportedError("closed-form certificate at g_c is only available from x0 = 0");
      }
      const Theta tau = inventory::delay_for_level(params_, g_c_.a, d);
      if (tau.is_never()) return inventory::cyclic_strategy(params_, Theta::never(), 0.0);
      return inventory::cyclic_strategy(params_, tau, g_c_.a);
    }
    return inventory::weighted_optimal_strategy(params_, g);
  }

  std::optional<double> analytic_g_star(double d) const override {
    if (params_.never_orders()) return 0.0;
    inventory::InventoryParams q = params_;
    q.holding_limit = d;
    if (d <= inventory::critical_d(q)) return g_c_.g;
    return inventory::g_hat(q);
  }

  double default_cert_tol() const noexcept override { return 1e-5; }

 private:
  inventory::InventoryParams params_;
  ImpulseModel model_;
  inventory::CriticalMultiplier g_c_;
};

class GridEngine final : public DualEngine {
 public:
  GridEngine(const ImpulseModel& model, const GridSpec& grid, double vi_tol, std::size_t max_iter)
      : op_(model, grid), vi_tol_(vi_tol), max_iter_(max_iter) {}

  EngineKind kind() const noexcept override { return EngineKind::grid; }
  const ImpulseModel& model() const noexcept override { return op_.model(); }

  double bellman_value(double g, double x0) const override { return table(g).value_at(x0); }

  StationaryStrategy primal_strategy(double g, double, double) const override {
    const double w[] = {g};
    return greedy_strategy(op_.model(), w, table(g));
  }

  double default_cert_tol() const noexcept override { return 5e-3; }

 private:
  const ValueTable& table(double g) const {
    std::lock_guard lock(mutex_);
    auto it = cache_.find(g);
    if (it == cache_.end()) {
      const double w[] = {g};
      it = cache_.emplace(g, value_iteration(op_, w, vi_tol_, max_iter_)).first;
    }
    return it->second;
  }

  GridOperator op_;
  double vi_tol_;
  std::size_t max_iter_;
  mutable std::mutex mutex_;
  mutable std::map<double, ValueTable> cache_;
};

std::string format_number(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

}  // namespace

double lagrangian_value(const CostVector& costs, std::span<const double> g,
                        std::span<const double> d) {
  if (costs.size() != g.size() + 1 || g.size() != d.size()) {
    throw DomainError("lagrangian_value: expected J+1 costs, J multipliers and J levels");
  }
  double out = costs[0];
  for (std::size_t j = 0; j < g.size(); ++j) {
    if (!(g[j] >= 0.0)) throw DomainError("lagrangian_value: multipliers must be non-negative");
    out += g[j] * (costs[j + 1] - d[j]);
  }
  return out;
}

const char* to_string(EngineKind kind) noexcept {
  return kind == EngineKind::closed_form ? "closed_form" : "grid";
}

std::unique_ptr<DualEngine> make_closed_form_engine(const inventory::InventoryParams& p) {
  p.validate();
  return std::make_unique<ClosedFormEngine>(p);
}

std::unique_ptr<DualEngine> make_grid_engine(const ImpulseModel& model, const GridSpec& grid,
                                             double vi_tol, std::size_t max_iter) {
  return std::make_unique<GridEngine>(model, grid, vi_tol, max_iter);
}

std::unique_ptr<DualEngine> make_engine(const ImpulseModel& model, EngineKind kind,
                                        const inventory::InventoryParams* params,
                                        const GridSpec& grid) {
  if (kind == EngineKind::closed_form) {
    if (params == nullptr) {
      throw UnsupportedError("closed_form engine is only available for the inventory model");
    }
    return make_closed_form_engine(*params);
  }
  return make_grid_engine(model, grid);
}

double dual_functional(const DualEngine& engine, double g, double d, double x0) {
  if (engine.model().num_constraints() != 1) {
    throw UnsupportedError("dual_functional needs exactly one constraint");
  }
  if (!(g >= 0.0)) throw DomainError("dual_functional: g must be non-negative");
  return engine.bellman_value(g, x0) - g * d;
}

void certify(DualReport& r, double tol) {
  r.cert_tol = tol;
  r.slackness = 0.0;
  r.feasible = true;
  for (std::size_t j = 0; j < r.g_star.size(); ++j) {
    const double excess = r.primal_costs[j + 1] - r.d[j];
    r.slackness += r.g_star[j] * excess;
    if (excess > tol) r.feasible = false;
  }
  r.gap = r.primal_costs[0] - r.h_star;
}

DualReport maximize_dual(const DualEngine& engine, double d, double x0,
                         const DualOptions& options) {
  if (engine.model().num_constraints() != 1) {
    throw UnsupportedError("maximize_dual handles a single constraint only");
  }
  if (d < 0.0) throw InfeasibleError("constraint level d must be non-negative");

  std::size_t evaluations = 0;
  auto h = [&](double g) {
    ++evaluations;
    return dual_functional(engine, g, d, x0);
  };

  double hi = 1.0;
  double h_hi = h(hi);
  double h_half = h(0.5 * hi);
  std::size_t expansions = 0;
  while (h_hi > h_half) {
    if (++expansions > options.max_expansions) {
      throw ConvergenceError("maximize_dual: h keeps increasing up to g=" + format_number(hi),
                             h_hi - h_half);
    }
    hi *= 2.0;
    h_half = h_hi;
    h_hi = h(hi);
  }

  auto best = numerics::golden_section_maximize(h, 0.0, hi, options.search_tol);
  if (best.argmax <= options.search_tol) {
    // The closed forms have no W at g = 0 when ordering pays off.
    try {
      const double h0 = h(0.0);
      if (h0 >= best.max) best = {0.0, h0, best.evaluations};
    } catch (const UnsupportedError&) {
    }
  }

  DualReport r;
  r.engine = engine.kind();
  r.x0 = x0;
  r.g_star = {best.argmax};
  r.d = {d};
  r.h_star = best.max;
  r.analytic_g_star = engine.analytic_g_star(d);
  if (x0 != 0.0) r.analytic_g_star.reset();

  const StationaryStrategy f = engine.primal_strategy(best.argmax, d, x0);
  r.strategy = f.description;
  r.primal_costs = evaluate(engine.model(), f, State(x0));
  r.evaluations = evaluations;
  certify(r, options.cert_tol.value_or(engine.default_cert_tol()));
  return r;
}

CertificateCheck verify_certificate(const DualReport& r, double tol) {
  CertificateCheck out;
  auto fail = [&](std::string msg) {
    out.pass = false;
    out.violations.push_back(std::move(msg));
  };
  if (r.primal_costs.size() != r.g_star.size() + 1 || r.d.size() != r.g_star.size()) {
    fail("report is incomplete: cost, multiplier and level sizes disagree");
    return out;
  }
  double slack = 0.0;
  for (std::size_t j = 0; j < r.g_star.size(); ++j) {
    const double excess = r.primal_costs[j + 1] - r.d[j];
    if (excess > tol) {
      fail("(i) constraint " + std::to_string(j + 1) + ": V=" +
           format_number(r.primal_costs[j + 1]) + " exceeds d=" + format_number(r.d[j]));
    }
    slack += r.g_star[j] * excess;
  }
  const double gap = r.primal_costs[0] - r.h_star;
  if (std::abs(gap) > tol) fail("(ii) duality gap " + format_number(gap));
  if (std::abs(slack) > tol) fail("(iii) complementary slackness " + format_number(slack));
  return out;
}

}  // namespace impulse
