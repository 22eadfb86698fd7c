#include "impulse/bellman_grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <optional>
#include <ostream>

#include "impulse/errors.hpp"

namespace impulse {
namespace {

std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> v(n);
  if (n == 1) {
    v[0] = lo;
    return v;
  }
  const double step = (hi - lo) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) v[i] = lo + step * static_cast<double>(i);
  v.back() = hi;
  return v;
}

double interpolate_uniform(double lo, double hi, std::span<const double> values, double x) {
  const std::size_t n = values.size();
  const double pos = (x - lo) / (hi - lo) * static_cast<double>(n - 1);
  if (pos <= 0.0) return values.front();
  if (pos >= static_cast<double>(n - 1)) return values.back();
  const auto i = static_cast<std::size_t>(pos);
  const double frac = pos - static_cast<double>(i);
  return values[i] + frac * (values[i + 1] - values[i]);
}

// Waiting times probed at state x: uniform grid plus declared kinks, ascending.
std::vector<double> theta_candidates(const ImpulseModel& model, const std::vector<double>& uniform,
                                     double theta_max, double x) {
  std::vector<double> out = uniform;
  if (model.kink_times) {
    for (double k : model.kink_times(x)) {
      if (k > 0.0 && k <= theta_max) out.push_back(k);
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end(),
                        [](double a, double b) { return std::abs(a - b) <= 1e-14 * (1.0 + b); }),
            out.end());
  return out;
}

std::vector<double> weights_of(const ImpulseModel& model, std::span<const double> g) {
  if (g.size() != model.num_constraints()) {
    throw DomainError("expected " + std::to_string(model.num_constraints()) +
                      " multipliers, got " + std::to_string(g.size()));
  }
  std::vector<double> w{1.0};
  for (double gj : g) {
    if (!(gj >= 0.0)) throw DomainError("multipliers must be non-negative");
    w.push_back(gj);
  }
  return w;
}

void check_state(const ImpulseModel& model, double x, const char* who) {
  if (!model.states.contains(x)) {
    throw DomainError(std::string(who) + " left the state interval at " + std::to_string(x));
  }
}

// min over impulses of sum_j w_j C^I_j(y, a) + W(l(y, a)); smallest a on ties.
// Impulses landing within kStateMatchTol of `skip` are left out.
std::pair<double, double> best_impulse(const ImpulseModel& model, std::span<const double> w,
                                       const std::vector<double>& actions, double y,
                                       double lo, double hi, std::span<const double> W,
                                       std::optional<double> skip = std::nullopt) {
  double best = std::numeric_limits<double>::infinity();
  double best_a = actions.front();
  for (double a : actions) {
    const double next = model.jump(y, a);
    check_state(model, next, "jump callable");
    if (skip && std::abs(next - *skip) <= kStateMatchTol) continue;
    double val = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j) {
      if (w[j] != 0.0) val += w[j] * model.lump_costs[j](y, a);
    }
    val += interpolate_uniform(lo, hi, W, next);
    if (val < best) {
      best = val;
      best_a = a;
    }
  }
  return {best, best_a};
}

}  // namespace

GridSpec GridSpec::resolved(const ImpulseModel& model) const {
  if (n_states < 2) throw DomainError("grid needs at least 2 states");
  if (n_theta < 2) throw DomainError("grid needs at least 2 waiting times");
  if (n_actions < 1) throw DomainError("grid needs at least 1 impulse");
  if (theta_max < 0.0) throw DomainError("theta_max must be positive");
  GridSpec out = *this;
  if (out.theta_max == 0.0) out.theta_max = 10.0 / model.alpha + model.traversal_time;
  return out;
}

double ValueTable::value_at(double x) const {
  return interpolate_uniform(interval.lo, interval.hi, values, x);
}

GridOperator::GridOperator(ImpulseModel model, const GridSpec& grid)
    : model_(std::move(model)), grid_(grid.resolved(model_)) {
  model_.validate();
  if (!(model_.states.width() > 0.0)) throw DomainError("grid needs a non-degenerate state interval");
  states_ = linspace(model_.states.lo, model_.states.hi, grid_.n_states);
  actions_ = linspace(model_.actions.lo, model_.actions.hi, grid_.n_actions);
  const auto uniform = linspace(0.0, grid_.theta_max, grid_.n_theta);
  const std::size_t n_costs = model_.num_costs();

  std::vector<double> raw_post_flow;
  cell_begin_.push_back(0);
  gradual_never_.reserve(states_.size() * n_costs);
  for (double x : states_) {
    for (double theta : theta_candidates(model_, uniform, grid_.theta_max, x)) {
      const double y = model_.flow(x, theta);
      check_state(model_, y, "flow callable");
      theta_.push_back(theta);
      survival_.push_back(std::exp(-model_.alpha * theta));
      raw_post_flow.push_back(y);
      for (std::size_t j = 0; j < n_costs; ++j) {
        gradual_.push_back(gradual_cost(model_, j, x, Theta::after(theta)));
      }
    }
    cell_begin_.push_back(theta_.size());
    for (std::size_t j = 0; j < n_costs; ++j) {
      gradual_never_.push_back(gradual_cost(model_, j, x, Theta::never()));
    }
  }

  // Post-flow states within kStateMatchTol share one impulse minimization per sweep.
  std::vector<std::size_t> order(raw_post_flow.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return raw_post_flow[a] < raw_post_flow[b]; });
  post_flow_.assign(raw_post_flow.size(), 0);
  for (std::size_t k = 0; k < order.size(); ++k) {
    const double y = raw_post_flow[order[k]];
    if (post_flow_states_.empty() || y - post_flow_states_.back() > kStateMatchTol) {
      post_flow_states_.push_back(y);
    }
    post_flow_[order[k]] = post_flow_states_.size() - 1;
  }
}

std::vector<double> GridOperator::apply(std::span<const double> W, std::span<const double> g,
                                        std::vector<Choice>* argmin) const {
  if (W.size() != states_.size()) throw DomainError("value vector does not match the grid");
  const auto w = weights_of(model_, g);
  const std::size_t n_costs = w.size();
  const double lo = model_.states.lo;
  const double hi = model_.states.hi;

  std::vector<double> impulse_value(post_flow_states_.size());
  std::vector<double> impulse_arg(post_flow_states_.size());
  for (std::size_t u = 0; u < post_flow_states_.size(); ++u) {
    const auto [v, a] = best_impulse(model_, w, actions_, post_flow_states_[u], lo, hi, W);
    impulse_value[u] = v;
    impulse_arg[u] = a;
  }

  std::vector<double> out(states_.size());
  if (argmin) argmin->assign(states_.size(), Choice{});
  for (std::size_t i = 0; i < states_.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_cell = cell_begin_[i + 1];  // sentinel: never()
    for (std::size_t c = cell_begin_[i]; c < cell_begin_[i + 1]; ++c) {
      double val = 0.0;
      for (std::size_t j = 0; j < n_costs; ++j) val += w[j] * gradual_[c * n_costs + j];
      val += survival_[c] * impulse_value[post_flow_[c]];
      if (val < best) {
        best = val;
        best_cell = c;
      }
    }
    double never_val = 0.0;
    for (std::size_t j = 0; j < n_costs; ++j) never_val += w[j] * gradual_never_[i * n_costs + j];
    if (never_val < best) {
      best = never_val;
      best_cell = cell_begin_[i + 1];
    }
    out[i] = best;
    if (argmin) {
      Choice& ch = (*argmin)[i];
      ch.value = best;
      if (best_cell == cell_begin_[i + 1]) {
        ch.b = {Theta::never(), actions_.front()};
      } else {
        ch.b = {Theta::after(theta_[best_cell]), impulse_arg[post_flow_[best_cell]]};
      }
    }
  }
  return out;
}

ValueTable value_iteration(const GridOperator& op, std::span<const double> g, double tol,
                           std::size_t max_iter) {
  if (!(tol > 0.0)) throw DomainError("value_iteration: tolerance must be positive");
  ValueTable table;
  table.grid = op.grid();
  table.interval = op.model().states;
  table.states = op.states();
  table.multipliers.assign(g.begin(), g.end());
  table.values.assign(op.states().size(), 0.0);

  double change = std::numeric_limits<double>::infinity();
  for (std::size_t it = 1; it <= max_iter; ++it) {
    auto next = op.apply(table.values, g);
    change = 0.0;
    for (std::size_t i = 0; i < next.size(); ++i) {
      change = std::max(change, std::abs(next[i] - table.values[i]));
    }
    table.values = std::move(next);
    table.iterations = it;
    table.residual = change;
    if (change < tol) return table;
  }
  throw ConvergenceError("value iteration did not converge in " + std::to_string(max_iter) +
                             " sweeps (last change " + std::to_string(change) + ")",
                         change);
}

ValueTable value_iteration(const ImpulseModel& model, std::span<const double> g,
                           const GridSpec& grid, double tol, std::size_t max_iter) {
  const GridOperator op(model, grid);
  return value_iteration(op, g, tol, max_iter);
}

ResidualReport bellman_residual(const ImpulseModel& model, std::span<const double> g,
                                const ValueTable& W) {
  GridSpec probe = W.grid;
  probe.n_theta = 2 * probe.n_theta - 1;
  probe.n_actions = probe.n_actions > 1 ? 2 * probe.n_actions - 1 : 1;
  ImpulseModel on_table = model;
  on_table.states = W.interval;
  const GridOperator op(std::move(on_table), probe);

  std::vector<GridOperator::Choice> choices;
  const auto tw = op.apply(W.values, g, &choices);
  ResidualReport out;
  for (std::size_t i = 0; i < tw.size(); ++i) {
    const double lhs = tw[i] - W.values[i];
    if (lhs < out.max_violation) {
      out.max_violation = lhs;
      out.x = W.states[i];
      out.b = choices[i].b;
    }
  }
  return out;
}

StationaryStrategy greedy_strategy(const ImpulseModel& model, std::span<const double> g,
                                   const ValueTable& W) {
  struct Shared {
    ImpulseModel model;
    std::vector<double> weights;
    ValueTable table;
    std::vector<double> actions;
    std::vector<double> uniform;
  };
  auto shared = std::make_shared<Shared>();
  shared->model = model;
  shared->weights = weights_of(model, g);
  shared->table = W;
  shared->actions = linspace(model.actions.lo, model.actions.hi, W.grid.n_actions);
  shared->uniform = linspace(0.0, W.grid.theta_max, W.grid.n_theta);

  StationaryStrategy f;
  f.description = "greedy on " + std::to_string(W.grid.n_states) + "-state grid";
  f.rule = [shared](double x) -> ImpulseAction {
    const Shared& s = *shared;
    const auto& m = s.model;
    const std::size_t n_costs = s.weights.size();
    double best = std::numeric_limits<double>::infinity();
    ImpulseAction best_b{Theta::never(), s.actions.front()};
    for (double theta : theta_candidates(m, s.uniform, s.table.grid.theta_max, x)) {
      const Theta th = Theta::after(theta);
      double val = 0.0;
      for (std::size_t j = 0; j < n_costs; ++j) {
        if (s.weights[j] != 0.0) val += s.weights[j] * gradual_cost(m, j, x, th);
      }
      const double y = m.flow(x, theta);
      check_state(m, y, "flow callable");
      // A zero wait that lands back on x would make the rule loop in zero time.
      const auto skip = theta == 0.0 ? std::optional<double>(x) : std::nullopt;
      const auto [imp, a] = best_impulse(m, s.weights, s.actions, y, s.table.interval.lo,
                                         s.table.interval.hi, s.table.values, skip);
      val += th.survival(m.alpha) * imp;
      if (val < best) {
        best = val;
        best_b = {th, a};
      }
    }
    double never_val = 0.0;
    for (std::size_t j = 0; j < n_costs; ++j) {
      if (s.weights[j] != 0.0) never_val += s.weights[j] * gradual_cost(m, j, x, Theta::never());
    }
    if (never_val < best) best_b = {Theta::never(), s.actions.front()};
    return best_b;
  };
  return f;
}

void write_value_table_csv(std::ostream& os, const ValueTable& table) {
  const auto old_precision = os.precision(15);
  os << "x,W\n";
  for (std::size_t i = 0; i < table.states.size(); ++i) {
    os << table.states[i] << ',' << table.values[i] << '\n';
  }
  os.precision(old_precision);
}

}  // namespace impulse
