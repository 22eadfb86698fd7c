#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "impulse/model.hpp"
#include "impulse/rollout.hpp"

namespace impulse {

/// Discretization of the action space [0, inf] x A and of the state interval.
/// Every state gets the uniform waiting times on [0, theta_max], its own
/// model-declared kink times, and never().
struct GridSpec {
  std::size_t n_states = 401;
  std::size_t n_theta = 201;
  std::size_t n_actions = 101;
  double theta_max = 0.0;  // 0 selects 10/alpha + traversal time

  /// Copy with theta_max filled in; throws DomainError on invalid sizes.
  GridSpec resolved(const ImpulseModel& model) const;
};

/// Weighted Bellman function on the state grid for the given multipliers.
struct ValueTable {
  GridSpec grid;
  Interval interval;
  std::vector<double> states;
  std::vector<double> values;
  std::vector<double> multipliers;
  std::size_t iterations = 0;
  double residual = 0.0;

  /// Linear interpolation between grid nodes.
  double value_at(double x) const;
};

/// The one-step minimization operator
///   (T W)(x) = min_b [ C0(x,b) + sum_j g_j Cj(x,b) + e^{-alpha theta} W(next) ]
/// over the gridded actions. Gradual-cost integrals and post-flow states are
/// computed once at construction, so the operator can be reused for any
/// multiplier vector.
class GridOperator {
 public:
  GridOperator(ImpulseModel model, const GridSpec& grid);

  struct Choice {
    ImpulseAction b;
    double value = 0.0;
  };

  /// T W at every grid node. Ties resolve to the smallest theta, then the
  /// smallest impulse. When `argmin` is given it receives the minimizers.
  std::vector<double> apply(std::span<const double> W, std::span<const double> g,
                            std::vector<Choice>* argmin = nullptr) const;

  const ImpulseModel& model() const noexcept { return model_; }
  const GridSpec& grid() const noexcept { return grid_; }
  const std::vector<double>& states() const noexcept { return states_; }
  const std::vector<double>& actions() const noexcept { return actions_; }
  std::size_t num_cells() const noexcept { return theta_.size(); }

 private:
  ImpulseModel model_;
  GridSpec grid_;
  std::vector<double> states_;
  std::vector<double> actions_;

  // Finite-theta cells, grouped by state (cell_begin_[i] .. cell_begin_[i+1]).
  std::vector<std::size_t> cell_begin_;
  std::vector<double> theta_;
  std::vector<double> survival_;
  std::vector<std::size_t> post_flow_;      // index into post_flow_states_
  std::vector<double> gradual_;             // cell * n_costs + j
  std::vector<double> gradual_never_;       // state * n_costs + j
  std::vector<double> post_flow_states_;    // distinct flow(x_i, theta)
};

ValueTable value_iteration(const GridOperator& op, std::span<const double> g, double tol,
                           std::size_t max_iter);

/// Value iteration from W = 0 until the sup-norm change drops below tol.
/// Throws ConvergenceError after max_iter sweeps.
ValueTable value_iteration(const ImpulseModel& model, std::span<const double> g,
                           const GridSpec& grid, double tol = 1e-9, std::size_t max_iter = 10000);

struct ResidualReport {
  double max_violation = 0.0;  // most negative left-hand side, 0 when feasible
  double x = 0.0;
  ImpulseAction b;
};

/// Dual-feasibility check C0 + sum g_j Cj + int W dQ - W >= 0 at the table's
/// nodes, probing waiting times and impulses at twice the table's density.
ResidualReport bellman_residual(const ImpulseModel& model, std::span<const double> g,
                                const ValueTable& W);

/// x -> argmin over the gridded actions of the Bellman bracket, with W
/// interpolated from the table. Ties: smallest theta, then smallest impulse.
StationaryStrategy greedy_strategy(const ImpulseModel& model, std::span<const double> g,
                                   const ValueTable& W);

/// CSV with header x,W.
void write_value_table_csv(std::ostream& os, const ValueTable& table);

}  // namespace impulse
