#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace impulse {

/// Waiting time before the next impulse. `never()` is the point at infinity:
/// the controller stops intervening and the process is absorbed.
class Theta {
 public:
  constexpr Theta() noexcept = default;

  static constexpr Theta never() noexcept {
    Theta t;
    t.never_ = true;
    return t;
  }
  static Theta after(double t);

  constexpr bool is_never() const noexcept { return never_; }
  /// Finite waiting time; throws UsageError for never().
  double value() const;
  /// e^{-alpha theta}; exactly 0 for never().
  double survival(double alpha) const noexcept;

  friend bool operator==(const Theta&, const Theta&) = default;

 private:
  double t_ = 0.0;
  bool never_ = false;
};

/// Decision b = (theta, a): wait theta, then jump with impulse a.
struct ImpulseAction {
  Theta theta;
  double order = 0.0;
};

/// A point of the state interval or the absorbing cemetery.
class State {
 public:
  constexpr State() noexcept = default;
  constexpr explicit State(double x) noexcept : x_(x) {}

  static constexpr State cemetery() noexcept {
    State s;
    s.cemetery_ = true;
    return s;
  }

  constexpr bool is_cemetery() const noexcept { return cemetery_; }
  /// Real coordinate; throws UsageError for the cemetery.
  double value() const;

 private:
  double x_ = 0.0;
  bool cemetery_ = false;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double x) const noexcept;
  double width() const noexcept { return hi - lo; }
};

/// Deterministic impulse-control problem with J constraints. Index 0 of the
/// cost families is the objective, indices 1..J are the constrained costs.
struct ImpulseModel {
  Interval states;
  Interval actions;
  double alpha = 1.0;

  std::function<double(double x, double t)> flow;
  std::function<double(double x, double a)> jump;
  std::vector<std::function<double(double x)>> gradual_costs;
  std::vector<std::function<double(double x, double a)>> lump_costs;

  // Upper bounds over all j of sup C^g_j and sup C^I_j.
  double gradual_cost_bound = 0.0;
  double lump_cost_bound = 0.0;

  // Optional. Times in (0, inf) where t -> C^g_j(flow(x, t)) may be
  // non-smooth; quadrature splits there and the theta grid includes them.
  std::function<std::vector<double>(double x)> kink_times;

  // Optional. Exact value of int_0^theta e^{-alpha t} C^g_j(flow(x, t)) dt.
  std::function<double(std::size_t j, double x, Theta theta)> gradual_closed_form;

  // Time scale over which the flow crosses the state interval (0 if none).
  double traversal_time = 0.0;

  std::string name = "model";

  std::size_t num_costs() const noexcept { return gradual_costs.size(); }
  std::size_t num_constraints() const noexcept {
    return gradual_costs.empty() ? 0 : gradual_costs.size() - 1;
  }
  /// The constant max sup C^g + max sup C^I bounding every one-step cost rate.
  double cost_bound() const noexcept { return gradual_cost_bound + lump_cost_bound; }

  /// Structural checks; throws DomainError.
  void validate() const;
};

struct TransitionOutcome {
  double survive_prob = 0.0;
  State next = State::cemetery();
  double kill_prob = 1.0;
};

enum class CostRoute { automatic, quadrature };

/// l(flow(x, theta), a). Throws UsageError when theta is never() and
/// DomainError when a user callable leaves the state interval.
double advance(const ImpulseModel& model, double x, const ImpulseAction& b);

/// int_0^theta e^{-alpha t} C^g_j(flow(x, t)) dt.
double gradual_cost(const ImpulseModel& model, std::size_t j, double x, Theta theta,
                    CostRoute route = CostRoute::automatic);

/// One-step cost of the killed MDP; zero at the cemetery.
double one_step_cost(const ImpulseModel& model, std::size_t j, State x, const ImpulseAction& b,
                     CostRoute route = CostRoute::automatic);

/// Transition kernel: survive with e^{-alpha theta} to the post-jump state,
/// otherwise move to the cemetery.
TransitionOutcome transition(const ImpulseModel& model, State x, const ImpulseAction& b);

struct ModelCheck {
  double max_identity_error = 0.0;   // |flow(x,0) - x|
  double max_semigroup_error = 0.0;  // |flow(flow(x,s),t) - flow(x,s+t)|
  bool jumps_in_range = true;
  bool costs_nonnegative = true;

  bool ok(double tol = 1e-12) const noexcept {
    return max_identity_error <= tol && max_semigroup_error <= tol && jumps_in_range &&
           costs_nonnegative;
  }
};

/// Randomized spot checks of the flow identities, jump range and cost signs.
ModelCheck spot_check(const ImpulseModel& model, std::size_t samples, std::uint64_t seed);

}  // namespace impulse
