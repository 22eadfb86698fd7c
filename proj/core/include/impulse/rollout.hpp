#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "impulse/model.hpp"

namespace impulse {

/// Deterministic stationary strategy x -> (theta(x), a(x)).
struct StationaryStrategy {
  std::function<ImpulseAction(double x)> rule;
  std::string description;

  ImpulseAction operator()(double x) const { return rule(x); }
};

/// (V_0, ..., V_J) together with an upper bound on what truncation dropped.
struct CostVector {
  std::vector<double> values;
  double truncation_error = 0.0;

  std::size_t size() const noexcept { return values.size(); }
  double operator[](std::size_t j) const { return values.at(j); }
};

/// Post-jump states closer than this are treated as the same state.
inline constexpr double kStateMatchTol = 1e-12;

/// Discounted costs of `f` from `x0` by direct summation. Cyclic orbits are
/// closed exactly with a geometric series; otherwise the sum stops once the
/// discount prefix drops below `tol`.
CostVector evaluate(const ImpulseModel& model, const StationaryStrategy& f, State x0,
                    double tol = 1e-10);

struct MonteCarloEstimate {
  std::vector<double> mean;
  std::vector<double> std_error;
  std::size_t paths = 0;
};

/// Simulates the killed chain: each step survives with e^{-alpha theta} and
/// accrues undiscounted one-step costs. Each path draws from its own stream
/// seeded by (seed, path index), so results do not depend on `threads`.
MonteCarloEstimate evaluate_monte_carlo(const ImpulseModel& model, const StationaryStrategy& f,
                                        State x0, std::size_t n_paths, std::uint64_t seed,
                                        unsigned threads = 0);

enum class EventKind { wait_start, impulse };

struct TrajectoryEvent {
  double t = 0.0;
  EventKind kind = EventKind::wait_start;
  double x_before = 0.0;
  double x_after = 0.0;
  double order = 0.0;
};

/// Unkilled timeline of waits and impulses with event times <= horizon.
std::vector<TrajectoryEvent> trajectory(const ImpulseModel& model, const StationaryStrategy& f,
                                        double x0, double horizon);

/// CSV with header t,kind,x_before,x_after,order.
void write_trajectory_csv(std::ostream& os, std::span<const TrajectoryEvent> events);

const char* to_string(EventKind kind) noexcept;

}  // namespace impulse
