#include "impulse/rollout.hpp"

#include <cmath>
#include <exception>
#include <iterator>
#include <map>
#include <ostream>
#include <random>
#include <thread>

#include "impulse/errors.hpp"

namespace impulse {
namespace {

constexpr std::size_t kMaxSteps = 10'000'000;

struct Visit {
  double discount;
  std::vector<double> cumulative;
};

// Nearest recorded state within kStateMatchTol, or end().
template <typename Map>
auto find_near(Map& seen, double x) {
  auto it = seen.lower_bound(x - kStateMatchTol);
  if (it != seen.end() && std::abs(it->first - x) <= kStateMatchTol) return it;
  return seen.end();
}

void check_progress(const ImpulseAction& b, double from, double to) {
  if (!b.theta.is_never() && b.theta.value() == 0.0 && std::abs(to - from) <= kStateMatchTol) {
    throw DivergenceError("strategy loops without discounting: zero wait with no state change at x=" +
                          std::to_string(from));
  }
}

}  // namespace

CostVector evaluate(const ImpulseModel& model, const StationaryStrategy& f, State x0, double tol) {
  if (!(tol > 0.0)) throw DomainError("evaluate: tolerance must be positive");
  const std::size_t n_costs = model.num_costs();
  CostVector out;
  out.values.assign(n_costs, 0.0);
  if (x0.is_cemetery()) return out;

  std::vector<double> cumulative(n_costs, 0.0);
  std::map<double, Visit> seen;
  double x = x0.value();
  double discount = 1.0;
  seen.emplace(x, Visit{discount, cumulative});

  for (std::size_t step = 0; step < kMaxSteps; ++step) {
    const ImpulseAction b = f(x);
    for (std::size_t j = 0; j < n_costs; ++j) {
      cumulative[j] += discount * one_step_cost(model, j, State(x), b);
    }
    if (b.theta.is_never()) {
      out.values = cumulative;
      return out;
    }
    const double next = advance(model, x, b);
    check_progress(b, x, next);
    discount *= b.theta.survival(model.alpha);

    if (auto it = find_near(seen, next); it != seen.end()) {
      const double ratio = discount / it->second.discount;
      if (!(ratio < 1.0 - 1e-15)) {
        throw DivergenceError("strategy loops without discounting: cycle through x=" +
                              std::to_string(next) + " takes zero time");
      }
      const double tail = ratio / (1.0 - ratio);
      for (std::size_t j = 0; j < n_costs; ++j) {
        cumulative[j] += (cumulative[j] - it->second.cumulative[j]) * tail;
      }
      out.values = cumulative;
      return out;
    }
    if (discount < tol) {
      out.values = cumulative;
      out.truncation_error = tol * static_cast<double>(n_costs) * model.cost_bound() / model.alpha;
      return out;
    }
    seen.emplace(next, Visit{discount, cumulative});
    x = next;
  }
  throw ConvergenceError("evaluate: orbit neither closed nor discounted below tolerance", discount);
}

MonteCarloEstimate evaluate_monte_carlo(const ImpulseModel& model, const StationaryStrategy& f,
                                        State x0, std::size_t n_paths, std::uint64_t seed,
                                        unsigned threads) {
  if (n_paths == 0) throw DomainError("evaluate_monte_carlo: need at least one path");
  const std::size_t n_costs = model.num_costs();
  MonteCarloEstimate out;
  out.paths = n_paths;
  out.mean.assign(n_costs, 0.0);
  out.std_error.assign(n_costs, 0.0);
  if (x0.is_cemetery()) return out;

  std::vector<double> totals(n_paths * n_costs, 0.0);

  auto run_path = [&](std::size_t path) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(path), static_cast<std::uint32_t>(path >> 32)};
    std::mt19937_64 rng(seq);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    double* acc = totals.data() + path * n_costs;
    double x = x0.value();
    for (std::size_t step = 0; step < kMaxSteps; ++step) {
      const ImpulseAction b = f(x);
      for (std::size_t j = 0; j < n_costs; ++j) acc[j] += one_step_cost(model, j, State(x), b);
      if (b.theta.is_never()) return;
      if (unif(rng) >= b.theta.survival(model.alpha)) return;  // killed
      const double next = advance(model, x, b);
      check_progress(b, x, next);
      x = next;
    }
    throw ConvergenceError("Monte Carlo path survived too many steps", 0.0);
  };

  unsigned workers = threads == 0 ? std::thread::hardware_concurrency() : threads;
  if (workers == 0) workers = 1;
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, n_paths));

  if (workers == 1) {
    for (std::size_t p = 0; p < n_paths; ++p) run_path(p);
  } else {
    std::vector<std::exception_ptr> errors(workers);
    {
      std::vector<std::jthread> pool;
      pool.reserve(workers);
      for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
          try {
            for (std::size_t p = w; p < n_paths; p += workers) run_path(p);
          } catch (...) {
            errors[w] = std::current_exception();
          }
        });
      }
    }
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  // Reduction in path order keeps the floating-point result independent of scheduling.
  const double n = static_cast<double>(n_paths);
  for (std::size_t j = 0; j < n_costs; ++j) {
    double sum = 0.0;
    for (std::size_t p = 0; p < n_paths; ++p) sum += totals[p * n_costs + j];
    const double mean = sum / n;
    double sq = 0.0;
    for (std::size_t p = 0; p < n_paths; ++p) {
      const double dev = totals[p * n_costs + j] - mean;
      sq += dev * dev;
    }
    out.mean[j] = mean;
    out.std_error[j] = n_paths > 1 ? std::sqrt(sq / (n - 1.0) / n) : 0.0;
  }
  return out;
}

std::vector<TrajectoryEvent> trajectory(const ImpulseModel& model, const StationaryStrategy& f,
                                        double x0, double horizon) {
  if (!(horizon > 0.0)) throw DomainError("trajectory: horizon must be positive");
  std::vector<TrajectoryEvent> events;
  double t = 0.0;
  double x = x0;
  for (std::size_t step = 0; step < kMaxSteps; ++step) {
    events.push_back({t, EventKind::wait_start, x, x, 0.0});
    const ImpulseAction b = f(x);
    if (b.theta.is_never()) return events;
    const double theta = b.theta.value();
    if (t + theta > horizon) return events;
    const double drifted = model.flow(x, theta);
    const double next = advance(model, x, b);
    check_progress(b, x, next);
    t += theta;
    events.push_back({t, EventKind::impulse, drifted, next, b.order});
    x = next;
  }
  throw ConvergenceError("trajectory: too many events before the horizon", t);
}

const char* to_string(EventKind kind) noexcept {
  return kind == EventKind::impulse ? "impulse" : "wait-start";
}

void write_trajectory_csv(std::ostream& os, std::span<const TrajectoryEvent> events) {
  const auto old_precision = os.precision(15);
  os << "t,kind,x_before,x_after,order\n";
  for (const auto& e : events) {
    os << e.t << ',' << to_string(e.kind) << ',' << e.x_before << ',' << e.x_after << ','
       << e.order << '\n';
  }
  os.precision(old_precision);
}

}  // namespace impulse
