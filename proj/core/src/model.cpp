#include "impulse/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "impulse/errors.hpp"
#include "impulse/numerics.hpp"

namespace impulse {
namespace {

constexpr double kQuadratureTol = 1e-10;
constexpr double kTailCutoff = 1e-12;

std::string fmt_num(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

void require_state(const ImpulseModel& model, double x, const char* who) {
  if (!model.states.contains(x)) {
    throw DomainError(std::string(who) + " produced state " + fmt_num(x) + " outside [" +
                      fmt_num(model.states.lo) + ", " + fmt_num(model.states.hi) + "] in model '" +
                      model.name + "'");
  }
}

void require_cost_index(const ImpulseModel& model, std::size_t j) {
  if (j >= model.num_costs()) {
    throw UsageError("cost index " + std::to_string(j) + " out of range; model has " +
                     std::to_string(model.num_costs()) + " cost families");
  }
}

double gradual_quadrature(const ImpulseModel& model, std::size_t j, double x, Theta theta) {
  double horizon = 0.0;
  if (theta.is_never()) {
    if (model.gradual_cost_bound <= kTailCutoff) return 0.0;
    horizon = std::log(model.gradual_cost_bound / kTailCutoff) / model.alpha;
  } else {
    horizon = theta.value();
  }
  if (horizon <= 0.0) return 0.0;

  std::vector<double> cuts{0.0};
  if (model.kink_times) {
    for (double k : model.kink_times(x)) {
      if (k > 0.0 && k < horizon) cuts.push_back(k);
    }
  }
  cuts.push_back(horizon);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  const auto& rate = model.gradual_costs[j];
  const double alpha = model.alpha;
  auto integrand = [&](double t) { return std::exp(-alpha * t) * rate(model.flow(x, t)); };

  const double piece_tol = kQuadratureTol / static_cast<double>(cuts.size() - 1);
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const auto r = numerics::adaptive_simpson(integrand, cuts[i], cuts[i + 1], piece_tol);
    if (!r.converged && r.error_estimate > piece_tol) {
      throw NumericError("quadrature of gradual cost " + std::to_string(j) + " at x=" +
                             fmt_num(x) + " did not reach tolerance " + fmt_num(piece_tol) +
                             " (achieved " + fmt_num(r.error_estimate) + ")",
                         r.error_estimate);
    }
    total += r.value;
  }
  return total;
}

}  // namespace

Theta Theta::after(double t) {
  if (!(t >= 0.0) || !std::isfinite(t)) {
    throw DomainError("waiting time must be finite and non-negative, got " + fmt_num(t) +
                      " (use Theta::never() for no further impulses)");
  }
  Theta out;
  out.t_ = t;
  return out;
}

double Theta::value() const {
  if (never_) throw UsageError("Theta::never() has no finite value");
  return t_;
}

double Theta::survival(double alpha) const noexcept {
  return never_ ? 0.0 : std::exp(-alpha * t_);
}

double State::value() const {
  if (cemetery_) throw UsageError("the cemetery state has no coordinate");
  return x_;
}

bool Interval::contains(double x) const noexcept {
  const double slack = 1e-12 * (1.0 + std::max(std::abs(lo), std::abs(hi)));
  return x >= lo - slack && x <= hi + slack;
}

void ImpulseModel::validate() const {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw DomainError("discount alpha must be positive");
  if (!(states.hi >= states.lo)) throw DomainError("state interval is empty");
  if (!(actions.hi >= actions.lo)) throw DomainError("action interval is empty");
  if (!flow) throw DomainError("model has no flow");
  if (!jump) throw DomainError("model has no jump map");
  if (gradual_costs.empty()) throw DomainError("model needs at least the objective cost");
  if (gradual_costs.size() != lump_costs.size()) {
    throw DomainError("gradual and lump cost families differ in size");
  }
  for (std::size_t j = 0; j < gradual_costs.size(); ++j) {
    if (!gradual_costs[j] || !lump_costs[j]) {
      throw DomainError("cost family " + std::to_string(j) + " is missing a callable");
    }
  }
  if (!(gradual_cost_bound >= 0.0) || !(lump_cost_bound >= 0.0)) {
    throw DomainError("cost bounds must be non-negative");
  }
}

double advance(const ImpulseModel& model, double x, const ImpulseAction& b) {
  if (b.theta.is_never()) {
    throw UsageError("no post-jump state exists after never-intervene");
  }
  require_state(model, x, "caller");
  if (!model.actions.contains(b.order)) {
    throw DomainError("impulse " + fmt_num(b.order) + " outside the action interval");
  }
  const double drifted = model.flow(x, b.theta.value());
  require_state(model, drifted, "flow callable");
  const double jumped = model.jump(drifted, b.order);
  require_state(model, jumped, "jump callable");
  return jumped;
}

double gradual_cost(const ImpulseModel& model, std::size_t j, double x, Theta theta,
                    CostRoute route) {
  require_cost_index(model, j);
  if (route == CostRoute::automatic && model.gradual_closed_form) {
    return model.gradual_closed_form(j, x, theta);
  }
  return gradual_quadrature(model, j, x, theta);
}

double one_step_cost(const ImpulseModel& model, std::size_t j, State x, const ImpulseAction& b,
                     CostRoute route) {
  require_cost_index(model, j);
  if (x.is_cemetery()) return 0.0;
  const double xv = x.value();
  double cost = gradual_cost(model, j, xv, b.theta, route);
  if (!b.theta.is_never()) {
    const double drifted = model.flow(xv, b.theta.value());
    require_state(model, drifted, "flow callable");
    const double lump = model.lump_costs[j](drifted, b.order);
    if (lump < 0.0) {
      throw DomainError("lump cost " + std::to_string(j) + " is negative at x=" + fmt_num(drifted));
    }
    cost += b.theta.survival(model.alpha) * lump;
  }
  return cost;
}

TransitionOutcome transition(const ImpulseModel& model, State x, const ImpulseAction& b) {
  if (x.is_cemetery() || b.theta.is_never()) return {};
  const double survive = b.theta.survival(model.alpha);
  return {survive, State(advance(model, x.value(), b)), 1.0 - survive};
}

ModelCheck spot_check(const ImpulseModel& model, std::size_t samples, std::uint64_t seed) {
  model.validate();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> xs(model.states.lo, model.states.hi);
  std::uniform_real_distribution<double> as(model.actions.lo, model.actions.hi);
  const double span = model.traversal_time > 0.0 ? model.traversal_time : 10.0 / model.alpha;
  std::uniform_real_distribution<double> ts(0.0, span);

  ModelCheck out;
  for (std::size_t i = 0; i < samples; ++i) {
    const double x = xs(rng);
    const double s = ts(rng);
    const double t = ts(rng);
    const double a = as(rng);
    out.max_identity_error = std::max(out.max_identity_error, std::abs(model.flow(x, 0.0) - x));
    const double two_step = model.flow(model.flow(x, s), t);
    out.max_semigroup_error =
        std::max(out.max_semigroup_error, std::abs(two_step - model.flow(x, s + t)));
    if (!model.states.contains(model.jump(x, a))) out.jumps_in_range = false;
    for (std::size_t j = 0; j < model.num_costs(); ++j) {
      if (model.gradual_costs[j](x) < 0.0 || model.lump_costs[j](x, a) < 0.0) {
        out.costs_nonnegative = false;
      }
    }
  }
  return out;
}

}  // namespace impulse
