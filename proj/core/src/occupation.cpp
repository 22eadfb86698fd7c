#include "impulse/occupation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>

#include "impulse/errors.hpp"

namespace impulse {
namespace {

constexpr std::size_t kMaxAtoms = 10'000'000;

struct Seen {
  std::size_t atom_index;
  double discount;
};

}  // namespace

double AtomicOccupationMeasure::total_mass() const noexcept {
  double m = 0.0;
  for (const auto& a : atoms) m += a.weight;
  return m;
}

AtomicOccupationMeasure occupation_of(const ImpulseModel& model, const StationaryStrategy& f,
                                      State x0, double tol) {
  AtomicOccupationMeasure mu;
  if (x0.is_cemetery()) return mu;

  std::map<double, Seen> seen;
  double x = x0.value();
  double discount = 1.0;
  seen.emplace(x, Seen{0, discount});

  while (mu.atoms.size() < kMaxAtoms) {
    const ImpulseAction b = f(x);
    mu.atoms.push_back({x, b, discount});
    if (b.theta.is_never()) return mu;

    const double next = advance(model, x, b);
    if (b.theta.value() == 0.0 && std::abs(next - x) <= kStateMatchTol) {
      throw DivergenceError("occupation_of: strategy loops without discounting");
    }
    discount *= b.theta.survival(model.alpha);

    auto it = seen.lower_bound(next - kStateMatchTol);
    if (it != seen.end() && std::abs(it->first - next) <= kStateMatchTol) {
      const double ratio = discount / it->second.discount;
      if (!(ratio < 1.0 - 1e-15)) {
        throw DivergenceError("occupation_of: cycle takes zero time");
      }
      for (std::size_t i = it->second.atom_index; i < mu.atoms.size(); ++i) {
        mu.atoms[i].weight /= (1.0 - ratio);
      }
      mu.closed = true;
      return mu;
    }
    if (discount < tol) {
      mu.truncated = true;
      mu.truncated_mass = discount;
      return mu;
    }
    seen.emplace(next, Seen{mu.atoms.size(), discount});
    x = next;
  }
  throw ConvergenceError("occupation_of: too many atoms", discount);
}

double characteristic_residual(const ImpulseModel& model, const AtomicOccupationMeasure& mu,
                               State x0) {
  // Signed point masses: + for the left-hand side, - for the right-hand side.
  std::vector<std::pair<double, double>> masses;
  masses.reserve(2 * mu.atoms.size() + 1);
  if (!x0.is_cemetery()) masses.emplace_back(x0.value(), -1.0);
  for (const auto& atom : mu.atoms) {
    masses.emplace_back(atom.x, atom.weight);
    const TransitionOutcome q = transition(model, State(atom.x), atom.b);
    if (!q.next.is_cemetery() && q.survive_prob > 0.0) {
      masses.emplace_back(q.next.value(), -atom.weight * q.survive_prob);
    }
  }
  std::sort(masses.begin(), masses.end());

  double residual = 0.0;
  std::size_t i = 0;
  while (i < masses.size()) {
    double net = 0.0;
    double anchor = masses[i].first;
    while (i < masses.size() && masses[i].first - anchor <= kStateMatchTol) {
      net += masses[i].second;
      anchor = masses[i].first;
      ++i;
    }
    residual += std::abs(net);
  }
  return residual;
}

CostVector cost_integrals(const ImpulseModel& model, const AtomicOccupationMeasure& mu) {
  CostVector out;
  out.values.assign(model.num_costs(), 0.0);
  for (const auto& atom : mu.atoms) {
    for (std::size_t j = 0; j < model.num_costs(); ++j) {
      out.values[j] += atom.weight * one_step_cost(model, j, State(atom.x), atom.b);
    }
  }
  return out;
}

void write_measure_csv(std::ostream& os, const AtomicOccupationMeasure& mu) {
  const auto old_precision = os.precision(15);
  os << "x,theta,a,weight\n";
  for (const auto& atom : mu.atoms) {
    os << atom.x << ',';
    if (atom.b.theta.is_never()) {
      os << "inf";
    } else {
      os << atom.b.theta.value();
    }
    os << ',' << atom.b.order << ',' << atom.weight << '\n';
  }
  os.precision(old_precision);
}

}  // namespace impulse
