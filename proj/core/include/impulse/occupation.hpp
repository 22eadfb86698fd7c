#pragma once

#include <iosfwd>
#include <vector>

#include "impulse/model.hpp"
#include "impulse/rollout.hpp"

namespace impulse {

struct Atom {
  double x = 0.0;
  ImpulseAction b;
  double weight = 0.0;
};

/// Purely atomic occupation measure of a deterministic stationary strategy.
/// When the orbit is cyclic, the atoms of the cycle carry the whole geometric
/// tail (`closed`). A non-cyclic orbit is cut once the discount falls below
/// the tolerance; `truncated_mass` is then the weight the next atom would get.
struct AtomicOccupationMeasure {
  std::vector<Atom> atoms;
  bool closed = false;
  bool truncated = false;
  double truncated_mass = 0.0;

  double total_mass() const noexcept;
};

AtomicOccupationMeasure occupation_of(const ImpulseModel& model, const StationaryStrategy& f,
                                      State x0, double tol = 1e-10);

/// Total-variation distance between the two sides of the characteristic
/// equation mu(G x B) = delta_x0(G) + int Q(G | y, b) mu(dy x db), restricted
/// to the state interval.
double characteristic_residual(const ImpulseModel& model, const AtomicOccupationMeasure& mu,
                               State x0);

/// Integrals of the one-step costs against the measure.
CostVector cost_integrals(const ImpulseModel& model, const AtomicOccupationMeasure& mu);

/// CSV with header x,theta,a,weight; never() is written as "inf".
void write_measure_csv(std::ostream& os, const AtomicOccupationMeasure& mu);

}  // namespace impulse
