#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "impulse/bellman_grid.hpp"
#include "impulse/inventory.hpp"
#include "impulse/model.hpp"
#include "impulse/rollout.hpp"

namespace impulse {

/// V_0 + sum_j g_j (V_j - d_j).
double lagrangian_value(const CostVector& costs, std::span<const double> g,
                        std::span<const double> d);

enum class EngineKind { closed_form, grid };

const char* to_string(EngineKind kind) noexcept;

/// Source of W*_g and of a primal strategy for a single constraint.
class DualEngine {
 public:
  virtual ~DualEngine() = default;

  virtual EngineKind kind() const noexcept = 0;
  virtual const ImpulseModel& model() const noexcept = 0;

  /// W*_g(x0).
  virtual double bellman_value(double g, double x0) const = 0;

  /// Strategy used to certify the multiplier g against the level d from x0.
  virtual StationaryStrategy primal_strategy(double g, double d, double x0) const = 0;

  /// Known maximizer of h, when the engine has one.
  virtual std::optional<double> analytic_g_star(double /*d*/) const { return std::nullopt; }

  virtual double default_cert_tol() const noexcept = 0;
};

/// Inventory closed forms.
std::unique_ptr<DualEngine> make_closed_form_engine(const inventory::InventoryParams& p);

/// Value iteration on a grid; solved tables are cached per multiplier.
std::unique_ptr<DualEngine> make_grid_engine(const ImpulseModel& model, const GridSpec& grid = {},
                                             double vi_tol = 1e-9, std::size_t max_iter = 10000);

/// closed_form needs the inventory parameters; without them it throws UnsupportedError.
std::unique_ptr<DualEngine> make_engine(const ImpulseModel& model, EngineKind kind,
                                        const inventory::InventoryParams* params = nullptr,
                                        const GridSpec& grid = {});

/// h(g) = W*_g(x0) - g d.
double dual_functional(const DualEngine& engine, double g, double d, double x0 = 0.0);

struct DualOptions {
  double search_tol = 1e-10;
  std::optional<double> cert_tol;  // engine default when empty
  std::size_t max_expansions = 64;
};

struct DualReport {
  EngineKind engine = EngineKind::closed_form;
  double x0 = 0.0;
  std::vector<double> g_star;
  std::vector<double> d;
  double h_star = 0.0;
  CostVector primal_costs;
  double slackness = 0.0;  // sum_j g_j (V_j - d_j)
  double gap = 0.0;        // V_0 - h_star
  bool feasible = false;
  double cert_tol = 0.0;
  std::optional<double> analytic_g_star;
  std::string strategy;
  std::size_t evaluations = 0;
};

/// Golden-section maximization of h over [0, g_hi], with g_hi doubled from 1
/// until h stops increasing, followed by the certificate of the primal strategy.
DualReport maximize_dual(const DualEngine& engine, double d, double x0 = 0.0,
                         const DualOptions& options = {});

/// Recomputes slackness, gap and feasibility of a report from its primal costs.
void certify(DualReport& report, double tol);

struct CertificateCheck {
  bool pass = true;
  std::vector<std::string> violations;
};

/// (i) V_j <= d_j + tol, (ii) gap <= tol, (iii) |g_j (V_j - d_j)| <= tol.
CertificateCheck verify_certificate(const DualReport& report, double tol);

}  // namespace impulse
