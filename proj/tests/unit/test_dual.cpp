#include <gtest/gtest.h>

#include <cmath>

#include "impulse/dual.hpp"
#include "impulse/errors.hpp"
#include "impulse/inventory.hpp"
#include "impulse/rollout.hpp"

using namespace impulse;
namespace inv = impulse::inventory;

namespace {
const inv::InventoryParams kP0{};

CostVector costs(double v0, double v1) { return CostVector{{v0, v1}, 0.0}; }
}  // namespace

TEST(Lagrangian, Arithmetic) {
  const double g[] = {0.4};
  const double d[] = {0.5};
  EXPECT_DOUBLE_EQ(lagrangian_value(costs(1.0, 0.0), g, d), 0.8);
  const double zero[] = {0.0};
  EXPECT_EQ(lagrangian_value(costs(0.7, 3.0), zero, d), 0.7);
  for (double gg : {0.0, 0.3, 7.0}) {
    const double w[] = {gg};
    EXPECT_DOUBLE_EQ(lagrangian_value(costs(0.7, 0.5), w, d), 0.7);
  }
  const double neg[] = {-1.0};
  EXPECT_THROW(lagrangian_value(costs(1.0, 0.0), neg, d), DomainError);
}

TEST(Lagrangian, MultipleConstraints) {
  const CostVector c{{1.0, 0.2, 0.3}, 0.0};
  const double g[] = {1.0, 2.0};
  const double d[] = {0.1, 0.5};
  EXPECT_DOUBLE_EQ(lagrangian_value(c, g, d), 1.0 + 0.1 - 0.4);
}

TEST(DualFunctional, ClosedFormValues) {
  const auto e = make_closed_form_engine(kP0);
  EXPECT_NEAR(dual_functional(*e, 0.3, 0.5), 0.771123158346278, 1e-12);
  EXPECT_NEAR(dual_functional(*e, 1.0, 0.5), 0.5, 1e-14);
  auto k2 = kP0;
  k2.setup_cost = 2.0;
  EXPECT_NEAR(dual_functional(*make_closed_form_engine(k2), 0.0, 0.5), 1.0, 1e-15);
  EXPECT_THROW(dual_functional(*e, -0.1, 0.5), DomainError);
}

TEST(DualFunctional, ClosedFormNeedsInventory) {
  const auto m = inv::make_model(kP0);
  EXPECT_THROW(make_engine(m, EngineKind::closed_form), UnsupportedError);
  EXPECT_EQ(make_engine(m, EngineKind::closed_form, &kP0)->kind(), EngineKind::closed_form);
  EXPECT_EQ(make_engine(m, EngineKind::grid, nullptr, GridSpec{21, 21, 11, 0.0})->kind(),
            EngineKind::grid);
}

TEST(DualFunctional, ConcaveAndSlopes) {
  const auto e = make_closed_form_engine(kP0);
  const double d = 0.5;
  const double gc = inv::critical_g(kP0).g;
  auto h = [&](double g) { return dual_functional(*e, g, d); };
  for (double g1 = 0.05; g1 < 2.0; g1 += 0.1) {
    const double g2 = g1 + 0.07, g3 = g1 + 0.19;
    const double chord = h(g1) + (h(g3) - h(g1)) * (g2 - g1) / (g3 - g1);
    EXPECT_GE(h(g2), chord - 1e-8);
  }
  const double step = 1e-5;
  for (double g : {0.5, 1.0, 3.0}) {
    EXPECT_NEAR((h(g + step) - h(g - step)) / (2 * step), -d, 1e-6);
  }
  auto p = kP0;
  p.holding_limit = d;
  for (double g : {0.05, 0.2, 0.35}) {
    ASSERT_LT(g + step, gc);
    EXPECT_NEAR((h(g + step) - h(g - step)) / (2 * step), inv::dual_slope_below_critical(p, g),
                1e-6);
  }
}

TEST(MaximizeDual, DelayedRegime) {
  const auto e = make_closed_form_engine(kP0);
  const auto r = maximize_dual(*e, 0.5);
  const double gc = inv::critical_g(kP0).g;
  ASSERT_EQ(r.g_star.size(), 1u);
  EXPECT_NEAR(r.g_star[0], gc, 1e-6);
  ASSERT_TRUE(r.analytic_g_star.has_value());
  EXPECT_NEAR(*r.analytic_g_star, gc, 1e-15);
  EXPECT_NEAR(r.primal_costs[1], 0.5, 1e-6);
  EXPECT_NEAR(r.primal_costs[0], 1.0 - gc * 0.5, 1e-6);
  EXPECT_LE(std::abs(r.gap), 1e-5);
  EXPECT_TRUE(r.feasible);
  EXPECT_TRUE(verify_certificate(r, 1e-5).pass);
  EXPECT_EQ(r.cert_tol, 1e-5);
}

TEST(MaximizeDual, ImmediateRegime) {
  const auto e = make_closed_form_engine(kP0);
  const auto r = maximize_dual(*e, 1.0);
  EXPECT_NEAR(r.g_star[0], 0.214783148265180, 1e-6);
  EXPECT_LE(std::abs(r.slackness), 1e-5);
  EXPECT_LE(std::abs(r.gap), 1e-5);
  EXPECT_TRUE(verify_certificate(r, 1e-5).pass);
}

TEST(MaximizeDual, NeverOrderModel) {
  auto k2 = kP0;
  k2.setup_cost = 2.0;
  const auto r = maximize_dual(*make_closed_form_engine(k2), 0.5);
  EXPECT_EQ(r.g_star[0], 0.0);
  EXPECT_NEAR(r.h_star, 1.0, 1e-15);
  EXPECT_TRUE(verify_certificate(r, 1e-5).pass);
}

TEST(MaximizeDual, CostlessModelOnGrid) {
  auto m = inv::make_model(kP0);
  m.gradual_costs = {[](double) { return 0.0; }, [](double) { return 0.0; }};
  m.lump_costs = {[](double, double) { return 0.0; }, [](double, double) { return 0.0; }};
  m.gradual_closed_form = nullptr;
  m.gradual_cost_bound = m.lump_cost_bound = 0.0;
  const auto e = make_grid_engine(m, GridSpec{11, 11, 5, 0.0});
  const auto r = maximize_dual(*e, 0.5);
  EXPECT_EQ(r.g_star[0], 0.0);
  EXPECT_EQ(r.h_star, 0.0);
  EXPECT_EQ(r.primal_costs[0], 0.0);
  EXPECT_TRUE(verify_certificate(r, 1e-9).pass);
}

TEST(MaximizeDual, RejectsBadInput) {
  const auto e = make_closed_form_engine(kP0);
  EXPECT_THROW(maximize_dual(*e, -0.1), InfeasibleError);

  ImpulseModel three = inv::make_model(kP0);
  three.gradual_costs.push_back([](double) { return 0.0; });
  three.lump_costs.push_back([](double, double) { return 0.0; });
  three.gradual_closed_form = nullptr;
  const auto g = make_grid_engine(three, GridSpec{11, 11, 5, 0.0});
  EXPECT_THROW(maximize_dual(*g, 0.5), UnsupportedError);
}

TEST(MaximizeDual, GridEngineNearClosedForm) {
  const auto m = inv::make_model(kP0);
  const auto e = make_grid_engine(m, GridSpec{201, 101, 101, 0.0});
  DualOptions o;
  o.search_tol = 1e-6;
  const auto r = maximize_dual(*e, 1.0, 0.0, o);
  EXPECT_NEAR(r.g_star[0], 0.214783148265180, 2e-2);
  EXPECT_NEAR(r.h_star, 0.627500487457988, 5e-3);
  EXPECT_EQ(r.cert_tol, 5e-3);
  EXPECT_FALSE(r.analytic_g_star.has_value());
}

TEST(Certificate, DetectsEachViolation) {
  const auto e = make_closed_form_engine(kP0);
  const auto good = maximize_dual(*e, 0.5);
  ASSERT_TRUE(verify_certificate(good, 1e-5).pass);

  auto over = good;
  over.primal_costs.values[1] = 0.6;
  const auto c1 = verify_certificate(over, 1e-5);
  EXPECT_FALSE(c1.pass);
  ASSERT_FALSE(c1.violations.empty());
  EXPECT_EQ(c1.violations.front().rfind("(i)", 0), 0u);

  auto gap = good;
  gap.h_star -= 0.01;
  const auto c2 = verify_certificate(gap, 1e-5);
  EXPECT_FALSE(c2.pass);
  EXPECT_EQ(c2.violations.front().rfind("(ii)", 0), 0u);

  auto slack = good;
  slack.primal_costs.values[1] = 0.4;
  slack.primal_costs.values[0] = slack.h_star;
  const auto c3 = verify_certificate(slack, 1e-5);
  EXPECT_FALSE(c3.pass);
  EXPECT_EQ(c3.violations.front().rfind("(iii)", 0), 0u);
}

TEST(Certificate, ZeroMultiplierSlackIsVacuous) {
  DualReport r;
  r.g_star = {0.0};
  r.d = {1.0};
  r.primal_costs = costs(0.3, 0.2);
  r.h_star = 0.3;
  EXPECT_TRUE(verify_certificate(r, 1e-9).pass);
  certify(r, 1e-9);
  EXPECT_TRUE(r.feasible);
  EXPECT_EQ(r.slackness, 0.0);
  EXPECT_EQ(r.gap, 0.0);
}

TEST(Certificate, IncompleteReportFails) {
  DualReport r;
  r.g_star = {0.1};
  EXPECT_FALSE(verify_certificate(r, 1e-5).pass);
}

TEST(WeakDuality, FeasibleStrategiesBoundTheDual) {
  const auto e = make_closed_form_engine(kP0);
  const auto m = e->model();
  const double d = 0.5;
  for (double tau : {0.3125, 0.5, 2.0}) {
    for (double a : {1.0, 1.25643120862617, 2.0}) {
      const auto v = evaluate(m, inv::cyclic_strategy(kP0, Theta::after(tau), a), State(0.0));
      if (v[1] > d) continue;
      for (double g : {0.0, 0.2, 0.398, 1.0}) {
        if (g == 0.0) continue;  // no closed form at g = 0 here
        const double w[] = {g};
        const double dd[] = {d};
        EXPECT_GE(lagrangian_value(v, w, dd), dual_functional(*e, g, d) - 1e-9);
      }
    }
  }
}
