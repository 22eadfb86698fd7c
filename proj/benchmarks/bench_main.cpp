#include <benchmark/benchmark.h>

#include "impulse/bellman_grid.hpp"
#include "impulse/dual.hpp"
#include "impulse/inventory.hpp"
#include "impulse/rollout.hpp"

namespace inv = impulse::inventory;

static void BM_SolveAg(benchmark::State& state) {
  const inv::InventoryParams p;
  double g = 0.3;
  for (auto _ : state) {
    benchmark::DoNotOptimize(inv::solve_a_g(p, g));
    g = g < 10.0 ? g * 1.01 : 0.3;
  }
}
BENCHMARK(BM_SolveAg);

static void BM_CriticalG(benchmark::State& state) {
  const inv::InventoryParams p;
  for (auto _ : state) benchmark::DoNotOptimize(inv::critical_g(p));
}
BENCHMARK(BM_CriticalG);

static void BM_EvaluateCyclic(benchmark::State& state) {
  const inv::InventoryParams p;
  const auto model = inv::make_model(p);
  const auto f = inv::strategy_of(p, inv::solve_constrained(p));
  for (auto _ : state) benchmark::DoNotOptimize(impulse::evaluate(model, f, impulse::State(0.0)));
}
BENCHMARK(BM_EvaluateCyclic);

static void BM_ValueIteration(benchmark::State& state) {
  const inv::InventoryParams p;
  const auto model = inv::make_model(p);
  const auto n = static_cast<std::size_t>(state.range(0));
  const impulse::GridSpec spec{n, n / 2 + 1, n / 4 + 1, 0.0};
  const double g[] = {0.3};
  for (auto _ : state) benchmark::DoNotOptimize(impulse::value_iteration(model, g, spec));
}
BENCHMARK(BM_ValueIteration)->Arg(101)->Arg(201)->Arg(401)->Unit(benchmark::kMillisecond);

static void BM_MaximizeDualClosedForm(benchmark::State& state) {
  const inv::InventoryParams p;
  const auto engine = impulse::make_closed_form_engine(p);
  for (auto _ : state) benchmark::DoNotOptimize(impulse::maximize_dual(*engine, 0.5));
}
BENCHMARK(BM_MaximizeDualClosedForm)->Unit(benchmark::kMicrosecond);
BENCHMARK_MAIN();
