#include <benchmark/benchmark.h>

#include <random>

#include "oblique/discretize.hpp"
#include "oblique/envelope.hpp"
#include "oblique/solve.hpp"

using namespace oblique;

namespace {

DiscreteProblem pucci_problem(double h) {
  SchemeOptions o;
  o.h = h;
  ObliqueField obl{[](Vec2) { return Vec2{0.3, 0.9}; }, [](Vec2) { return -0.2; }, [](Vec2) { return 0.1; }, 0.9};
  return DiscreteProblem(ProblemData{make_half_disk(1.0), OperatorSpec::pucci_plus(Ellipticity(1, 2)),
                                     [](Vec2) { return -1.0; }, obl, [](Vec2 x) { return x.x * x.x; }},
                         o);
}

}  // namespace

static void BM_FullResidual(benchmark::State& state) {
  const auto p = pucci_problem(1.0 / state.range(0));
  const auto u = GridField::sample(p.grid(), [](Vec2 x) { return x.x * x.y + x.y * x.y; });
  for (auto _ : state) benchmark::DoNotOptimize(full_residual(p, u));
  state.SetItemsProcessed(state.iterations() * std::int64_t(p.grid()->size()));
}
BENCHMARK(BM_FullResidual)->Arg(32)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

static void BM_ConvexEnvelope(benchmark::State& state) {
  const auto grid = build_grid(make_half_disk(1.0), 1.0 / state.range(0));
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> noise(-0.01, 0.01);
  GridField u(grid);
  for (std::size_t k = 0; k < grid->size(); ++k) {
    const Vec2 x = grid->node(k).pos;
    u[k] = std::sin(3 * x.x) * x.y + noise(rng);
  }
  const NodeMask mask = active_mask(*grid);
  for (auto _ : state) benchmark::DoNotOptimize(convex_envelope(u, mask));
}
BENCHMARK(BM_ConvexEnvelope)->Arg(16)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

static void BM_PolicySolve(benchmark::State& state) {
  const auto p = pucci_problem(1.0 / state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(solve(p, SolveMethod::kPolicyIteration));
}
BENCHMARK(BM_PolicySolve)->Arg(16)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
