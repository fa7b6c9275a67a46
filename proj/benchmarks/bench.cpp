#include <benchmark/benchmark.h>

#include "impulse_qvi/qvi.hpp"
#include "impulse_qvi/simulate.hpp"

using namespace impulse_qvi;

namespace {

LevyQuadrature reference_quad(const ProblemSpec& spec) {
  QuadratureOptions o;
  o.profile_gamma = 1.6;
  o.breakpoints = {0.05, 0.1, 0.2, 0.25};
  return build_quadrature(spec.levy, 1.0, 64, o);
}

void BM_AssembleA(benchmark::State& state) {
  ProblemSpec spec = reference_problem();
  LevyQuadrature q = reference_quad(spec);
  Grid1D g = Grid1D::make(-10.0, 10.0, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    OperatorMatrix op = assemble_A(spec, g, q, JumpTreatment::full(), 0.0, 0.0);
    benchmark::DoNotOptimize(op.A.data());
  }
}
BENCHMARK(BM_AssembleA)->Arg(201)->Arg(401)->Arg(801)->Unit(benchmark::kMillisecond);

void BM_SolveQvi(benchmark::State& state) {
  ProblemSpec spec = reference_problem();
  LevyQuadrature q = reference_quad(spec);
  Grid1D g = Grid1D::make(-10.0, 10.0, static_cast<std::size_t>(state.range(0)));
  SolveConfig cfg;
  cfg.slope_cap = 2.0 / 3.0;
  for (auto _ : state) {
    QviSolution s = solve_qvi(spec, g, q, cfg);
    benchmark::DoNotOptimize(s.u.values.data());
  }
}
BENCHMARK(BM_SolveQvi)->Arg(201)->Arg(401)->Unit(benchmark::kMillisecond);

void BM_SimulatePaths(benchmark::State& state) {
  ProblemSpec spec = reference_problem();
  LevyQuadrature q = reference_quad(spec);
  SimConfig cfg;
  cfg.horizon = 1.0;
  cfg.dt = 1e-3;
  cfg.paths = static_cast<std::size_t>(state.range(0));
  cfg.delta_sim = 0.25;
  cfg.mode = CompensationMode::diffusion_surrogate;
  for (auto _ : state) {
    PathEnsemble e = simulate_paths(spec, q, cfg, nullptr, 0.0);
    benchmark::DoNotOptimize(e.terminal.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0) * 1000);
}
BENCHMARK(BM_SimulatePaths)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
