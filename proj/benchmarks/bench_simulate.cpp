#include <benchmark/benchmark.h>

#include "pathind/ledger.hpp"
#include "pathind/rng.hpp"
#include "pathind/simulate.hpp"
#include "pathind/verify.hpp"

using namespace pathind;

static void BM_GaussianDraws(benchmark::State& state) {
  RandomStream rs = derive_stream(0, 0);
  for (auto _ : state) benchmark::DoNotOptimize(rs.gaussian());
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_GaussianDraws);

static void BM_SimulateHeat(benchmark::State& state) {
  const ModelSpec m = builtin("heat_kernel");
  const TimeGrid g{1.0, static_cast<int>(state.range(0))};
  std::uint64_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(simulate_diffusion(m, m.default_x0, g, 0, i++));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SimulateHeat)->Arg(64)->Arg(1024);

static void BM_JumpPathAndLedger(benchmark::State& state) {
  const ModelSpec m = builtin("manufactured_jump");
  const TimeGrid g{1.0, static_cast<int>(state.range(0))};
  std::uint64_t i = 0;
  for (auto _ : state) {
    const PathBundle p = simulate_jump_diffusion(m, m.default_x0, g, 0, i++);
    benchmark::DoNotOptimize(exponent_jump(p, m));
  }
}
BENCHMARK(BM_JumpPathAndLedger)->Arg(64)->Arg(4096);

static void BM_IdentityExperiment(benchmark::State& state) {
  ExperimentConfig c = experiment_for("two_exponential");
  c.grid = {1.0, 256};
  c.n_paths = 100;
  c.workers = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(identity_experiment(c));
}
BENCHMARK(BM_IdentityExperiment)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
