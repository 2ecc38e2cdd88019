#include <benchmark/benchmark.h>

#include "isoreg/complexity.hpp"
#include "isoreg/cone_solver.hpp"
#include "isoreg/order.hpp"
#include "isoreg/random_design.hpp"
#include "isoreg/rng.hpp"

using namespace isoreg;

static void BM_PavaChain(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  RandomStream rng(1, 0);
  const auto y = rng.normals(n);
  for (auto _ : state) benchmark::DoNotOptimize(pava_chain(y));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_PavaChain)->RangeMultiplier(10)->Range(10, 100000)->Complexity();

static void BM_DykstraLattice(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  const auto n1 = static_cast<std::size_t>(state.range(1));
  const Dag dag = build_lattice(LatticeSpec::cube(d, n1));
  RandomStream rng(2, 0);
  const auto y = rng.normals(dag.size());
  for (auto _ : state) benchmark::DoNotOptimize(project_dykstra({dag, y}));
  state.counters["n"] = static_cast<double>(dag.size());
}
BENCHMARK(BM_DykstraLattice)->Args({2, 8})->Args({2, 16})->Args({2, 32})->Args({3, 5})->Args({3, 8})
    ->Unit(benchmark::kMillisecond);

static void BM_MaximumAntichain(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto points = sample_design(DesignSampler::uniform(2), n, 3);
  const auto design = build_design_dag(points);
  for (auto _ : state) benchmark::DoNotOptimize(maximum_antichain(design.dag));
}
BENCHMARK(BM_MaximumAntichain)->Arg(100)->Arg(400)->Arg(1600)->Unit(benchmark::kMillisecond);

static void BM_StatdimLattice(benchmark::State& state) {
  const Dag dag = build_lattice(LatticeSpec::cube(2, static_cast<std::size_t>(state.range(0))));
  MonteCarloOptions options;
  options.replicates = 20;
  for (auto _ : state) benchmark::DoNotOptimize(statdim_mc(dag, options));
}
BENCHMARK(BM_StatdimLattice)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
