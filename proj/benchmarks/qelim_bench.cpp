// SPDX-License-Identifier: Apache-2.0
#include "specbridge/qelim.hpp"

#include "systems.hpp"

#include <benchmark/benchmark.h>

using namespace specbridge;
using namespace specbridge::testing;

static void BM_EliminateAll(benchmark::State& state) {
  std::mt19937_64 rng(1);
  std::vector<PlantedSystem> systems;
  for (int i = 0; i < 32; ++i) systems.push_back(i % 2 ? plantedInfeasible(rng) : plantedFeasible(rng));
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(eliminateVariables(systems[i++ % systems.size()].constraints, {}));
  }
}
BENCHMARK(BM_EliminateAll);

static void BM_ProjectAndReplay(benchmark::State& state) {
  std::mt19937_64 rng(2);
  std::vector<PlantedSystem> systems;
  for (int i = 0; i < 32; ++i) systems.push_back(plantedFeasible(rng));
  std::size_t i = 0;
  for (auto _ : state) {
    const PlantedSystem& s = systems[i++ % systems.size()];
    auto proj = eliminateVariables(s.constraints, {0});
    Assignment a{{0, s.planted.at(0)}};
    proj.recon.replay(a);
    benchmark::DoNotOptimize(a);
  }
}
BENCHMARK(BM_ProjectAndReplay);

static void BM_SolveLinear(benchmark::State& state) {
  std::mt19937_64 rng(3);
  std::vector<PlantedSystem> systems;
  for (int i = 0; i < 32; ++i) systems.push_back(plantedFeasible(rng));
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(solveLinear(systems[i++ % systems.size()].constraints));
}
BENCHMARK(BM_SolveLinear);
