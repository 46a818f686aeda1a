// SPDX-License-Identifier: Apache-2.0
#include "specbridge/nbe.hpp"
#include "specbridge/parser.hpp"
#include "specbridge/resolve.hpp"

#include "fixtures.hpp"

#include <benchmark/benchmark.h>

using namespace specbridge;
using namespace specbridge::testing;

static void BM_ParseAndCheck(benchmark::State& state) {
  std::string src = readFixture("specs/controller.vcl");
  for (auto _ : state) benchmark::DoNotOptimize(checkProgram(resolveNames(parseSource(src))));
}
BENCHMARK(BM_ParseAndCheck);

static void BM_Normalise(benchmark::State& state) {
  TypedProgram tp = checkProgram(resolveNames(parseSource(readFixture("specs/controller.vcl"))));
  for (auto _ : state) benchmark::DoNotOptimize(normaliseProperty(tp, "safe"));
}
BENCHMARK(BM_Normalise);
