// SPDX-License-Identifier: Apache-2.0
#include "specbridge/loss.hpp"
#include "specbridge/parser.hpp"
#include "specbridge/resolve.hpp"

#include "fixtures.hpp"

#include <benchmark/benchmark.h>

using namespace specbridge;
using namespace specbridge::testing;

namespace {

LossProgram controllerLoss(const std::string& logic) {
  TypedProgram tp = checkProgram(resolveNames(parseSource(readFixture("specs/controller.vcl"))));
  LossOptions o;
  o.logic = Logic::parse(logic);
  return compileLoss(tp, "safe", o);
}

LossResources resources() {
  LossResources r;
  r.networks["controller"] = loadNetwork(fixturePath("specs/networks/good.json"));
  return r;
}

} // namespace

static void BM_EvalLoss(benchmark::State& state, const char* logic) {
  LossProgram lp = controllerLoss(logic);
  LossResources r = resources();
  for (auto _ : state) benchmark::DoNotOptimize(evalLoss(lp, r, 0, state.range(0)));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK_CAPTURE(BM_EvalLoss, dl2, "dl2")->Arg(16)->Arg(256);
BENCHMARK_CAPTURE(BM_EvalLoss, godel, "godel")->Arg(16)->Arg(256);

static void BM_GradLoss(benchmark::State& state) {
  LossProgram lp = controllerLoss("dl2");
  LossResources r = resources();
  for (auto _ : state) benchmark::DoNotOptimize(gradLoss(lp, r, 0, state.range(0)));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_GradLoss)->Arg(16)->Arg(256);
