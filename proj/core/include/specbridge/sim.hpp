// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "specbridge/network.hpp"
#include "specbridge/rational.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

namespace specbridge::sim {

struct State {
  Rational windSpeed;
  Rational position;
  Rational velocity;
  Rational sensor;

  bool operator==(const State&) const = default;
};

struct Observation {
  Rational windShift;
  Rational sensorError;
};

/// Velocity change from (current sensor, previous sensor) readings.
using Controller = std::function<Rational(const Rational& current, const Rational& previous)>;

/// All zeros; satisfies |position| <= 3.
State initialState();

State nextState(const Observation& o, const State& s, const Controller& controller);

/// Right fold from initialState: the last observation is applied first.
State finalState(const std::vector<Observation>& obs, const Controller& controller);

/// States after each observation, applied in list order (initial state excluded).
std::vector<State> simulate(const std::vector<Observation>& obs, const Controller& controller);

inline constexpr int kRoadHalfWidth = 3;

/// |position| <= 3 at every state of the trace.
bool checkOnRoad(const std::vector<State>& trace);

/// (v + 4) / 8: problem range [-4, 4] onto [0, 1].
Rational embed(const Rational& v);

/// u . f . e with u the identity, reading output 0 of a 2-input network.
Controller networkController(const Network& net);

/// Sensor magnitude bound under which the controller property applies.
Rational sensorBound();

struct Bounds {
  Rational windShift = 1;
  Rational sensorError = Rational(1, 4);
};

bool valid(const Observation& o, const Bounds& b);

/// Margin of the controller property at one call: |c(x, y) + 2x - y|.
Rational lemmaMargin(const Controller& controller, const Rational& x, const Rational& y);

struct RunResult {
  bool onRoad = true;
  std::optional<std::size_t> firstOffRoad; // 0-based step
  /// A controller call saw |sensor| > 3.25 (model-invariant failure).
  std::optional<std::size_t> sensorGuard;
  Rational maxAbsPosition;
};

RunResult runTrace(const std::vector<Observation>& obs, const Controller& controller);

struct MonteCarloOptions {
  std::size_t runs = 1000;
  std::size_t steps = 100;
  std::uint64_t seed = 0;
  Bounds bounds;
  /// Observations are multiples of bound / resolution.
  long resolution = 64;
};

/// Seeded observation sequence for run `run`; independent of other runs.
std::vector<Observation> randomObservations(const MonteCarloOptions& o, std::size_t run);

struct MonteCarloReport {
  std::vector<RunResult> runs;
  std::size_t onRoadRuns = 0;
  std::size_t guardFailures = 0;
  Rational maxAbsPosition;
};

MonteCarloReport monteCarlo(const Controller& controller, const MonteCarloOptions& o);

nlohmann::json toJson(const MonteCarloReport& r, bool perRun = true);

struct SteeringResult {
  std::vector<Observation> observations;
  std::vector<State> trace;
  /// First step whose controller call has margin >= 5/4, if reached.
  std::optional<std::size_t> violation;
  Rational finalDistance; // L1 distance of the last (current, previous) sensor pair to the target
};

/// Beam search over valid observations on a grid, ranking states by the
/// distance of their (current, previous) sensor pair to the target and
/// keeping |sensor| within the guard. Stops at the first controller call
/// that leaves the margin.
SteeringResult steerTowards(const Controller& controller, const Rational& targetCurrent,
                            const Rational& targetPrevious, const Bounds& bounds = {}, std::size_t maxSteps = 60,
                            long resolution = 4, std::size_t beamWidth = 32);

} // namespace specbridge::sim
