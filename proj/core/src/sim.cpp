// SPDX-License-Identifier: Apache-2.0
#include "specbridge/sim.hpp"

#include <algorithm>
#include <random>

namespace specbridge::sim {

State initialState() { return {}; }

State nextState(const Observation& o, const State& s, const Controller& controller) {
  State n;
  n.windSpeed = s.windSpeed + o.windShift;
  n.position = s.position + s.velocity + n.windSpeed;
  n.sensor = n.position + o.sensorError;
  n.velocity = s.velocity + controller(n.sensor, s.sensor);
  return n;
}

State finalState(const std::vector<Observation>& obs, const Controller& controller) {
  State s = initialState();
  for (auto it = obs.rbegin(); it != obs.rend(); ++it) s = nextState(*it, s, controller);
  return s;
}

std::vector<State> simulate(const std::vector<Observation>& obs, const Controller& controller) {
  std::vector<State> out;
  State s = initialState();
  for (const auto& o : obs) {
    s = nextState(o, s, controller);
    out.push_back(s);
  }
  return out;
}

bool checkOnRoad(const std::vector<State>& trace) {
  for (const auto& s : trace) {
    if (abs(s.position) > kRoadHalfWidth) return false;
  }
  return true;
}

Rational embed(const Rational& v) { return (v + 4) / 8; }

Controller networkController(const Network& net) {
  checkNetworkShape(net, 2, 1, "controller");
  return [net](const Rational& x, const Rational& y) { return evalNetwork(net, {embed(x), embed(y)})[0]; };
}

Rational sensorBound() { return Rational(13, 4); }

bool valid(const Observation& o, const Bounds& b) {
  return abs(o.windShift) <= b.windShift && abs(o.sensorError) <= b.sensorError;
}

Rational lemmaMargin(const Controller& controller, const Rational& x, const Rational& y) {
  return abs(controller(x, y) + 2 * x - y);
}

RunResult runTrace(const std::vector<Observation>& obs, const Controller& controller) {
  RunResult r;
  std::size_t step = 0;
  // Wraps the controller to watch its inputs against the guard.
  Controller guarded = [&](const Rational& x, const Rational& y) {
    if (!r.sensorGuard && (abs(x) > sensorBound() || abs(y) > sensorBound())) r.sensorGuard = step;
    return controller(x, y);
  };
  State s = initialState();
  for (; step < obs.size(); ++step) {
    s = nextState(obs[step], s, guarded);
    Rational p = abs(s.position);
    if (p > r.maxAbsPosition) r.maxAbsPosition = p;
    if (p > kRoadHalfWidth && r.onRoad) {
      r.onRoad = false;
      r.firstOffRoad = step;
    }
  }
  return r;
}

std::vector<Observation> randomObservations(const MonteCarloOptions& o, std::size_t run) {
  std::seed_seq seq{static_cast<std::uint32_t>(o.seed), static_cast<std::uint32_t>(o.seed >> 32),
                    static_cast<std::uint32_t>(run), static_cast<std::uint32_t>(run >> 32)};
  std::mt19937_64 rng(seq);
  std::uniform_int_distribution<long> k(-o.resolution, o.resolution);
  std::vector<Observation> obs(o.steps);
  for (auto& ob : obs) {
    ob.windShift = o.bounds.windShift * ratio(k(rng), o.resolution);
    ob.sensorError = o.bounds.sensorError * ratio(k(rng), o.resolution);
  }
  return obs;
}

MonteCarloReport monteCarlo(const Controller& controller, const MonteCarloOptions& o) {
  MonteCarloReport rep;
  rep.runs.reserve(o.runs);
  for (std::size_t run = 0; run < o.runs; ++run) {
    RunResult r = runTrace(randomObservations(o, run), controller);
    if (r.onRoad) ++rep.onRoadRuns;
    if (r.sensorGuard) ++rep.guardFailures;
    if (r.maxAbsPosition > rep.maxAbsPosition) rep.maxAbsPosition = r.maxAbsPosition;
    rep.runs.push_back(std::move(r));
  }
  return rep;
}

nlohmann::json toJson(const MonteCarloReport& r, bool perRun) {
  nlohmann::json j{{"runs", r.runs.size()},
                   {"onRoad", r.onRoadRuns},
                   {"guardFailures", r.guardFailures},
                   {"maxAbsPosition", toFractionString(r.maxAbsPosition)}};
  if (perRun) {
    j["perRun"] = nlohmann::json::array();
    for (const auto& run : r.runs) {
      nlohmann::json x{{"onRoad", run.onRoad}, {"maxAbsPosition", toFractionString(run.maxAbsPosition)}};
      if (run.firstOffRoad) x["firstOffRoad"] = *run.firstOffRoad;
      if (run.sensorGuard) x["sensorGuard"] = *run.sensorGuard;
      j["perRun"].push_back(x);
    }
  }
  return j;
}

SteeringResult steerTowards(const Controller& controller, const Rational& targetCurrent,
                            const Rational& targetPrevious, const Bounds& bounds, std::size_t maxSteps,
                            long resolution, std::size_t beamWidth) {
  std::vector<Observation> grid;
  for (long i = -resolution; i <= resolution; ++i) {
    for (long j = -resolution; j <= resolution; ++j) {
      grid.push_back({bounds.windShift * ratio(i, resolution), bounds.sensorError * ratio(j, resolution)});
    }
  }
  const Rational limit = sensorBound();
  auto distance = [&](const Rational& x, const Rational& y) -> Rational {
    return abs(x - targetCurrent) + abs(y - targetPrevious);
  };

  struct Node {
    State state;
    Rational previousSensor;
    Rational score;
    std::size_t parent = 0; // index into the previous layer
    std::size_t move = 0;   // index into grid
  };
  std::vector<std::vector<Node>> layers{{Node{initialState(), 0, distance(0, 0), 0, 0}}};

  SteeringResult out;
  auto finish = [&](std::size_t depth, std::size_t index) {
    std::vector<std::size_t> moves;
    for (std::size_t d = depth; d > 0; --d) {
      moves.push_back(layers[d][index].move);
      index = layers[d][index].parent;
    }
    State s = initialState();
    for (auto it = moves.rbegin(); it != moves.rend(); ++it) {
      Rational prev = s.sensor;
      s = nextState(grid[*it], s, controller);
      out.observations.push_back(grid[*it]);
      out.trace.push_back(s);
      out.finalDistance = distance(s.sensor, prev);
    }
  };

  for (std::size_t depth = 1; depth <= maxSteps; ++depth) {
    const auto& frontier = layers.back();
    std::vector<Node> next;
    for (std::size_t p = 0; p < frontier.size(); ++p) {
      for (std::size_t m = 0; m < grid.size(); ++m) {
        const State& s = frontier[p].state;
        State n = nextState(grid[m], s, controller);
        if (abs(n.sensor) > limit) continue;
        next.push_back(Node{n, s.sensor, distance(n.sensor, s.sensor), p, m});
      }
    }
    if (next.empty()) break;
    std::stable_sort(next.begin(), next.end(), [](const Node& a, const Node& b) { return a.score < b.score; });
    // One node per distinct state keeps the beam diverse.
    std::vector<Node> kept;
    for (auto& n : next) {
      bool dup = std::any_of(kept.begin(), kept.end(), [&](const Node& k) { return k.state == n.state; });
      if (!dup) kept.push_back(std::move(n));
      if (kept.size() == beamWidth) break;
    }
    layers.push_back(std::move(kept));
    const auto& layer = layers.back();
    for (std::size_t i = 0; i < layer.size(); ++i) {
      if (lemmaMargin(controller, layer[i].state.sensor, layer[i].previousSensor) >= Rational(5, 4)) {
        finish(depth, i);
        out.violation = depth - 1;
        return out;
      }
    }
  }
  finish(layers.size() - 1, 0);
  return out;
}

} // namespace specbridge::sim
