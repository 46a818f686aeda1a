// SPDX-License-Identifier: Apache-2.0
// One PASS/FAIL line per acceptance criterion. Exit status is the number
// of failed criteria (0 when all pass).

#include "driver.hpp"

#include "specbridge/cache.hpp"
#include "specbridge/fsutil.hpp"
#include "specbridge/loss.hpp"
#include "specbridge/parser.hpp"
#include "specbridge/resolve.hpp"
#include "specbridge/sim.hpp"
#include "specbridge/verify.hpp"

#include "../support/fixtures.hpp"
#include "../support/formulas.hpp"
#include "../support/random.hpp"
#include "../support/systems.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <sstream>

using namespace specbridge;
using namespace specbridge::testing;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances and sizes.
constexpr double kVerifySeconds = 1.0;
constexpr double kSimSeconds = 10.0;
constexpr std::size_t kSimRuns = 1000;
constexpr std::size_t kSimSteps = 100;
constexpr int kDl2Formulas = 500;
constexpr int kDl2Depth = 4;
constexpr int kGradPoints = 20;
constexpr double kGradStep = 1e-5;
constexpr double kGradRelError = 1e-4;
constexpr double kKinkMargin = 1e-3; // closer than this to a ReLU/max kink: resample
constexpr int kFmSystems = 50;       // of each kind
constexpr int kFmPoints = 100;
constexpr int kGridNetworks = 50;
constexpr int kGridSide = 100; // 10^4 points
constexpr int kNbePoints = 100;
constexpr int kCacheFlips = 100;

struct Outcome {
  bool pass = true;
  std::string detail;
};

class Check {
public:
  void require(bool ok, const std::string& what) {
    if (!ok && out_.pass) {
      out_.pass = false;
      out_.detail = what;
    }
  }
  void note(const std::string& s) {
    if (out_.pass) out_.detail = s;
  }
  Outcome result() const { return out_; }

private:
  Outcome out_;
};

double seconds(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - since).count();
}

std::string fmt(double v) {
  std::ostringstream ss;
  ss.precision(3);
  ss << v;
  return ss.str();
}

Rational q(long n, long d = 1) { return ratio(n, d); }

TypedProgram load(const std::string& path) { return checkProgram(resolveNames(parseSource(readFixture(path)))); }

Network controllerNet(const std::string& file) { return loadNetwork(fixturePath("specs/networks/" + file)); }

bool holdsAll(const std::vector<LinearConstraint>& cs, const Assignment& a) {
  return std::all_of(cs.begin(), cs.end(), [&](const LinearConstraint& c) { return c.holds(a); });
}

Network randomReluNet(std::mt19937_64& rng, const std::vector<std::size_t>& widths, bool exact) {
  std::normal_distribution<double> w(0.0, 0.5);
  nlohmann::json layers = nlohmann::json::array();
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    nlohmann::json W = nlohmann::json::array(), b = nlohmann::json::array();
    auto draw = [&]() -> nlohmann::json {
      if (exact) return toFractionString(randomRational(rng, -2, 2, 4));
      return w(rng);
    };
    for (std::size_t r = 0; r < widths[l + 1]; ++r) {
      nlohmann::json row = nlohmann::json::array();
      for (std::size_t c = 0; c < widths[l]; ++c) row.push_back(draw());
      W.push_back(row);
      b.push_back(draw());
    }
    layers.push_back({{"W", W}, {"b", b}, {"act", l + 2 == widths.size() ? "id" : "relu"}});
  }
  return parseNetwork({{"layers", layers}});
}

// ---------------------------------------------------------------------------

Outcome controllerVerified() {
  Check c;
  auto t0 = std::chrono::steady_clock::now();
  TypedProgram tp = load("specs/controller.vcl");
  CompiledQueries cq = compileQueries(tp, "safe");
  std::map<std::string, Network> nets{{"controller", controllerNet("good.json")}};
  c.require(cq.root.kind == QueryTree::Kind::Or && cq.root.children.size() == 2 && cq.queries.size() == 2,
            "expected an Or tree with 2 leaves");
  if (cq.queries.size() != 2) return c.result();

  // Substitution oracle, derived by hand from x_i = 8 e_i - 4:
  // box 3/32 <= e_i <= 29/32, leaves y0 + 16 e0 - 8 e1 <= 11/4 and >= 21/4.
  auto box = [](const Assignment& a) {
    for (int i = 0; i < 2; ++i) {
      if (a.at(inputVar(i)) < q(3, 32) || a.at(inputVar(i)) > q(29, 32)) return false;
    }
    return true;
  };
  auto term = [](const Assignment& a) -> Rational {
    return a.at(outputVar(0)) + 16 * a.at(inputVar(0)) - 8 * a.at(inputVar(1));
  };
  std::mt19937_64 rng(1);
  std::vector<Rational> special{q(3, 32), q(29, 32), q(3, 33), q(29, 31), q(0), q(1, 2), q(1)};
  int mismatches = 0;
  for (int n = 0; n < 4000; ++n) {
    Assignment a;
    for (Var v : {inputVar(0), inputVar(1)}) {
      a[v] = n % 3 == 0 ? special[rng() % special.size()] : randomRational(rng, -1, 2, 64);
    }
    Rational base = 16 * a[inputVar(0)] - 8 * a[inputVar(1)];
    switch (n % 4) {
    case 0: a[outputVar(0)] = q(11, 4) - base; break;
    case 1: a[outputVar(0)] = q(21, 4) - base; break;
    default: a[outputVar(0)] = randomRational(rng, -20, 20, 8);
    }
    bool below = box(a) && term(a) <= q(11, 4);
    bool above = box(a) && term(a) >= q(21, 4);
    mismatches += holdsAll(cq.queries[0].constraints, a) != below;
    mismatches += holdsAll(cq.queries[1].constraints, a) != above;
  }
  c.require(mismatches == 0, std::to_string(mismatches) + " oracle mismatches on leaf constraints");
  for (const auto& query : cq.queries) {
    c.require(!solveQuery(query, nets).sat, "leaf " + std::to_string(query.id) + " is SAT");
  }
  PropertyStatus s = verifyProperty(tp, "safe", nets);
  double t = seconds(t0);
  c.require(s.kind == PropertyStatus::Kind::Verified, "status " + statusName(s.kind));
  c.require(t < kVerifySeconds, "took " + fmt(t) + " s");
  c.note("Or of 2 leaves, both UNSAT, leaf constraints match oracle, Verified in " + fmt(t) + " s (< 1 s)");
  return c.result();
}

Outcome zeroFalsified() {
  Check c;
  auto t0 = std::chrono::steady_clock::now();
  TypedProgram tp = load("specs/controller.vcl");
  PropertyStatus s = verifyProperty(tp, "safe", {{"controller", controllerNet("zero.json")}});
  double t = seconds(t0);
  c.require(s.kind == PropertyStatus::Kind::Falsified, "status " + statusName(s.kind));
  c.require(!s.embedding.empty(), "no embedding witness");
  if (!s.witness.count("x")) {
    c.require(false, "no lifted witness for x");
    return c.result();
  }
  const GroundValue& x = s.witness.at("x");
  c.require(x.elems.size() == 2, "witness has wrong shape");
  if (x.elems.size() != 2) return c.result();
  Rational x0 = x.elems[0].rat, x1 = x.elems[1].rat;
  // Zero controller: output 0, so the margin is |2 x0 - x1|.
  c.require(abs(x0) <= q(13, 4) && abs(x1) <= q(13, 4), "witness outside |x_i| <= 3.25");
  c.require(abs(2 * x0 - x1) >= q(5, 4), "witness does not violate |2x0 - x1| < 1.25");
  c.require(t < kVerifySeconds, "took " + fmt(t) + " s");
  c.note("x = [" + toFractionString(x0) + ", " + toFractionString(x1) + "], |2x0 - x1| = " +
         toFractionString(abs(2 * x0 - x1)) + " >= 5/4, " + fmt(t) + " s (< 1 s)");
  return c.result();
}

Outcome roadKeeping() {
  Check c;
  auto t0 = std::chrono::steady_clock::now();
  sim::MonteCarloOptions o;
  o.runs = kSimRuns;
  o.steps = kSimSteps;
  o.seed = 0;
  auto rep = sim::monteCarlo(sim::networkController(controllerNet("good.json")), o);
  double t = seconds(t0);
  c.require(rep.onRoadRuns == kSimRuns, std::to_string(rep.onRoadRuns) + "/1000 runs on road");
  c.require(rep.guardFailures == 0, "sensor guard failed");
  c.require(t < kSimSeconds, "took " + fmt(t) + " s");
  c.note("1000/1000 runs on road, max |position| " + toFractionString(rep.maxAbsPosition) + ", " + fmt(t) +
         " s (< 10 s)");
  return c.result();
}

Outcome dl2Soundness() {
  Check c;
  TypedProgram tp = checkProgram(resolveNames(parseSource("")));
  LossOptions o;
  std::mt19937_64 rng(4);
  int agree = 0, trueCount = 0;
  for (int n = 0; n < kDl2Formulas; ++n) {
    ExprPtr f = randomFormula(rng, kDl2Depth);
    bool t = truth(f);
    trueCount += t;
    LossProgram lp;
    lp.root = translateFormula(tp, f, o);
    double loss = evalLoss(lp, {}, 0, 1);
    agree += (loss == 0.0) == t && loss >= 0.0;
  }
  c.require(agree == kDl2Formulas, std::to_string(agree) + "/500 agree");
  c.require(trueCount > 50 && trueCount < kDl2Formulas - 50, "degenerate sample: " + std::to_string(trueCount) + " true");
  c.note("500/500 agree (" + std::to_string(trueCount) + " true, " + std::to_string(kDl2Formulas - trueCount) +
         " false)");
  return c.result();
}

Outcome gradients() {
  Check c;
  TypedProgram tp = load("specs/controller.vcl");
  LossProgram lp = compileLoss(tp, "safe");
  std::mt19937_64 rng(31);
  const std::size_t samples = 10;
  int accepted = 0, resampled = 0;
  double worst = 0;
  for (int attempt = 0; accepted < kGradPoints && attempt < 2000; ++attempt) {
    LossResources r;
    r.networks["controller"] = randomReluNet(rng, {2, 16, 16, 1}, false);
    EvalStats stats;
    LossGradient g = gradLoss(lp, r, attempt, samples, &stats);
    if (stats.kinkMargin < kKinkMargin) {
      ++resampled;
      continue;
    }
    ++accepted;
    Network& net = r.networks["controller"];
    auto params = net.parameters();
    double num = 0, den = 0;
    for (std::size_t k = 0; k < params.size(); ++k) {
      auto plus = params, minus = params;
      plus[k] += kGradStep;
      minus[k] -= kGradStep;
      net.setParameters(plus);
      double fp = evalLoss(lp, r, attempt, samples);
      net.setParameters(minus);
      double fm = evalLoss(lp, r, attempt, samples);
      double fd = (fp - fm) / (2 * kGradStep);
      double diff = g.wrt["controller"][k] - fd;
      num += diff * diff;
      den += fd * fd;
    }
    net.setParameters(params);
    double rel = den == 0 ? std::sqrt(num) : std::sqrt(num / den);
    worst = std::max(worst, rel);
  }
  c.require(accepted == kGradPoints, "only " + std::to_string(accepted) + " points away from kinks");
  c.require(worst < kGradRelError, "worst relative error " + fmt(worst));
  c.note("20 points (" + std::to_string(resampled) + " resampled at kinks), worst relative error " + fmt(worst) +
         " < 1e-4");
  return c.result();
}

Outcome fourierMotzkin() {
  Check c;
  std::mt19937_64 rng(6);
  int correct = 0, extended = 0, failedExtensions = 0;
  for (int i = 0; i < 2 * kFmSystems; ++i) {
    PlantedSystem s = i < kFmSystems ? plantedFeasible(rng) : plantedInfeasible(rng);
    for (const auto& con : s.constraints) {
      for (const auto& [v, k] : con.lhs.coeffs) {
        if (abs(k) > 5 || !isInteger(k)) c.require(false, "generator produced coefficient " + toFractionString(k));
      }
    }
    auto full = eliminateVariables(s.constraints, {});
    bool feasible = !full.infeasible && holdsAll(full.reduced, {});
    if (feasible == s.feasible) ++correct;
    if (feasible) {
      Assignment a;
      full.recon.replay(a);
      c.require(holdsAll(s.constraints, a), "full-elimination witness fails system " + std::to_string(i));
    }

    // Projection onto x0 extends back to the whole system.
    auto proj = eliminateVariables(s.constraints, {0});
    for (int p = 0; p < kFmPoints; ++p) {
      Assignment a{{0, p == 0 && s.feasible ? s.planted[0] : randomRational(rng, -8, 8, 4)}};
      if (proj.infeasible || !holdsAll(proj.reduced, a)) continue;
      proj.recon.replay(a);
      if (holdsAll(s.constraints, a)) {
        ++extended;
      } else {
        ++failedExtensions;
      }
    }
  }
  c.require(correct == 2 * kFmSystems, std::to_string(correct) + "/100 verdicts correct");
  c.require(failedExtensions == 0, std::to_string(failedExtensions) + " projected points failed to extend");
  c.require(extended > 0, "no random point fell in any projection");
  c.note("100/100 verdicts correct; " + std::to_string(extended) + " projected points extended, 0 failures");
  return c.result();
}

Outcome solverVersusGrid() {
  Check c;
  std::mt19937_64 rng(17);
  int disagreements = 0, satCount = 0;
  for (int n = 0; n < kGridNetworks; ++n) {
    Network net = randomReluNet(rng, {2, 4, 1}, true);
    std::vector<Rational> lo(2), hi(2);
    for (int i = 0; i < 2; ++i) {
      Rational a = randomRational(rng, -2, 2, 4), b = randomRational(rng, -2, 2, 4);
      lo[i] = std::min(a, b);
      hi[i] = std::max(a, b) + q(1, 4);
    }
    // Halfspace a0 x0 + a1 x1 + b y0 >= k with b != 0.
    Rational a0 = randomRational(rng, -2, 2, 2), a1 = randomRational(rng, -2, 2, 2);
    Rational b = randomRational(rng, 1, 2, 2) * (rng() % 2 ? 1 : -1);
    auto lhs = [&](const std::vector<Rational>& x) -> Rational {
      return a0 * x[0] + a1 * x[1] + b * evalNetwork(net, x)[0];
    };
    // Threshold near a random grid value so both verdicts occur.
    std::vector<Rational> probe{lo[0] + (hi[0] - lo[0]) * randomRational(rng, 0, 1, 8),
                                lo[1] + (hi[1] - lo[1]) * randomRational(rng, 0, 1, 8)};
    Rational k = lhs(probe) + randomRational(rng, 0, 3, 8);

    Query query;
    query.id = 1;
    query.blocks.push_back({"f", 0, 2, 0, 1});
    for (int i = 0; i < 2; ++i) {
      query.constraints.push_back(
          LinearConstraint::make(LinearExpr::ofConstant(lo[i]), Relation::Le, LinearExpr::ofVar(inputVar(i))));
      query.constraints.push_back(
          LinearConstraint::make(LinearExpr::ofVar(inputVar(i)), Relation::Le, LinearExpr::ofConstant(hi[i])));
    }
    LinearExpr h = LinearExpr::ofVar(inputVar(0)) * a0 + LinearExpr::ofVar(inputVar(1)) * a1 +
                   LinearExpr::ofVar(outputVar(0)) * b;
    query.constraints.push_back(LinearConstraint::make(LinearExpr::ofConstant(k), Relation::Le, h));

    bool gridSat = false;
    for (int i = 0; i < kGridSide && !gridSat; ++i) {
      for (int j = 0; j < kGridSide && !gridSat; ++j) {
        std::vector<Rational> x{lo[0] + (hi[0] - lo[0]) * q(i, kGridSide - 1),
                                lo[1] + (hi[1] - lo[1]) * q(j, kGridSide - 1)};
        gridSat = lhs(x) >= k;
      }
    }
    SolveResult r = solveQuery(query, {{"f", net}});
    satCount += r.sat;
    if (gridSat && !r.sat) ++disagreements;
    if (r.sat) {
      // A SAT answer must be a genuine point of the query.
      std::vector<Rational> x{r.witness.at(inputVar(0)), r.witness.at(inputVar(1))};
      bool inBox = x[0] >= lo[0] && x[0] <= hi[0] && x[1] >= lo[1] && x[1] <= hi[1];
      if (!inBox || lhs(x) < k) ++disagreements;
    }
  }
  c.require(disagreements == 0, std::to_string(disagreements) + " disagreements");
  c.require(satCount > 0 && satCount < kGridNetworks, "degenerate sample: " + std::to_string(satCount) + " SAT");
  c.note("50 networks, 0 disagreements with the 100x100 grid (" + std::to_string(satCount) + " SAT, " +
         std::to_string(kGridNetworks - satCount) + " UNSAT)");
  return c.result();
}

Outcome nbeSoundness() {
  Check c;
  std::mt19937_64 rng(2024);
  int properties = 0, points = 0;
  std::vector<fs::path> specs;
  for (const auto& e : fs::directory_iterator(fixturePath("specs"))) {
    if (e.path().extension() == ".vcl") specs.push_back(e.path());
  }
  std::sort(specs.begin(), specs.end());
  for (const auto& path : specs) {
    TypedProgram tp = checkProgram(resolveNames(parseSource(readFile(path))));
    for (const Decl& d : tp.program.decls) {
      if (d.kind != DeclKind::Property) continue;
      ++properties;
      ExprPtr nf = normaliseProperty(tp, d.name);
      c.require(structurallyEqual(normaliseExpr(tp, nf), nf), d.name + ": normalisation not idempotent");

      std::vector<std::pair<std::string, std::size_t>> quantified;
      std::function<void(const ExprPtr&)> collect = [&](const ExprPtr& e) {
        if (e->node == ExprNode::Forall || e->node == ExprNode::Exists) {
          std::size_t n = e->binderType->node == TypeNode::Rat ? 0 : tensorDims(e->binderType).at(0);
          quantified.emplace_back(e->name, n);
        }
        for (const auto& ch : e->children) collect(ch);
      };
      collect(d.body);
      for (int p = 0; p < kNbePoints; ++p) {
        GroundEnv env;
        auto vec = [&](std::size_t n) {
          std::vector<Rational> xs;
          for (std::size_t i = 0; i < n; ++i) xs.push_back(randomRational(rng, -5, 5));
          return xs;
        };
        for (const auto& [name, n] : quantified) {
          env.quantified[name] = n == 0 ? GroundValue::ofRat(randomRational(rng, -5, 5)) : GroundValue::ofVector(vec(n));
        }
        std::vector<Network> keep;
        for (std::size_t i = 0; i < tp.program.decls.size(); ++i) {
          const Decl& other = tp.program.decls[i];
          if (other.kind == DeclKind::Network) {
            auto shape = shapeOf(tp, other.name);
            Network net = randomReluNet(rng, {shape.inputDim, 4, shape.outputDim}, true);
            env.networks[other.name] = [net](const std::vector<Rational>& x) { return evalNetwork(net, x); };
          } else if (other.kind == DeclKind::Parameter || other.kind == DeclKind::Dataset) {
            auto dims = tensorDims(tp.declTypes[i]);
            env.resources[other.name] =
                dims.empty() ? GroundValue::ofRat(randomRational(rng, 0, 5)) : GroundValue::ofVector(vec(dims.at(0)));
          }
        }
        ++points;
        if (evaluateGround(tp, d.body, env) != evaluateGround(tp, nf, env)) {
          c.require(false, d.name + ": original and normal form disagree at point " + std::to_string(p));
        }
      }
    }
  }
  c.note(std::to_string(properties) + " fixture properties x 100 points agree; normalisation idempotent");
  return c.result();
}

Outcome cacheIntegrity() {
  Check c;
  ScratchDir d("acceptance-cache");
  fs::copy_file(fixturePath("specs/controller.vcl"), d / "controller.vcl");
  fs::copy_file(fixturePath("specs/networks/good.json"), d / "good.json");
  TypedProgram tp = checkProgram(resolveNames(parseSource(readFile(d / "controller.vcl"))));
  CompiledQueries cq = compileQueries(tp, "safe");
  fs::path dir = d / "cache";
  writeCache(dir, cq, {d / "controller.vcl", {{"controller", d / "good.json"}}, {}, {}});
  std::map<std::string, Network> nets{{"controller", loadNetwork((d / "good.json").string())}};
  for (const auto& query : cq.queries) {
    SolveResult r = solveQuery(query, nets);
    recordResult(dir, makeRecord(query, {r.sat ? LeafResult::Kind::Sat : LeafResult::Kind::Unsat, r.witness}));
  }
  c.require(checkCache(dir).kind == CacheCheck::Kind::Valid, "fresh cache is not Valid");
  c.require(readStatus(dir).kind == PropertyStatus::Kind::Verified, "fresh cache is not Verified");

  const std::string original = readFile(d / "good.json");
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<std::size_t> pos(0, original.size() - 1);
  std::uniform_int_distribution<int> bit(0, 7);
  int stale = 0, verified = 0;
  std::size_t before = solverInvocations();
  for (int n = 0; n < kCacheFlips; ++n) {
    std::string fuzzed = original;
    fuzzed[pos(rng)] ^= static_cast<char>(1 << bit(rng));
    writeFileAtomic(d / "good.json", fuzzed);
    CacheCheck check = checkCache(dir);
    stale += check.kind == CacheCheck::Kind::Stale && check.changed == std::vector<std::string>{"controller"};
    verified += readStatus(dir).kind == PropertyStatus::Kind::Verified;
    writeFileAtomic(d / "good.json", original);
  }
  std::size_t calls = solverInvocations() - before;
  c.require(stale == kCacheFlips, std::to_string(stale) + "/100 flips reported Stale");
  c.require(verified == 0, std::to_string(verified) + " stale reads reported Verified");
  c.require(calls == 0, std::to_string(calls) + " solver calls during check-cache");
  c.require(checkCache(dir).kind == CacheCheck::Kind::Valid, "restored cache is not Valid");
  c.note("100/100 flips -> Stale, 0 stale reads Verified, 0 solver calls");
  return c.result();
}

Outcome errorContracts() {
  Check c;
  std::string f = "f=" + fixturePath("specs/networks/identity1.json");
  struct Case {
    std::string spec, property, id;
  };
  for (const Case& k : {Case{"specs/alternating.vcl", "reachable", "alternating-quantifiers"},
                        Case{"specs/nonlinear.vcl", "bounded", "nonlinear-embedding"}}) {
    std::ostringstream out, err;
    int code = cli::run({"verify", fixturePath(k.spec), k.property, "--network", f}, out, err);
    c.require(code == 2, k.spec + ": exit " + std::to_string(code));
    auto j = nlohmann::json::parse(err.str());
    c.require(j.at("error") == k.id, k.spec + ": error " + j.at("error").dump());
    c.require(j.contains("line") && !j.at("message").get<std::string>().empty(), k.spec + ": no explanation");
  }
  c.note("alternating-quantifiers and nonlinear-embedding, exit 2, with source position and explanation");
  return c.result();
}

} // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    Outcome (*run)();
  };
  const std::vector<Criterion> criteria{
      {1, "controller property verified", controllerVerified},
      {2, "zero controller falsified, witness lifted", zeroFalsified},
      {3, "road keeping, 1000 simulated runs", roadKeeping},
      {4, "DL2 soundness on random formulas", dl2Soundness},
      {5, "loss gradients vs central differences", gradients},
      {6, "Fourier-Motzkin vs planted systems", fourierMotzkin},
      {7, "activation-pattern solver vs grid search", solverVersusGrid},
      {8, "normal forms agree with originals", nbeSoundness},
      {9, "cache integrity under byte flips", cacheIntegrity},
      {10, "compile-error contracts", errorContracts},
  };
  int failed = 0;
  for (const auto& cr : criteria) {
    Outcome o;
    try {
      o = cr.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << cr.id << (cr.id < 10 ? "   " : "  ") << cr.name << ": "
              << o.detail << std::endl;
  }
  return failed;
}
