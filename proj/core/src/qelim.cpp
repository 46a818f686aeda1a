// SPDX-License-Identifier: Apache-2.0
#include "specbridge/qelim.hpp"

#include "specbridge/diagnostics.hpp"

#include <algorithm>

namespace specbridge {

LinearExpr LinearExpr::ofConstant(Rational c) {
  LinearExpr e;
  e.constant = std::move(c);
  return e;
}

LinearExpr LinearExpr::ofVar(Var v, Rational c) {
  LinearExpr e;
  if (c != 0) e.coeffs[v] = std::move(c);
  return e;
}

Rational LinearExpr::coeff(Var v) const {
  auto it = coeffs.find(v);
  return it == coeffs.end() ? Rational(0) : it->second;
}

LinearExpr& LinearExpr::operator+=(const LinearExpr& other) {
  for (const auto& [v, c] : other.coeffs) {
    Rational& mine = coeffs[v];
    mine += c;
    if (mine == 0) coeffs.erase(v);
  }
  constant += other.constant;
  return *this;
}

LinearExpr& LinearExpr::operator-=(const LinearExpr& other) { return *this += other * Rational(-1); }

LinearExpr& LinearExpr::operator*=(const Rational& k) {
  if (k == 0) {
    coeffs.clear();
    constant = 0;
    return *this;
  }
  for (auto& [v, c] : coeffs) c *= k;
  constant *= k;
  return *this;
}

LinearExpr LinearExpr::substitute(Var v, const LinearExpr& by) const {
  auto it = coeffs.find(v);
  if (it == coeffs.end()) return *this;
  Rational c = it->second;
  LinearExpr out = *this;
  out.coeffs.erase(v);
  out += by * c;
  return out;
}

Rational LinearExpr::evaluate(const Assignment& a) const {
  Rational total = constant;
  for (const auto& [v, c] : coeffs) {
    auto it = a.find(v);
    if (it == a.end()) throw Error("internal-linear", "variable " + std::to_string(v) + " has no value");
    total += c * it->second;
  }
  return total;
}

std::string relationSymbol(Relation r) {
  switch (r) {
  case Relation::Eq:
    return "=";
  case Relation::Le:
    return "<=";
  case Relation::Lt:
    return "<";
  }
  return "?";
}

LinearConstraint LinearConstraint::make(const LinearExpr& lhs, Relation rel, const LinearExpr& rhs) {
  LinearConstraint c;
  c.lhs = lhs - rhs;
  c.rel = rel;
  return c;
}

LinearConstraint LinearConstraint::normalised() const {
  if (lhs.isConstant()) return *this;
  Rational lead = lhs.coeffs.begin()->second;
  Rational scale = 1 / abs(lead);
  if (rel == Relation::Eq && lead < 0) scale = -scale;
  LinearConstraint out = *this;
  out.lhs *= scale;
  return out;
}

namespace {

bool relHolds(Relation rel, const Rational& value) {
  switch (rel) {
  case Relation::Eq:
    return value == 0;
  case Relation::Le:
    return value <= 0;
  case Relation::Lt:
    return value < 0;
  }
  return false;
}

} // namespace

bool LinearConstraint::constantTruth() const { return relHolds(rel, lhs.constant); }

bool LinearConstraint::holds(const Assignment& a) const { return relHolds(rel, lhs.evaluate(a)); }

std::string toString(const LinearExpr& e, const VarNamer& name) {
  std::string out;
  for (const auto& [v, c] : e.coeffs) {
    std::string mag = abs(c) == 1 ? "" : toFractionString(abs(c)) + "*";
    if (out.empty()) {
      out = (c < 0 ? "-" : "") + mag + name(v);
    } else {
      out += (c < 0 ? " - " : " + ") + mag + name(v);
    }
  }
  if (out.empty()) return toFractionString(e.constant);
  if (e.constant != 0) out += (e.constant < 0 ? " - " : " + ") + toFractionString(abs(e.constant));
  return out;
}

std::string toString(const LinearConstraint& c, const VarNamer& name) {
  return toString(c.lhs, name) + " " + relationSymbol(c.rel) + " 0";
}

void ReconstructionMap::append(const ReconstructionMap& later) {
  steps.insert(steps.end(), later.steps.begin(), later.steps.end());
}

void ReconstructionMap::replay(Assignment& a) const {
  for (auto it = steps.rbegin(); it != steps.rend(); ++it) {
    const ReconstructionStep& s = *it;
    if (s.kind == ReconstructionStep::Kind::Solved) {
      a[s.var] = s.solution.evaluate(a);
      continue;
    }
    std::optional<Rational> lo;
    std::optional<Rational> hi;
    for (const auto& b : s.bounds) {
      Rational k = b.lhs.coeff(s.var);
      LinearExpr rest = b.lhs;
      rest.coeffs.erase(s.var);
      Rational bound = -rest.evaluate(a) / k;
      // k*v + rest rel 0: k > 0 bounds v from above, k < 0 from below.
      bool upper = k > 0;
      if (b.rel == Relation::Eq) {
        lo = bound;
        hi = bound;
        break;
      }
      if (upper) {
        if (!hi || bound < *hi) hi = bound;
      } else {
        if (!lo || bound > *lo) lo = bound;
      }
    }
    Rational value;
    if (lo && hi) {
      value = (*lo + *hi) / 2;
    } else if (lo) {
      value = *lo + 1;
    } else if (hi) {
      value = *hi - 1;
    } else {
      value = 0;
    }
    a[s.var] = value;
  }
}

std::set<Var> variablesOf(const std::vector<LinearConstraint>& cs) {
  std::set<Var> out;
  for (const auto& c : cs) {
    for (const auto& [v, k] : c.lhs.coeffs) out.insert(v);
  }
  return out;
}

std::vector<LinearConstraint> simplify(const std::vector<LinearConstraint>& cs) {
  std::vector<LinearConstraint> out;
  for (const auto& raw : cs) {
    LinearConstraint c = raw.normalised();
    if (c.isConstant() && c.constantTruth()) continue;
    if (std::find(out.begin(), out.end(), c) != out.end()) continue;
    out.push_back(std::move(c));
  }
  return out;
}

namespace {

// Solves the equality `eq` for v, yielding v = solution.
LinearExpr solveFor(const LinearConstraint& eq, Var v) {
  Rational k = eq.lhs.coeff(v);
  LinearExpr rest = eq.lhs;
  rest.coeffs.erase(v);
  return rest * Rational(-1 / k);
}

std::vector<LinearConstraint> substituteAll(const std::vector<LinearConstraint>& cs, Var v, const LinearExpr& by) {
  std::vector<LinearConstraint> out;
  out.reserve(cs.size());
  for (const auto& c : cs) {
    LinearConstraint d = c;
    d.lhs = c.lhs.substitute(v, by);
    out.push_back(std::move(d));
  }
  return out;
}

bool anyContradiction(const std::vector<LinearConstraint>& cs) {
  return std::any_of(cs.begin(), cs.end(), [](const LinearConstraint& c) { return c.isConstant() && !c.constantTruth(); });
}

} // namespace

GaussianResult gaussianEliminate(const std::vector<LinearConstraint>& eqs, const std::vector<Var>& targets) {
  GaussianResult result;
  std::vector<LinearConstraint> system = eqs;
  for (const auto& c : system) {
    if (c.rel != Relation::Eq) throw Error("internal-linear", "gaussianEliminate expects equalities only");
  }
  for (Var v : targets) {
    auto pivot = std::find_if(system.begin(), system.end(), [&](const LinearConstraint& c) { return c.lhs.mentions(v); });
    if (pivot == system.end()) {
      result.unsolved.push_back(v);
      continue;
    }
    ReconstructionStep step;
    step.kind = ReconstructionStep::Kind::Solved;
    step.var = v;
    step.solution = solveFor(*pivot, v);
    system.erase(pivot);
    system = substituteAll(system, v, step.solution);
    result.substitution.steps.push_back(std::move(step));
  }
  result.residual = simplify(system);
  result.infeasible = anyContradiction(result.residual);
  return result;
}

std::vector<LinearConstraint> fourierMotzkin(const std::vector<LinearConstraint>& cs, Var v) {
  std::vector<LinearConstraint> lower;
  std::vector<LinearConstraint> upper;
  std::vector<LinearConstraint> out;
  auto classify = [&](const LinearConstraint& c) {
    Rational k = c.lhs.coeff(v);
    if (k > 0) {
      upper.push_back(c);
    } else if (k < 0) {
      lower.push_back(c);
    } else {
      out.push_back(c);
    }
  };
  for (const auto& c : cs) {
    if (c.rel == Relation::Eq && c.lhs.mentions(v)) {
      LinearConstraint a{c.lhs, Relation::Le};
      LinearConstraint b{c.lhs * Rational(-1), Relation::Le};
      classify(a);
      classify(b);
    } else {
      classify(c);
    }
  }
  for (const auto& u : upper) {
    Rational ku = u.lhs.coeff(v);
    for (const auto& l : lower) {
      Rational kl = -l.lhs.coeff(v);
      LinearConstraint combined;
      combined.lhs = u.lhs * kl + l.lhs * ku;
      combined.lhs.coeffs.erase(v);
      combined.rel = (u.rel == Relation::Lt || l.rel == Relation::Lt) ? Relation::Lt : Relation::Le;
      out.push_back(std::move(combined));
    }
  }
  return simplify(out);
}

EliminationResult eliminateVariables(const std::vector<LinearConstraint>& cs, const std::set<Var>& keep,
                                     const EliminationTrace* trace) {
  EliminationResult result;
  std::vector<LinearConstraint> system = simplify(cs);

  // Gaussian stage: any equality mentioning an eliminable variable is a pivot.
  for (;;) {
    std::optional<std::pair<std::size_t, Var>> pivot;
    for (std::size_t i = 0; i < system.size() && !pivot; ++i) {
      if (system[i].rel != Relation::Eq) continue;
      for (const auto& [v, k] : system[i].lhs.coeffs) {
        if (!keep.count(v)) {
          pivot = std::make_pair(i, v);
          break;
        }
      }
    }
    if (!pivot) break;
    auto [i, v] = *pivot;
    ReconstructionStep step;
    step.kind = ReconstructionStep::Kind::Solved;
    step.var = v;
    step.solution = solveFor(system[i], v);
    system.erase(system.begin() + static_cast<std::ptrdiff_t>(i));
    system = simplify(substituteAll(system, v, step.solution));
    if (trace && trace->onStep) trace->onStep("gaussian", v, system);
    result.recon.steps.push_back(std::move(step));
  }

  // Fourier-Motzkin stage, fewest occurrences first.
  for (;;) {
    std::map<Var, int> occurrences;
    for (const auto& c : system) {
      for (const auto& [v, k] : c.lhs.coeffs) {
        if (!keep.count(v)) ++occurrences[v];
      }
    }
    if (occurrences.empty()) break;
    auto best = std::min_element(occurrences.begin(), occurrences.end(),
                                 [](const auto& a, const auto& b) { return a.second < b.second; });
    Var v = best->first;
    ReconstructionStep step;
    step.kind = ReconstructionStep::Kind::Bounded;
    step.var = v;
    for (const auto& c : system) {
      if (c.lhs.mentions(v)) step.bounds.push_back(c);
    }
    system = fourierMotzkin(system, v);
    if (trace && trace->onStep) trace->onStep("fourier-motzkin", v, system);
    result.recon.steps.push_back(std::move(step));
  }

  // Variables that cancelled out everywhere still need a value on replay.
  std::set<Var> assigned;
  std::set<Var> referenced = variablesOf(cs);
  for (const auto& step : result.recon.steps) {
    assigned.insert(step.var);
    for (const auto& [v, k] : step.solution.coeffs) referenced.insert(v);
  }
  for (Var v : referenced) {
    if (keep.count(v) || assigned.count(v)) continue;
    ReconstructionStep free;
    free.kind = ReconstructionStep::Kind::Bounded;
    free.var = v;
    result.recon.steps.push_back(std::move(free));
  }

  result.reduced = system;
  result.infeasible = anyContradiction(system);
  return result;
}

std::optional<Assignment> solveLinear(const std::vector<LinearConstraint>& cs) {
  EliminationResult r = eliminateVariables(cs, {});
  if (r.infeasible) return std::nullopt;
  Assignment a;
  r.recon.replay(a);
  for (const auto& c : cs) {
    if (!c.holds(a)) throw Error("internal-linear", "reconstructed point violates an input constraint");
  }
  return a;
}

} // namespace specbridge
