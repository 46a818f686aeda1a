// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "specbridge/diagnostics.hpp"
#include "specbridge/rational.hpp"

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace specbridge {

using Var = int;
using Assignment = std::map<Var, Rational>;

/// Affine form sum(c_v * v) + constant. Zero coefficients are never stored.
struct LinearExpr {
  std::map<Var, Rational> coeffs;
  Rational constant;

  static LinearExpr ofConstant(Rational c);
  static LinearExpr ofVar(Var v, Rational c = 1);

  Rational coeff(Var v) const;
  bool isConstant() const { return coeffs.empty(); }
  bool mentions(Var v) const { return coeffs.count(v) != 0; }

  LinearExpr& operator+=(const LinearExpr& other);
  LinearExpr& operator-=(const LinearExpr& other);
  LinearExpr& operator*=(const Rational& k);
  friend LinearExpr operator+(LinearExpr a, const LinearExpr& b) { return a += b; }
  friend LinearExpr operator-(LinearExpr a, const LinearExpr& b) { return a -= b; }
  friend LinearExpr operator*(LinearExpr a, const Rational& k) { return a *= k; }
  friend bool operator==(const LinearExpr& a, const LinearExpr& b) {
    return a.coeffs == b.coeffs && a.constant == b.constant;
  }

  /// Replaces v by `by`.
  LinearExpr substitute(Var v, const LinearExpr& by) const;
  /// Value under an assignment that covers every variable.
  Rational evaluate(const Assignment& a) const;
};

enum class Relation { Eq, Le, Lt };

std::string relationSymbol(Relation r);

/// Canonical form `lhs rel 0`.
struct LinearConstraint {
  LinearExpr lhs;
  Relation rel = Relation::Le;

  /// lhs rel rhs, folded into canonical form.
  static LinearConstraint make(const LinearExpr& lhs, Relation rel, const LinearExpr& rhs);

  /// Scales so the first coefficient has absolute value one (and is positive
  /// for equalities).
  LinearConstraint normalised() const;
  bool isConstant() const { return lhs.isConstant(); }
  /// Truth of a variable-free constraint.
  bool constantTruth() const;
  bool holds(const Assignment& a) const;

  friend bool operator==(const LinearConstraint& a, const LinearConstraint& b) {
    return a.rel == b.rel && a.lhs == b.lhs;
  }
};

using VarNamer = std::function<std::string(Var)>;

std::string toString(const LinearExpr& e, const VarNamer& name);
std::string toString(const LinearConstraint& c, const VarNamer& name);

/// One step of a reconstruction recipe. Solved steps set the variable to an
/// affine expression over later-eliminated or kept variables; Bounded steps
/// pick a point between the bounds the variable had when it was eliminated.
struct ReconstructionStep {
  enum class Kind { Solved, Bounded };
  Kind kind = Kind::Solved;
  Var var = 0;
  LinearExpr solution;
  std::vector<LinearConstraint> bounds;
};

struct ReconstructionMap {
  std::vector<ReconstructionStep> steps;

  void append(const ReconstructionMap& later);
  /// Extends `a` (an assignment to the surviving variables) to every
  /// eliminated variable by replaying the steps in reverse.
  void replay(Assignment& a) const;
};

struct GaussianResult {
  ReconstructionMap substitution;
  std::vector<LinearConstraint> residual;
  std::vector<Var> unsolved;
  bool infeasible = false;
};

/// Solves each target that has a pivot in the equalities and substitutes it
/// out. Targets without a pivot are reported in `unsolved`.
GaussianResult gaussianEliminate(const std::vector<LinearConstraint>& eqs, const std::vector<Var>& targets);

/// Projects v out of a system of inequalities (equalities mentioning v are
/// treated as two inequalities).
std::vector<LinearConstraint> fourierMotzkin(const std::vector<LinearConstraint>& cs, Var v);

struct EliminationResult {
  std::vector<LinearConstraint> reduced;
  ReconstructionMap recon;
  bool infeasible = false;
};

struct EliminationTrace {
  std::function<void(const std::string& stage, Var v, const std::vector<LinearConstraint>&)> onStep;
};

/// Eliminates every variable outside `keep`: Gaussian first for variables
/// with an equality pivot, then Fourier-Motzkin in ascending occurrence order.
EliminationResult eliminateVariables(const std::vector<LinearConstraint>& cs, const std::set<Var>& keep,
                                     const EliminationTrace* trace = nullptr);

/// Exact decision: a satisfying assignment, or nullopt if infeasible.
std::optional<Assignment> solveLinear(const std::vector<LinearConstraint>& cs);

std::set<Var> variablesOf(const std::vector<LinearConstraint>& cs);

/// Canonicalises, drops tautologies and syntactic duplicates.
std::vector<LinearConstraint> simplify(const std::vector<LinearConstraint>& cs);

} // namespace specbridge
