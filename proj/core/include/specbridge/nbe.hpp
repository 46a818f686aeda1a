// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "specbridge/typecheck.hpp"

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace specbridge {

/// A concrete value supplied from outside the program: a parameter, a
/// dataset, or an assignment to a quantified variable.
struct GroundValue {
  enum class Kind { Rat, Bool, Vec };
  Kind kind = Kind::Rat;
  Rational rat;
  bool boolean = false;
  std::vector<GroundValue> elems;

  static GroundValue ofRat(Rational r);
  static GroundValue ofBool(bool b);
  static GroundValue ofVec(std::vector<GroundValue> elems);
  static GroundValue ofVector(const std::vector<Rational>& xs);

  /// Row-major flattening of the leaves.
  std::vector<Rational> flatten() const;
};

using NetworkFn = std::function<std::vector<Rational>(const std::vector<Rational>&)>;

struct Value;
using ValuePtr = std::shared_ptr<const Value>;

enum class ValueKind { Closure, Rat, Bool, Vec, Neutral };

/// Semantic domain. Neutral values carry their residual (normal) syntax.
/// Tensor-valued neutrals are always eta-expanded into Vec of neutrals.
struct Value {
  ValueKind kind = ValueKind::Rat;
  Rational rat;
  bool boolean = false;
  std::vector<ValuePtr> elems;
  std::function<ValuePtr(const ValuePtr&)> fn;
  ExprPtr residual;
};

namespace values {
ValuePtr rat(Rational r);
ValuePtr boolean(bool b);
ValuePtr vec(std::vector<ValuePtr> elems);
ValuePtr neutral(ExprPtr residual);
ValuePtr closure(std::function<ValuePtr(const ValuePtr&)> fn);
ValuePtr fromGround(const GroundValue& g);
} // namespace values

struct NormaliseOptions {
  /// Values for `@parameter`/`@dataset` declarations; unbound ones stay neutral.
  std::map<std::string, GroundValue> resources;
};

struct GroundEnv {
  /// Assignment for quantified variables over infinite domains, by binder name.
  std::map<std::string, GroundValue> quantified;
  std::map<std::string, NetworkFn> networks;
  std::map<std::string, GroundValue> resources;
};

/// Evaluates a closed, checked expression (bound variable levels start at
/// zero) in the empty environment.
ValuePtr eval(const TypedProgram& tp, const ExprPtr& e, const NormaliseOptions& options = {});

/// Readback of a first-order value into a normal expression.
ExprPtr quote(const ValuePtr& v);

/// Normal form of an `@property` declaration: definitions inlined, finite
/// loops unrolled, implications removed and negations pushed to atoms.
ExprPtr normaliseProperty(const TypedProgram& tp, const std::string& name, const NormaliseOptions& options = {});

/// Normal form of a closed checked Bool expression (also accepts normal forms).
ExprPtr normaliseExpr(const TypedProgram& tp, const ExprPtr& e, const NormaliseOptions& options = {});

/// Negation in negation normal form: comparisons flip, connectives dualise.
ExprPtr negateNormal(const ExprPtr& e);

/// Exact evaluation with every quantifier over an infinite domain
/// instantiated from `env.quantified` and networks run concretely.
bool evaluateGround(const TypedProgram& tp, const ExprPtr& e, const GroundEnv& env);

} // namespace specbridge
