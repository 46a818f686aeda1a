// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "specbridge/ast.hpp"

#include <utility>
#include <vector>

namespace specbridge {

/// A checked program. `program` is the elaborated copy of the input: every
/// expression node carries its type, surface `forall` over tensor-valued
/// bodies has become Foreach, and polymorphic references carry their
/// instantiation. `declTypes[i]` is the synonym-free type of declaration i
/// (null for type synonyms).
struct TypedProgram {
  Program program;
  std::vector<TypePtr> declTypes;

  const Decl& decl(const std::string& name) const;
  std::size_t indexOf(const std::string& name) const;
};

/// Kind of a well-scoped type: Type or Nat. Shape positions must be Nat.
Kind inferKind(const Program& program, const TypePtr& type);

/// Replaces synonym references by their (recursively expanded) bodies.
TypePtr expandSynonyms(const Program& program, const TypePtr& type);

/// Bidirectional checking of a name-resolved program; throws TypeError.
TypedProgram checkProgram(const Program& program);

/// Checks a closed expression, resolved against `tp.program`, at `expected`.
/// Returns the elaborated expression.
ExprPtr checkExpression(const TypedProgram& tp, const ExprPtr& e, const TypePtr& expected);

struct NetworkShape {
  std::uint64_t inputDim = 0;
  std::uint64_t outputDim = 0;
};

/// Input and output dimension of an `@network` declaration of type
/// `Tensor Rat [m] -> Tensor Rat [n]`.
NetworkShape shapeOf(const TypedProgram& tp, const std::string& networkName);

/// Dimensions of a rank-k tensor type (empty for a scalar); throws if the
/// type is not a tensor of Rat with literal dimensions.
std::vector<std::uint64_t> tensorDims(const TypePtr& type);

/// Structural type equality after synonym expansion (no metas).
bool sameType(const TypePtr& a, const TypePtr& b);

} // namespace specbridge
