// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "specbridge/diagnostics.hpp"
#include "specbridge/rational.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace specbridge {

enum class Kind { Type, Nat };

enum class TypeNode {
  Pi,     // forall (n : Nat) . body
  Var,    // shape/type variable bound by Pi or a synonym parameter
  Fun,    // a -> b
  NatLit, // 2
  Tensor, // Tensor elem [dim]; rank-k tensors nest
  Index,  // Index n
  Bool,
  Rat,
  Nat,
  Named, // reference to a type synonym, possibly applied
  Meta,  // unification variable, internal to the checker
};

struct Type;
using TypePtr = std::shared_ptr<const Type>;

struct Type {
  TypeNode node = TypeNode::Rat;
  std::string name;          // Pi binder, Var, Named
  std::uint64_t value = 0;   // NatLit value, Meta id
  Kind binderKind = Kind::Nat;
  std::vector<TypePtr> args; // Fun [dom, cod]; Tensor [elem, dim]; Index [dim]; Pi [body]; Named [params...]
  SourcePos pos;
};

namespace types {
TypePtr rat();
TypePtr boolean();
TypePtr nat();
TypePtr natLit(std::uint64_t n);
TypePtr index(TypePtr dim);
TypePtr index(std::uint64_t n);
TypePtr tensor(TypePtr elem, TypePtr dim);
TypePtr tensor(TypePtr elem, const std::vector<std::uint64_t>& dims);
TypePtr fun(TypePtr dom, TypePtr cod);
TypePtr var(std::string name);
TypePtr named(std::string name, std::vector<TypePtr> args = {});
TypePtr pi(std::string binder, Kind kind, TypePtr body);
TypePtr meta(std::uint64_t id);
} // namespace types

enum class ExprNode {
  Lambda,
  App,
  Var,
  RatLiteral,
  NatLiteral,
  Add,
  Sub,
  Mul,
  Div,
  Neg,
  True,
  False,
  Not,
  And,
  Or,
  Implies,
  Eq,
  Neq,
  Leq,
  Lt,
  Geq,
  Gt,
  If,
  Forall,
  Exists,
  VecLiteral,
  Index,
  Foreach,
  Fold,
  Let,
};

enum class VarScope { Unresolved, Bound, Global };

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

/// Children layout by node:
///   Lambda/Forall/Exists/Foreach [body] with `name` as binder
///   Let [bound, body] with `name` as binder
///   App [fn, arg]; Index [vector, index]; If [cond, then, else]; Fold [fn, init, vector]
///   binary operators [lhs, rhs]; Neg/Not [operand]; VecLiteral [elements...]
struct Expr {
  ExprNode node = ExprNode::True;
  std::vector<ExprPtr> children;
  std::string name;
  TypePtr binderType; // optional binder annotation; Foreach carries Index n after checking
  Rational rat;       // RatLiteral
  std::uint64_t nat = 0;
  VarScope scope = VarScope::Unresolved;
  int level = -1; // de Bruijn level for Bound, declaration index for Global
  std::vector<TypePtr> typeArgs; // instantiation of a polymorphic global
  TypePtr type;                  // filled in by the type checker
  bool chained = false;          // And built from `a <= b <= c`
  SourcePos pos;
};

namespace expr {
ExprPtr var(std::string name, SourcePos pos = {});
ExprPtr rat(Rational value, SourcePos pos = {});
ExprPtr nat(std::uint64_t value, SourcePos pos = {});
ExprPtr boolean(bool value, SourcePos pos = {});
ExprPtr unary(ExprNode node, ExprPtr operand, SourcePos pos = {});
ExprPtr binary(ExprNode node, ExprPtr lhs, ExprPtr rhs, SourcePos pos = {});
ExprPtr nary(ExprNode node, std::vector<ExprPtr> children, SourcePos pos = {});
ExprPtr app(ExprPtr fn, ExprPtr arg, SourcePos pos = {});
ExprPtr binder(ExprNode node, std::string name, TypePtr annotation, ExprPtr body, SourcePos pos = {});
ExprPtr let(std::string name, ExprPtr bound, ExprPtr body, SourcePos pos = {});
ExprPtr ite(ExprPtr cond, ExprPtr then, ExprPtr otherwise, SourcePos pos = {});
ExprPtr index(ExprPtr vec, ExprPtr idx, SourcePos pos = {});
ExprPtr vec(std::vector<ExprPtr> elements, SourcePos pos = {});
ExprPtr fold(ExprPtr fn, ExprPtr init, ExprPtr vec, SourcePos pos = {});

/// Copy of `e` with its children replaced.
ExprPtr withChildren(const ExprPtr& e, std::vector<ExprPtr> children);
} // namespace expr

bool isComparison(ExprNode node);
bool isArithmetic(ExprNode node);
bool isBinder(ExprNode node);

/// Comparison with swapped operands: a < b  <=>  b > a.
ExprNode flipComparison(ExprNode node);
/// Negated comparison: not (a < b)  <=>  a >= b.
ExprNode negateComparison(ExprNode node);

std::string nodeName(ExprNode node);
std::string nodeName(TypeNode node);

enum class DeclKind { TypeSynonym, Def, Network, Dataset, Parameter, Property };

std::string declKindName(DeclKind kind);

struct Decl {
  DeclKind kind = DeclKind::Def;
  std::string name;
  std::vector<std::string> typeParams; // synonym parameters
  TypePtr signature;                   // null for unannotated defs
  ExprPtr body;                        // null for Network/Dataset/Parameter and type synonyms
  TypePtr synonymBody;                 // TypeSynonym only
  SourcePos pos;
};

struct Program {
  std::vector<Decl> decls;

  const Decl* find(const std::string& name) const;
  std::optional<std::size_t> indexOf(const std::string& name) const;
};

/// Structural equality ignoring positions, resolution and checker annotations.
bool structurallyEqual(const TypePtr& a, const TypePtr& b);
bool structurallyEqual(const ExprPtr& a, const ExprPtr& b);
bool structurallyEqual(const Program& a, const Program& b);

} // namespace specbridge
