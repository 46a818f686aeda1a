// SPDX-License-Identifier: Apache-2.0
#include "specbridge/ast.hpp"

#include <stdexcept>

namespace specbridge {

namespace types {

namespace {
TypePtr make(TypeNode node, std::vector<TypePtr> args = {}) {
  auto t = std::make_shared<Type>();
  t->node = node;
  t->args = std::move(args);
  return t;
}
} // namespace

TypePtr rat() {
  static const TypePtr t = make(TypeNode::Rat);
  return t;
}

TypePtr boolean() {
  static const TypePtr t = make(TypeNode::Bool);
  return t;
}

TypePtr nat() {
  static const TypePtr t = make(TypeNode::Nat);
  return t;
}

TypePtr natLit(std::uint64_t n) {
  auto t = std::make_shared<Type>();
  t->node = TypeNode::NatLit;
  t->value = n;
  return t;
}

TypePtr index(TypePtr dim) { return make(TypeNode::Index, {std::move(dim)}); }

TypePtr index(std::uint64_t n) { return index(natLit(n)); }

TypePtr tensor(TypePtr elem, TypePtr dim) { return make(TypeNode::Tensor, {std::move(elem), std::move(dim)}); }

TypePtr tensor(TypePtr elem, const std::vector<std::uint64_t>& dims) {
  TypePtr result = std::move(elem);
  for (auto it = dims.rbegin(); it != dims.rend(); ++it) result = tensor(result, natLit(*it));
  return result;
}

TypePtr fun(TypePtr dom, TypePtr cod) { return make(TypeNode::Fun, {std::move(dom), std::move(cod)}); }

TypePtr var(std::string name) {
  auto t = std::make_shared<Type>();
  t->node = TypeNode::Var;
  t->name = std::move(name);
  return t;
}

TypePtr named(std::string name, std::vector<TypePtr> args) {
  auto t = std::make_shared<Type>();
  t->node = TypeNode::Named;
  t->name = std::move(name);
  t->args = std::move(args);
  return t;
}

TypePtr pi(std::string binder, Kind kind, TypePtr body) {
  auto t = std::make_shared<Type>();
  t->node = TypeNode::Pi;
  t->name = std::move(binder);
  t->binderKind = kind;
  t->args = {std::move(body)};
  return t;
}

TypePtr meta(std::uint64_t id) {
  auto t = std::make_shared<Type>();
  t->node = TypeNode::Meta;
  t->value = id;
  return t;
}

} // namespace types

namespace expr {

namespace {
std::shared_ptr<Expr> make(ExprNode node, SourcePos pos) {
  auto e = std::make_shared<Expr>();
  e->node = node;
  e->pos = pos;
  return e;
}
} // namespace

ExprPtr var(std::string name, SourcePos pos) {
  auto e = make(ExprNode::Var, pos);
  e->name = std::move(name);
  return e;
}

ExprPtr rat(Rational value, SourcePos pos) {
  auto e = make(ExprNode::RatLiteral, pos);
  e->rat = std::move(value);
  return e;
}

ExprPtr nat(std::uint64_t value, SourcePos pos) {
  auto e = make(ExprNode::NatLiteral, pos);
  e->nat = value;
  e->rat = Rational(static_cast<unsigned long>(value));
  return e;
}

ExprPtr boolean(bool value, SourcePos pos) { return make(value ? ExprNode::True : ExprNode::False, pos); }

ExprPtr unary(ExprNode node, ExprPtr operand, SourcePos pos) {
  auto e = make(node, pos);
  e->children = {std::move(operand)};
  return e;
}

ExprPtr binary(ExprNode node, ExprPtr lhs, ExprPtr rhs, SourcePos pos) {
  auto e = make(node, pos);
  e->children = {std::move(lhs), std::move(rhs)};
  return e;
}

ExprPtr nary(ExprNode node, std::vector<ExprPtr> children, SourcePos pos) {
  auto e = make(node, pos);
  e->children = std::move(children);
  return e;
}

ExprPtr app(ExprPtr fn, ExprPtr arg, SourcePos pos) { return binary(ExprNode::App, std::move(fn), std::move(arg), pos); }

ExprPtr binder(ExprNode node, std::string name, TypePtr annotation, ExprPtr body, SourcePos pos) {
  auto e = make(node, pos);
  e->name = std::move(name);
  e->binderType = std::move(annotation);
  e->children = {std::move(body)};
  return e;
}

ExprPtr let(std::string name, ExprPtr bound, ExprPtr body, SourcePos pos) {
  auto e = make(ExprNode::Let, pos);
  e->name = std::move(name);
  e->children = {std::move(bound), std::move(body)};
  return e;
}

ExprPtr ite(ExprPtr cond, ExprPtr then, ExprPtr otherwise, SourcePos pos) {
  return nary(ExprNode::If, {std::move(cond), std::move(then), std::move(otherwise)}, pos);
}

ExprPtr index(ExprPtr vec, ExprPtr idx, SourcePos pos) {
  return binary(ExprNode::Index, std::move(vec), std::move(idx), pos);
}

ExprPtr vec(std::vector<ExprPtr> elements, SourcePos pos) {
  return nary(ExprNode::VecLiteral, std::move(elements), pos);
}

ExprPtr fold(ExprPtr fn, ExprPtr init, ExprPtr vec, SourcePos pos) {
  return nary(ExprNode::Fold, {std::move(fn), std::move(init), std::move(vec)}, pos);
}

ExprPtr withChildren(const ExprPtr& e, std::vector<ExprPtr> children) {
  auto copy = std::make_shared<Expr>(*e);
  copy->children = std::move(children);
  return copy;
}

} // namespace expr

bool isComparison(ExprNode node) {
  switch (node) {
  case ExprNode::Eq:
  case ExprNode::Neq:
  case ExprNode::Leq:
  case ExprNode::Lt:
  case ExprNode::Geq:
  case ExprNode::Gt:
    return true;
  default:
    return false;
  }
}

bool isArithmetic(ExprNode node) {
  switch (node) {
  case ExprNode::Add:
  case ExprNode::Sub:
  case ExprNode::Mul:
  case ExprNode::Div:
  case ExprNode::Neg:
    return true;
  default:
    return false;
  }
}

bool isBinder(ExprNode node) {
  return node == ExprNode::Lambda || node == ExprNode::Forall || node == ExprNode::Exists ||
         node == ExprNode::Foreach || node == ExprNode::Let;
}

ExprNode flipComparison(ExprNode node) {
  switch (node) {
  case ExprNode::Leq: return ExprNode::Geq;
  case ExprNode::Lt: return ExprNode::Gt;
  case ExprNode::Geq: return ExprNode::Leq;
  case ExprNode::Gt: return ExprNode::Lt;
  case ExprNode::Eq:
  case ExprNode::Neq: return node;
  default: throw std::logic_error("flipComparison on non-comparison");
  }
}

ExprNode negateComparison(ExprNode node) {
  switch (node) {
  case ExprNode::Leq: return ExprNode::Gt;
  case ExprNode::Lt: return ExprNode::Geq;
  case ExprNode::Geq: return ExprNode::Lt;
  case ExprNode::Gt: return ExprNode::Leq;
  case ExprNode::Eq: return ExprNode::Neq;
  case ExprNode::Neq: return ExprNode::Eq;
  default: throw std::logic_error("negateComparison on non-comparison");
  }
}

std::string nodeName(ExprNode node) {
  switch (node) {
  case ExprNode::Lambda: return "Lambda";
  case ExprNode::App: return "App";
  case ExprNode::Var: return "Var";
  case ExprNode::RatLiteral: return "RatLiteral";
  case ExprNode::NatLiteral: return "NatLiteral";
  case ExprNode::Add: return "Add";
  case ExprNode::Sub: return "Sub";
  case ExprNode::Mul: return "Mul";
  case ExprNode::Div: return "Div";
  case ExprNode::Neg: return "Neg";
  case ExprNode::True: return "True";
  case ExprNode::False: return "False";
  case ExprNode::Not: return "Not";
  case ExprNode::And: return "And";
  case ExprNode::Or: return "Or";
  case ExprNode::Implies: return "Implies";
  case ExprNode::Eq: return "Eq";
  case ExprNode::Neq: return "Neq";
  case ExprNode::Leq: return "Leq";
  case ExprNode::Lt: return "Lt";
  case ExprNode::Geq: return "Geq";
  case ExprNode::Gt: return "Gt";
  case ExprNode::If: return "If";
  case ExprNode::Forall: return "Forall";
  case ExprNode::Exists: return "Exists";
  case ExprNode::VecLiteral: return "VecLiteral";
  case ExprNode::Index: return "Index";
  case ExprNode::Foreach: return "Foreach";
  case ExprNode::Fold: return "Fold";
  case ExprNode::Let: return "Let";
  }
  return "?";
}

std::string nodeName(TypeNode node) {
  switch (node) {
  case TypeNode::Pi: return "Pi";
  case TypeNode::Var: return "TypeVar";
  case TypeNode::Fun: return "FunType";
  case TypeNode::NatLit: return "NatLiteral";
  case TypeNode::Tensor: return "Tensor";
  case TypeNode::Index: return "Index";
  case TypeNode::Bool: return "Bool";
  case TypeNode::Rat: return "Rat";
  case TypeNode::Nat: return "Nat";
  case TypeNode::Named: return "Named";
  case TypeNode::Meta: return "Meta";
  }
  return "?";
}

std::string declKindName(DeclKind kind) {
  switch (kind) {
  case DeclKind::TypeSynonym: return "TypeSynonym";
  case DeclKind::Def: return "Def";
  case DeclKind::Network: return "Network";
  case DeclKind::Dataset: return "Dataset";
  case DeclKind::Parameter: return "Parameter";
  case DeclKind::Property: return "Property";
  }
  return "?";
}

const Decl* Program::find(const std::string& name) const {
  for (const auto& d : decls) {
    if (d.name == name) return &d;
  }
  return nullptr;
}

std::optional<std::size_t> Program::indexOf(const std::string& name) const {
  for (std::size_t i = 0; i < decls.size(); ++i) {
    if (decls[i].name == name) return i;
  }
  return std::nullopt;
}

bool structurallyEqual(const TypePtr& a, const TypePtr& b) {
  if (!a || !b) return !a && !b;
  if (a->node != b->node || a->name != b->name || a->value != b->value) return false;
  if (a->node == TypeNode::Pi && a->binderKind != b->binderKind) return false;
  if (a->args.size() != b->args.size()) return false;
  for (std::size_t i = 0; i < a->args.size(); ++i) {
    if (!structurallyEqual(a->args[i], b->args[i])) return false;
  }
  return true;
}

bool structurallyEqual(const ExprPtr& a, const ExprPtr& b) {
  if (!a || !b) return !a && !b;
  if (a->node != b->node || a->name != b->name) return false;
  if (a->node == ExprNode::RatLiteral && a->rat != b->rat) return false;
  if (a->node == ExprNode::NatLiteral && a->nat != b->nat) return false;
  if (!structurallyEqual(a->binderType, b->binderType)) return false;
  if (a->children.size() != b->children.size()) return false;
  for (std::size_t i = 0; i < a->children.size(); ++i) {
    if (!structurallyEqual(a->children[i], b->children[i])) return false;
  }
  return true;
}

bool structurallyEqual(const Program& a, const Program& b) {
  if (a.decls.size() != b.decls.size()) return false;
  for (std::size_t i = 0; i < a.decls.size(); ++i) {
    const Decl& x = a.decls[i];
    const Decl& y = b.decls[i];
    if (x.kind != y.kind || x.name != y.name || x.typeParams != y.typeParams) return false;
    if (!structurallyEqual(x.signature, y.signature) || !structurallyEqual(x.body, y.body) ||
        !structurallyEqual(x.synonymBody, y.synonymBody))
      return false;
  }
  return true;
}

} // namespace specbridge
