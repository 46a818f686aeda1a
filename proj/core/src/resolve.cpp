// SPDX-License-Identifier: Apache-2.0
#include "specbridge/resolve.hpp"

#include <map>
#include <set>

namespace specbridge {

namespace {

class Resolver {
public:
  explicit Resolver(const Program& p) : program_(p) {
    for (std::size_t i = 0; i < p.decls.size(); ++i) declaredAt_.emplace(p.decls[i].name, i);
  }

  ExprPtr free(const ExprPtr& e) {
    current_ = program_.decls.size();
    return expression(e, {});
  }

  Program run() {
    Program out;
    std::set<std::string> seen;
    for (std::size_t i = 0; i < program_.decls.size(); ++i) {
      const Decl& d = program_.decls[i];
      if (!seen.insert(d.name).second) {
        throw ScopeError("duplicate-declaration", "duplicate declaration of '" + d.name + "'", d.pos);
      }
      current_ = i;
      Decl r = d;
      if (d.kind == DeclKind::TypeSynonym) {
        std::set<std::string> params(d.typeParams.begin(), d.typeParams.end());
        if (params.size() != d.typeParams.size()) {
          throw ScopeError("duplicate-declaration", "repeated parameter in type synonym '" + d.name + "'", d.pos);
        }
        r.synonymBody = type(d.synonymBody, params);
      }
      std::set<std::string> typeVars;
      if (d.signature) r.signature = type(d.signature, typeVars);
      if (d.body) {
        typeVars = piBinders(d.signature);
        r.body = expression(d.body, typeVars);
      }
      out.decls.push_back(std::move(r));
    }
    return out;
  }

private:
  static std::set<std::string> piBinders(TypePtr t) {
    std::set<std::string> names;
    while (t && t->node == TypeNode::Pi) {
      names.insert(t->name);
      t = t->args[0];
    }
    return names;
  }

  [[noreturn]] void unbound(const std::string& name, SourcePos pos, bool isType) const {
    auto it = declaredAt_.find(name);
    if (it != declaredAt_.end() && it->second >= current_) {
      throw ScopeError("forward-reference",
                       "'" + name + "' is used before its declaration (declarations must precede their uses)", pos);
    }
    throw ScopeError("unbound-identifier", std::string("unbound ") + (isType ? "type " : "") + "identifier '" + name + "'",
                     pos);
  }

  std::optional<std::size_t> earlier(const std::string& name) const {
    auto it = declaredAt_.find(name);
    if (it == declaredAt_.end() || it->second >= current_) return std::nullopt;
    return it->second;
  }

  TypePtr type(const TypePtr& t, std::set<std::string> vars) {
    if (!t) return t;
    auto copy = std::make_shared<Type>(*t);
    switch (t->node) {
    case TypeNode::Pi:
      vars.insert(t->name);
      copy->args[0] = type(t->args[0], vars);
      return copy;
    case TypeNode::Named: {
      if (vars.count(t->name)) {
        if (!t->args.empty()) {
          throw ScopeError("unexpected-type-arguments", "type variable '" + t->name + "' cannot be applied", t->pos);
        }
        auto v = std::make_shared<Type>(*types::var(t->name));
        v->pos = t->pos;
        return v;
      }
      auto idx = earlier(t->name);
      if (!idx) unbound(t->name, t->pos, true);
      const Decl& target = program_.decls[*idx];
      if (target.kind != DeclKind::TypeSynonym) {
        throw ScopeError("not-a-type", "'" + t->name + "' is a value, not a type", t->pos);
      }
      if (target.typeParams.size() != t->args.size()) {
        throw ScopeError("synonym-arity", "type synonym '" + t->name + "' expects " +
                                              std::to_string(target.typeParams.size()) + " argument(s)",
                         t->pos);
      }
      for (auto& a : copy->args) a = type(a, vars);
      return copy;
    }
    default:
      for (auto& a : copy->args) a = type(a, vars);
      return copy;
    }
  }

  ExprPtr expression(const ExprPtr& e, const std::set<std::string>& typeVars) {
    std::vector<std::string> scope;
    return expression(e, scope, typeVars);
  }

  ExprPtr expression(const ExprPtr& e, std::vector<std::string>& scope, const std::set<std::string>& typeVars) {
    auto copy = std::make_shared<Expr>(*e);
    if (copy->binderType) copy->binderType = type(copy->binderType, typeVars);

    if (e->node == ExprNode::Var) {
      for (int i = static_cast<int>(scope.size()) - 1; i >= 0; --i) {
        if (scope[static_cast<std::size_t>(i)] == e->name) {
          copy->scope = VarScope::Bound;
          copy->level = i;
          return copy;
        }
      }
      auto idx = earlier(e->name);
      if (!idx) unbound(e->name, e->pos, false);
      if (program_.decls[*idx].kind == DeclKind::TypeSynonym) {
        throw ScopeError("not-a-value", "type synonym '" + e->name + "' used as a value", e->pos);
      }
      copy->scope = VarScope::Global;
      copy->level = static_cast<int>(*idx);
      return copy;
    }

    if (e->node == ExprNode::Let) {
      copy->children[0] = expression(e->children[0], scope, typeVars);
      scope.push_back(e->name);
      copy->children[1] = expression(e->children[1], scope, typeVars);
      scope.pop_back();
      return copy;
    }

    if (isBinder(e->node)) {
      scope.push_back(e->name);
      copy->children[0] = expression(e->children[0], scope, typeVars);
      scope.pop_back();
      return copy;
    }

    for (auto& c : copy->children) c = expression(c, scope, typeVars);
    return copy;
  }

  const Program& program_;
  std::map<std::string, std::size_t> declaredAt_;
  std::size_t current_ = 0;
};

} // namespace

Program resolveNames(const Program& program) { return Resolver(program).run(); }

ExprPtr resolveExpression(const Program& program, const ExprPtr& e) { return Resolver(program).free(e); }

} // namespace specbridge
