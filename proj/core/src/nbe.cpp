// SPDX-License-Identifier: Apache-2.0
#include "specbridge/nbe.hpp"

#include "specbridge/printer.hpp"

#include <algorithm>
#include <optional>

namespace specbridge {

GroundValue GroundValue::ofRat(Rational r) {
  GroundValue g;
  g.kind = Kind::Rat;
  g.rat = std::move(r);
  return g;
}

GroundValue GroundValue::ofBool(bool b) {
  GroundValue g;
  g.kind = Kind::Bool;
  g.boolean = b;
  return g;
}

GroundValue GroundValue::ofVec(std::vector<GroundValue> elems) {
  GroundValue g;
  g.kind = Kind::Vec;
  g.elems = std::move(elems);
  return g;
}

GroundValue GroundValue::ofVector(const std::vector<Rational>& xs) {
  std::vector<GroundValue> elems;
  elems.reserve(xs.size());
  for (const auto& x : xs) elems.push_back(ofRat(x));
  return ofVec(std::move(elems));
}

std::vector<Rational> GroundValue::flatten() const {
  std::vector<Rational> out;
  std::function<void(const GroundValue&)> walk = [&](const GroundValue& g) {
    if (g.kind == Kind::Vec) {
      for (const auto& e : g.elems) walk(e);
    } else if (g.kind == Kind::Rat) {
      out.push_back(g.rat);
    } else {
      out.push_back(Rational(g.boolean ? 1 : 0));
    }
  };
  walk(*this);
  return out;
}

namespace values {

ValuePtr rat(Rational r) {
  auto v = std::make_shared<Value>();
  v->kind = ValueKind::Rat;
  v->rat = std::move(r);
  return v;
}

ValuePtr boolean(bool b) {
  auto v = std::make_shared<Value>();
  v->kind = ValueKind::Bool;
  v->boolean = b;
  return v;
}

ValuePtr vec(std::vector<ValuePtr> elems) {
  auto v = std::make_shared<Value>();
  v->kind = ValueKind::Vec;
  v->elems = std::move(elems);
  return v;
}

ValuePtr neutral(ExprPtr residual) {
  auto v = std::make_shared<Value>();
  v->kind = ValueKind::Neutral;
  v->residual = std::move(residual);
  return v;
}

ValuePtr closure(std::function<ValuePtr(const ValuePtr&)> fn) {
  auto v = std::make_shared<Value>();
  v->kind = ValueKind::Closure;
  v->fn = std::move(fn);
  return v;
}

ValuePtr fromGround(const GroundValue& g) {
  switch (g.kind) {
  case GroundValue::Kind::Rat:
    return rat(g.rat);
  case GroundValue::Kind::Bool:
    return boolean(g.boolean);
  case GroundValue::Kind::Vec: {
    std::vector<ValuePtr> elems;
    for (const auto& e : g.elems) elems.push_back(fromGround(e));
    return vec(std::move(elems));
  }
  }
  return nullptr;
}

} // namespace values

ExprPtr negateNormal(const ExprPtr& e) {
  switch (e->node) {
  case ExprNode::True:
    return expr::boolean(false, e->pos);
  case ExprNode::False:
    return expr::boolean(true, e->pos);
  case ExprNode::Not:
    return e->children[0];
  case ExprNode::And:
  case ExprNode::Or: {
    auto copy = std::make_shared<Expr>(*e);
    copy->node = e->node == ExprNode::And ? ExprNode::Or : ExprNode::And;
    copy->chained = false;
    copy->type = nullptr;
    for (auto& c : copy->children) c = negateNormal(c);
    return copy;
  }
  case ExprNode::Implies:
    return expr::binary(ExprNode::And, e->children[0], negateNormal(e->children[1]), e->pos);
  case ExprNode::Forall:
  case ExprNode::Exists: {
    auto copy = std::make_shared<Expr>(*e);
    copy->node = e->node == ExprNode::Forall ? ExprNode::Exists : ExprNode::Forall;
    copy->children[0] = negateNormal(e->children[0]);
    return copy;
  }
  case ExprNode::If: {
    auto copy = std::make_shared<Expr>(*e);
    copy->children[1] = negateNormal(e->children[1]);
    copy->children[2] = negateNormal(e->children[2]);
    return copy;
  }
  default:
    if (isComparison(e->node)) {
      auto copy = std::make_shared<Expr>(*e);
      copy->node = negateComparison(e->node);
      copy->type = nullptr;
      return copy;
    }
    return expr::unary(ExprNode::Not, e, e->pos);
  }
}

namespace {

bool containsClosure(const ValuePtr& v) {
  if (v->kind == ValueKind::Closure) return true;
  return std::any_of(v->elems.begin(), v->elems.end(), containsClosure);
}

ExprPtr boundVar(const std::string& name, int level) {
  auto v = std::make_shared<Expr>();
  v->node = ExprNode::Var;
  v->name = name;
  v->scope = VarScope::Bound;
  v->level = level;
  return v;
}

ExprPtr globalVar(const std::string& name, std::size_t index) {
  auto v = std::make_shared<Expr>();
  v->node = ExprNode::Var;
  v->name = name;
  v->scope = VarScope::Global;
  v->level = static_cast<int>(index);
  return v;
}

ExprPtr quoteImpl(const ValuePtr& v) {
  switch (v->kind) {
  case ValueKind::Rat:
    return expr::rat(v->rat);
  case ValueKind::Bool:
    return expr::boolean(v->boolean);
  case ValueKind::Neutral:
    return v->residual;
  case ValueKind::Closure:
    throw Error("internal-readback", "cannot read back a function value");
  case ValueKind::Vec: {
    std::vector<ExprPtr> elems;
    elems.reserve(v->elems.size());
    for (const auto& e : v->elems) elems.push_back(quoteImpl(e));
    // Contract an eta-expanded vector [b ! 0, ..., b ! n-1] back to b.
    if (!elems.empty()) {
      ExprPtr base;
      bool contractible = true;
      for (std::size_t k = 0; k < elems.size() && contractible; ++k) {
        const ExprPtr& el = elems[k];
        if (el->node != ExprNode::Index || el->children[1]->node != ExprNode::NatLiteral ||
            el->children[1]->nat != k) {
          contractible = false;
        } else if (k == 0) {
          base = el->children[0];
        } else if (el->children[0] != base) {
          contractible = false;
        }
      }
      if (contractible) return base;
    }
    return expr::vec(std::move(elems));
  }
  }
  return nullptr;
}

struct Env {
  std::vector<ValuePtr> vals;
  std::map<std::string, std::uint64_t> ty;
};

class Evaluator : public std::enable_shared_from_this<Evaluator> {
public:
  Evaluator(const TypedProgram& tp, const NormaliseOptions* options, const GroundEnv* ground)
      : tp_(tp), options_(options), ground_(ground), cache_(tp.program.decls.size()) {}

  ValuePtr eval(const ExprPtr& e, const Env& env) {
    switch (e->node) {
    case ExprNode::Var:
      return variable(e, env);
    case ExprNode::RatLiteral:
      return values::rat(e->rat);
    case ExprNode::NatLiteral:
      return values::rat(Rational(static_cast<unsigned long>(e->nat)));
    case ExprNode::True:
      return values::boolean(true);
    case ExprNode::False:
      return values::boolean(false);
    case ExprNode::Add:
    case ExprNode::Sub:
    case ExprNode::Mul:
    case ExprNode::Div:
      return arith(e, eval(e->children[0], env), eval(e->children[1], env));
    case ExprNode::Neg: {
      ValuePtr a = eval(e->children[0], env);
      if (a->kind == ValueKind::Rat) return values::rat(-a->rat);
      return values::neutral(expr::unary(ExprNode::Neg, quoteImpl(a), e->pos));
    }
    case ExprNode::Not:
      return negate(eval(e->children[0], env));
    case ExprNode::And:
    case ExprNode::Or:
      return connective(e->node, eval(e->children[0], env), eval(e->children[1], env));
    case ExprNode::Implies:
      return connective(ExprNode::Or, negate(eval(e->children[0], env)), eval(e->children[1], env));
    case ExprNode::Eq:
    case ExprNode::Neq:
    case ExprNode::Leq:
    case ExprNode::Lt:
    case ExprNode::Geq:
    case ExprNode::Gt:
      return compare(e, eval(e->children[0], env), eval(e->children[1], env));
    case ExprNode::If: {
      ValuePtr c = eval(e->children[0], env);
      if (c->kind == ValueKind::Bool) return eval(e->children[c->boolean ? 1 : 2], env);
      return blend(quoteImpl(c), eval(e->children[1], env), eval(e->children[2], env));
    }
    case ExprNode::Forall:
    case ExprNode::Exists:
      return quantifier(e, env);
    case ExprNode::Foreach: {
      std::uint64_t n = indexBound(e->binderType, env, e->pos);
      std::vector<ValuePtr> elems;
      elems.reserve(n);
      for (std::uint64_t i = 0; i < n; ++i) {
        Env inner = env;
        inner.vals.push_back(values::rat(Rational(static_cast<unsigned long>(i))));
        elems.push_back(eval(e->children[0], inner));
      }
      return values::vec(std::move(elems));
    }
    case ExprNode::VecLiteral: {
      std::vector<ValuePtr> elems;
      for (const auto& c : e->children) elems.push_back(eval(c, env));
      return values::vec(std::move(elems));
    }
    case ExprNode::Index:
      return index(e, eval(e->children[0], env), eval(e->children[1], env));
    case ExprNode::Fold: {
      ValuePtr f = eval(e->children[0], env);
      ValuePtr acc = eval(e->children[1], env);
      ValuePtr v = eval(e->children[2], env);
      if (v->kind != ValueKind::Vec) throw Error("internal-eval", "fold over a non-vector value", e->pos);
      for (auto it = v->elems.rbegin(); it != v->elems.rend(); ++it) acc = apply(apply(f, *it, e->pos), acc, e->pos);
      return acc;
    }
    case ExprNode::Let: {
      Env inner = env;
      inner.vals.push_back(eval(e->children[0], env));
      return eval(e->children[1], inner);
    }
    case ExprNode::Lambda: {
      auto self = shared_from_this();
      ExprPtr body = e->children[0];
      return values::closure([self, env, body](const ValuePtr& arg) {
        Env inner = env;
        inner.vals.push_back(arg);
        return self->eval(body, inner);
      });
    }
    case ExprNode::App:
      return apply(eval(e->children[0], env), eval(e->children[1], env), e->pos);
    }
    throw Error("internal-eval", "unhandled node " + nodeName(e->node), e->pos);
  }

private:
  // ---- variables and globals ---------------------------------------------

  ValuePtr variable(const ExprPtr& e, const Env& env) {
    if (e->scope == VarScope::Bound) {
      if (e->level < 0 || static_cast<std::size_t>(e->level) >= env.vals.size()) {
        throw Error("internal-eval", "variable '" + e->name + "' is out of scope", e->pos);
      }
      return env.vals[static_cast<std::size_t>(e->level)];
    }
    if (e->scope != VarScope::Global) throw Error("internal-eval", "unresolved variable '" + e->name + "'", e->pos);
    std::vector<std::uint64_t> args;
    for (const auto& t : e->typeArgs) args.push_back(natValue(t, env, e->pos));
    return global(static_cast<std::size_t>(e->level), args, e->pos);
  }

  ValuePtr global(std::size_t idx, const std::vector<std::uint64_t>& typeArgs, SourcePos pos) {
    if (typeArgs.empty() && cache_[idx]) return *cache_[idx];
    const Decl& d = tp_.program.decls[idx];
    const TypePtr& declType = tp_.declTypes[idx];
    ValuePtr v;
    switch (d.kind) {
    case DeclKind::TypeSynonym:
      throw Error("internal-eval", "type synonym '" + d.name + "' used as a value", pos);
    case DeclKind::Def:
    case DeclKind::Property: {
      Env env;
      TypePtr t = declType;
      std::size_t k = 0;
      while (t && t->node == TypeNode::Pi) {
        if (k >= typeArgs.size()) throw Error("internal-eval", "missing shape argument for '" + d.name + "'", pos);
        env.ty[t->name] = typeArgs[k++];
        t = t->args[0];
      }
      v = eval(d.body, env);
      break;
    }
    case DeclKind::Network:
      v = network(idx);
      break;
    case DeclKind::Dataset:
    case DeclKind::Parameter:
      v = resource(idx);
      break;
    }
    if (typeArgs.empty() && !containsClosure(v)) cache_[idx] = v;
    return v;
  }

  const GroundValue* boundResource(const std::string& name) const {
    if (ground_) {
      auto it = ground_->resources.find(name);
      if (it != ground_->resources.end()) return &it->second;
    }
    if (options_) {
      auto it = options_->resources.find(name);
      if (it != options_->resources.end()) return &it->second;
    }
    return nullptr;
  }

  ValuePtr resource(std::size_t idx) {
    const Decl& d = tp_.program.decls[idx];
    const TypePtr& t = tp_.declTypes[idx];
    if (const GroundValue* g = boundResource(d.name)) {
      ValuePtr v = values::fromGround(*g);
      checkShape(v, t, d.name);
      return v;
    }
    if (ground_) throw ResourceError("unbound-resource", "no value bound for '" + d.name + "'", d.pos);
    if (t->node == TypeNode::Tensor) return etaExpand(globalVar(d.name, idx), tensorDims(t));
    return values::neutral(globalVar(d.name, idx));
  }

  static void checkShape(const ValuePtr& v, const TypePtr& t, const std::string& name) {
    auto fail = [&] {
      throw ResourceError("resource-shape-mismatch", "value bound for '" + name + "' does not have type " + print(t));
    };
    switch (t->node) {
    case TypeNode::Rat:
    case TypeNode::Nat:
      if (v->kind != ValueKind::Rat) fail();
      if (t->node == TypeNode::Nat && (!isInteger(v->rat) || v->rat < 0)) fail();
      return;
    case TypeNode::Bool:
      if (v->kind != ValueKind::Bool) fail();
      return;
    case TypeNode::Tensor: {
      if (v->kind != ValueKind::Vec || t->args[1]->node != TypeNode::NatLit || v->elems.size() != t->args[1]->value) {
        fail();
      }
      for (const auto& el : v->elems) checkShape(el, t->args[0], name);
      return;
    }
    default:
      fail();
    }
  }

  ValuePtr network(std::size_t idx) {
    const Decl& d = tp_.program.decls[idx];
    NetworkShape shape = shapeOf(tp_, d.name);
    auto self = shared_from_this();
    if (ground_) {
      auto it = ground_->networks.find(d.name);
      if (it == ground_->networks.end()) {
        throw ResourceError("unbound-resource", "no implementation bound for network '" + d.name + "'", d.pos);
      }
      NetworkFn fn = it->second;
      std::string name = d.name;
      return values::closure([fn, shape, name](const ValuePtr& arg) {
        if (arg->kind != ValueKind::Vec || arg->elems.size() != shape.inputDim) {
          throw Error("internal-eval", "network '" + name + "' applied to a value of the wrong shape");
        }
        std::vector<Rational> in;
        for (const auto& el : arg->elems) {
          if (el->kind != ValueKind::Rat) throw Error("not-ground", "network '" + name + "' applied to a symbolic input");
          in.push_back(el->rat);
        }
        std::vector<Rational> out = fn(in);
        if (out.size() != shape.outputDim) {
          throw ResourceError("resource-shape-mismatch", "network '" + name + "' produced " +
                                                             std::to_string(out.size()) + " outputs");
        }
        std::vector<ValuePtr> elems;
        for (auto& o : out) elems.push_back(values::rat(o));
        return values::vec(std::move(elems));
      });
    }
    ExprPtr head = globalVar(d.name, idx);
    return values::closure([self, head, shape](const ValuePtr& arg) {
      ExprPtr app = expr::app(head, quoteImpl(arg));
      return self->etaExpand(app, {shape.outputDim});
    });
  }

  // ---- shapes ------------------------------------------------------------

  static std::uint64_t natValue(const TypePtr& t, const Env& env, SourcePos pos) {
    if (t->node == TypeNode::NatLit) return t->value;
    if (t->node == TypeNode::Var) {
      auto it = env.ty.find(t->name);
      if (it != env.ty.end()) return it->second;
    }
    throw Error("internal-eval", "shape " + print(t) + " is not known at evaluation time", pos);
  }

  static TypePtr substType(const TypePtr& t, const Env& env) {
    if (t->node == TypeNode::Var) {
      auto it = env.ty.find(t->name);
      return it == env.ty.end() ? t : types::natLit(it->second);
    }
    if (t->args.empty()) return t;
    auto copy = std::make_shared<Type>(*t);
    for (auto& a : copy->args) a = substType(a, env);
    return copy;
  }

  static std::uint64_t indexBound(const TypePtr& binderType, const Env& env, SourcePos pos) {
    if (!binderType || binderType->node != TypeNode::Index) {
      throw Error("internal-eval", "loop binder is not Index-typed", pos);
    }
    return natValue(binderType->args[0], env, pos);
  }

  ValuePtr etaExpand(const ExprPtr& base, const std::vector<std::uint64_t>& dims, std::size_t from = 0) {
    if (from == dims.size()) return values::neutral(base);
    std::vector<ValuePtr> elems;
    elems.reserve(dims[from]);
    for (std::uint64_t k = 0; k < dims[from]; ++k) {
      elems.push_back(etaExpand(expr::index(base, expr::nat(k)), dims, from + 1));
    }
    return values::vec(std::move(elems));
  }

  // ---- operators ---------------------------------------------------------

  static ValuePtr arith(const ExprPtr& e, const ValuePtr& a, const ValuePtr& b) {
    if (e->node == ExprNode::Div && b->kind == ValueKind::Rat && b->rat == 0) {
      throw Error("division-by-zero", "division by zero in " + print(e), e->pos);
    }
    if (a->kind == ValueKind::Rat && b->kind == ValueKind::Rat) {
      switch (e->node) {
      case ExprNode::Add:
        return values::rat(a->rat + b->rat);
      case ExprNode::Sub:
        return values::rat(a->rat - b->rat);
      case ExprNode::Mul:
        return values::rat(a->rat * b->rat);
      default:
        return values::rat(a->rat / b->rat);
      }
    }
    return values::neutral(expr::binary(e->node, quoteImpl(a), quoteImpl(b), e->pos));
  }

  static ValuePtr negate(const ValuePtr& a) {
    if (a->kind == ValueKind::Bool) return values::boolean(!a->boolean);
    return values::neutral(negateNormal(quoteImpl(a)));
  }

  static ValuePtr connective(ExprNode node, const ValuePtr& a, const ValuePtr& b) {
    bool isAnd = node == ExprNode::And;
    for (const ValuePtr* side : {&a, &b}) {
      const ValuePtr& v = *side;
      const ValuePtr& other = side == &a ? b : a;
      if (v->kind == ValueKind::Bool) {
        // Absorbing element decides; the unit leaves the other side.
        if (v->boolean != isAnd) return values::boolean(!isAnd);
        return other;
      }
    }
    return values::neutral(expr::binary(node, quoteImpl(a), quoteImpl(b)));
  }

  static ValuePtr compare(const ExprPtr& e, const ValuePtr& a, const ValuePtr& b) {
    if (a->kind == ValueKind::Rat && b->kind == ValueKind::Rat) {
      int c = cmp(a->rat, b->rat);
      switch (e->node) {
      case ExprNode::Eq:
        return values::boolean(c == 0);
      case ExprNode::Neq:
        return values::boolean(c != 0);
      case ExprNode::Leq:
        return values::boolean(c <= 0);
      case ExprNode::Lt:
        return values::boolean(c < 0);
      case ExprNode::Geq:
        return values::boolean(c >= 0);
      default:
        return values::boolean(c > 0);
      }
    }
    if (a->kind == ValueKind::Bool && b->kind == ValueKind::Bool) {
      bool same = a->boolean == b->boolean;
      return values::boolean(e->node == ExprNode::Eq ? same : !same);
    }
    return values::neutral(expr::binary(e->node, quoteImpl(a), quoteImpl(b), e->pos));
  }

  static ValuePtr blend(const ExprPtr& cond, const ValuePtr& t, const ValuePtr& f) {
    if (t->kind == ValueKind::Vec && f->kind == ValueKind::Vec && t->elems.size() == f->elems.size()) {
      std::vector<ValuePtr> elems;
      for (std::size_t i = 0; i < t->elems.size(); ++i) elems.push_back(blend(cond, t->elems[i], f->elems[i]));
      return values::vec(std::move(elems));
    }
    if (t->kind == ValueKind::Closure || f->kind == ValueKind::Closure) {
      throw CompileError("unsupported-if", "conditional over functions with an undecided condition " + print(cond));
    }
    return values::neutral(expr::ite(cond, quoteImpl(t), quoteImpl(f)));
  }

  static ValuePtr index(const ExprPtr& e, const ValuePtr& v, const ValuePtr& i) {
    if (v->kind == ValueKind::Vec && i->kind == ValueKind::Rat) {
      if (!isInteger(i->rat) || i->rat < 0 || i->rat >= static_cast<unsigned long>(v->elems.size())) {
        throw Error("index-out-of-bounds", "index " + i->rat.get_str() + " out of bounds", e->pos);
      }
      return v->elems[i->rat.get_num().get_ui()];
    }
    ExprPtr idx = i->kind == ValueKind::Rat ? expr::nat(i->rat.get_num().get_ui()) : quoteImpl(i);
    return values::neutral(expr::index(quoteImpl(v), idx, e->pos));
  }

  static ValuePtr apply(const ValuePtr& f, const ValuePtr& arg, SourcePos pos) {
    if (f->kind == ValueKind::Closure) return f->fn(arg);
    return values::neutral(expr::app(quoteImpl(f), quoteImpl(arg), pos));
  }

  // ---- quantifiers -------------------------------------------------------

  std::string fresh(const std::string& name) const {
    auto used = [&](const std::string& n) { return std::find(residual_.begin(), residual_.end(), n) != residual_.end(); };
    if (!used(name)) return name;
    for (int k = 1;; ++k) {
      std::string candidate = name + "_" + std::to_string(k);
      if (!used(candidate)) return candidate;
    }
  }

  ValuePtr quantifier(const ExprPtr& e, const Env& env) {
    bool universal = e->node == ExprNode::Forall;
    TypePtr binder = substType(e->binderType, env);
    auto finite = [&](const std::vector<ValuePtr>& domain) {
      ValuePtr acc = values::boolean(universal);
      for (const auto& value : domain) {
        Env inner = env;
        inner.vals.push_back(value);
        acc = connective(universal ? ExprNode::And : ExprNode::Or, acc, eval(e->children[0], inner));
      }
      return acc;
    };
    if (binder->node == TypeNode::Bool) return finite({values::boolean(false), values::boolean(true)});
    if (binder->node == TypeNode::Index) {
      std::vector<ValuePtr> domain;
      for (std::uint64_t i = 0; i < binder->args[0]->value; ++i) {
        domain.push_back(values::rat(Rational(static_cast<unsigned long>(i))));
      }
      return finite(domain);
    }
    std::vector<std::uint64_t> dims;
    if (binder->node != TypeNode::Rat) {
      try {
        dims = tensorDims(binder);
      } catch (const TypeError&) {
        throw CompileError("unsupported-quantifier",
                           "cannot quantify '" + e->name + "' over values of type " + print(binder), e->pos);
      }
    }

    if (ground_) {
      auto it = ground_->quantified.find(e->name);
      if (it == ground_->quantified.end()) {
        throw Error("not-ground", "no ground value for quantified variable '" + e->name + "'", e->pos);
      }
      ValuePtr value = values::fromGround(it->second);
      checkShape(value, binder, e->name);
      Env inner = env;
      inner.vals.push_back(value);
      return eval(e->children[0], inner);
    }

    std::string name = fresh(e->name);
    ExprPtr var = boundVar(name, static_cast<int>(residual_.size()));
    residual_.push_back(name);
    ValuePtr body;
    try {
      Env inner = env;
      inner.vals.push_back(etaExpand(var, dims));
      body = eval(e->children[0], inner);
    } catch (...) {
      residual_.pop_back();
      throw;
    }
    residual_.pop_back();
    // Domains over Rat are nonempty, so a constant body decides the quantifier.
    if (body->kind == ValueKind::Bool) return body;
    return values::neutral(expr::binder(e->node, name, binder, quoteImpl(body), e->pos));
  }

  const TypedProgram& tp_;
  const NormaliseOptions* options_;
  const GroundEnv* ground_;
  std::vector<std::optional<ValuePtr>> cache_;
  std::vector<std::string> residual_;
};

} // namespace

ValuePtr eval(const TypedProgram& tp, const ExprPtr& e, const NormaliseOptions& options) {
  auto ev = std::make_shared<Evaluator>(tp, &options, nullptr);
  return ev->eval(e, {});
}

ExprPtr quote(const ValuePtr& v) { return quoteImpl(v); }

ExprPtr normaliseExpr(const TypedProgram& tp, const ExprPtr& e, const NormaliseOptions& options) {
  auto ev = std::make_shared<Evaluator>(tp, &options, nullptr);
  return quoteImpl(ev->eval(e, {}));
}

ExprPtr normaliseProperty(const TypedProgram& tp, const std::string& name, const NormaliseOptions& options) {
  const Decl& d = tp.decl(name);
  if (d.kind != DeclKind::Property) {
    throw Error("not-a-property", "'" + name + "' is not declared with @property", d.pos);
  }
  return normaliseExpr(tp, d.body, options);
}

bool evaluateGround(const TypedProgram& tp, const ExprPtr& e, const GroundEnv& env) {
  auto ev = std::make_shared<Evaluator>(tp, nullptr, &env);
  ValuePtr v = ev->eval(e, {});
  if (v->kind != ValueKind::Bool) throw Error("not-ground", "expression did not evaluate to a Boolean");
  return v->boolean;
}

} // namespace specbridge
