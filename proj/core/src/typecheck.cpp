// SPDX-License-Identifier: Apache-2.0
#include "specbridge/typecheck.hpp"

#include "specbridge/printer.hpp"

#include <functional>
#include <map>
#include <optional>

namespace specbridge {

const Decl& TypedProgram::decl(const std::string& name) const {
  const Decl* d = program.find(name);
  if (!d) throw Error("unknown-declaration", "no declaration named '" + name + "'");
  return *d;
}

std::size_t TypedProgram::indexOf(const std::string& name) const {
  auto i = program.indexOf(name);
  if (!i) throw Error("unknown-declaration", "no declaration named '" + name + "'");
  return *i;
}

namespace {

TypePtr substituteVars(const TypePtr& t, const std::map<std::string, TypePtr>& subst) {
  if (t->node == TypeNode::Var) {
    auto it = subst.find(t->name);
    return it == subst.end() ? t : it->second;
  }
  if (t->node == TypeNode::Pi && subst.count(t->name)) {
    auto inner = subst;
    inner.erase(t->name);
    auto copy = std::make_shared<Type>(*t);
    copy->args[0] = substituteVars(t->args[0], inner);
    return copy;
  }
  if (t->args.empty()) return t;
  auto copy = std::make_shared<Type>(*t);
  for (auto& a : copy->args) a = substituteVars(a, subst);
  return copy;
}

} // namespace

TypePtr expandSynonyms(const Program& program, const TypePtr& type) {
  if (!type) return type;
  if (type->node == TypeNode::Named) {
    const Decl* d = program.find(type->name);
    if (!d || d->kind != DeclKind::TypeSynonym) {
      throw TypeError("unknown-type", "unknown type '" + type->name + "'", type->pos);
    }
    std::map<std::string, TypePtr> subst;
    for (std::size_t i = 0; i < d->typeParams.size() && i < type->args.size(); ++i) {
      subst[d->typeParams[i]] = expandSynonyms(program, type->args[i]);
    }
    return expandSynonyms(program, substituteVars(d->synonymBody, subst));
  }
  if (type->args.empty()) return type;
  auto copy = std::make_shared<Type>(*type);
  for (auto& a : copy->args) a = expandSynonyms(program, a);
  return copy;
}

namespace {

std::string kindName(Kind k) { return k == Kind::Nat ? "Nat" : "Type"; }

Kind kindOf(const Program& program, const TypePtr& t, std::map<std::string, Kind>& vars) {
  auto expectKind = [&](const TypePtr& sub, Kind want) {
    Kind got = kindOf(program, sub, vars);
    if (got != want) {
      throw TypeError("kind-mismatch", print(sub) + " has kind " + kindName(got) + " where " + kindName(want) +
                                           " is expected",
                      sub->pos.line ? sub->pos : t->pos, kindName(want), kindName(got));
    }
  };
  switch (t->node) {
  case TypeNode::Rat:
  case TypeNode::Bool:
  case TypeNode::Nat:
    return Kind::Type;
  case TypeNode::NatLit:
    return Kind::Nat;
  case TypeNode::Meta:
    return Kind::Type;
  case TypeNode::Var: {
    auto it = vars.find(t->name);
    return it == vars.end() ? Kind::Nat : it->second;
  }
  case TypeNode::Tensor:
    expectKind(t->args[0], Kind::Type);
    expectKind(t->args[1], Kind::Nat);
    return Kind::Type;
  case TypeNode::Index:
    expectKind(t->args[0], Kind::Nat);
    return Kind::Type;
  case TypeNode::Fun:
    expectKind(t->args[0], Kind::Type);
    expectKind(t->args[1], Kind::Type);
    return Kind::Type;
  case TypeNode::Pi: {
    auto saved = vars;
    vars[t->name] = t->binderKind;
    expectKind(t->args[0], Kind::Type);
    vars = saved;
    return Kind::Type;
  }
  case TypeNode::Named: {
    const Decl* d = program.find(t->name);
    if (!d || d->kind != DeclKind::TypeSynonym) throw TypeError("unknown-type", "unknown type '" + t->name + "'", t->pos);
    for (const auto& a : t->args) expectKind(a, Kind::Nat);
    std::map<std::string, Kind> inner;
    for (const auto& p : d->typeParams) inner[p] = Kind::Nat;
    return kindOf(program, d->synonymBody, inner);
  }
  }
  return Kind::Type;
}

} // namespace

Kind inferKind(const Program& program, const TypePtr& type) {
  std::map<std::string, Kind> vars;
  return kindOf(program, type, vars);
}

bool sameType(const TypePtr& a, const TypePtr& b) { return structurallyEqual(a, b); }

std::vector<std::uint64_t> tensorDims(const TypePtr& type) {
  std::vector<std::uint64_t> dims;
  TypePtr t = type;
  while (t->node == TypeNode::Tensor) {
    if (t->args[1]->node != TypeNode::NatLit) {
      throw TypeError("unsupported-type", "tensor dimension must be a literal in " + print(type), type->pos);
    }
    dims.push_back(t->args[1]->value);
    t = t->args[0];
  }
  if (t->node != TypeNode::Rat) {
    throw TypeError("unsupported-type", "expected a tensor of Rat but found " + print(type), type->pos, "Tensor Rat",
                    print(type));
  }
  return dims;
}

namespace {

class Checker {
public:
  explicit Checker(const Program& p) : program_(p) {}

  TypedProgram run() {
    TypedProgram tp;
    tp.program.decls.reserve(program_.decls.size());
    for (const Decl& d : program_.decls) {
      Decl out = d;
      TypePtr declType = checkDecl(d, out);
      tp.program.decls.push_back(out);
      tp.declTypes.push_back(declType);
      declTypes_.push_back(declType);
      elaborated_.push_back(out);
    }
    return tp;
  }

  void load(const TypedProgram& tp) {
    declTypes_ = tp.declTypes;
    elaborated_ = tp.program.decls;
  }

  ExprPtr checkClosed(const ExprPtr& e, const TypePtr& expected) {
    resetMetas();
    ExprPtr out = check(e, expected);
    return finish(out);
  }

private:
  // ---- metas -------------------------------------------------------------

  void resetMetas() {
    metas_.clear();
    pendingBounds_.clear();
    ctx_.clear();
    rigid_.clear();
  }

  TypePtr freshMeta() {
    metas_.emplace_back();
    return types::meta(metas_.size() - 1);
  }

  TypePtr resolve(TypePtr t) const {
    while (t->node == TypeNode::Meta && metas_[t->value]) t = *metas_[t->value];
    return t;
  }

  TypePtr zonk(const TypePtr& t) const {
    if (!t) return t;
    TypePtr r = resolve(t);
    if (r->args.empty()) return r;
    auto copy = std::make_shared<Type>(*r);
    for (auto& a : copy->args) a = zonk(a);
    return copy;
  }

  bool occurs(std::uint64_t id, const TypePtr& t) const {
    TypePtr r = resolve(t);
    if (r->node == TypeNode::Meta) return r->value == id;
    for (const auto& a : r->args) {
      if (occurs(id, a)) return true;
    }
    return false;
  }

  [[noreturn]] void mismatch(const TypePtr& expected, const TypePtr& actual, SourcePos pos,
                             const std::string& note = {}) const {
    std::string e = print(zonk(expected));
    std::string a = print(zonk(actual));
    throw TypeError("type-mismatch", "expected " + e + " but found " + a + (note.empty() ? "" : " (" + note + ")"),
                    pos, e, a);
  }

  void unify(const TypePtr& expected, const TypePtr& actual, SourcePos pos, const std::string& note = {}) {
    TypePtr a = resolve(expected);
    TypePtr b = resolve(actual);
    if (a->node == TypeNode::Meta && b->node == TypeNode::Meta && a->value == b->value) return;
    if (a->node == TypeNode::Meta) {
      if (occurs(a->value, b)) mismatch(expected, actual, pos, "infinite type");
      metas_[a->value] = b;
      return;
    }
    if (b->node == TypeNode::Meta) {
      if (occurs(b->value, a)) mismatch(expected, actual, pos, "infinite type");
      metas_[b->value] = a;
      return;
    }
    if (a->node != b->node) mismatch(expected, actual, pos, note);
    switch (a->node) {
    case TypeNode::NatLit:
      if (a->value != b->value) mismatch(expected, actual, pos, note.empty() ? "dimension mismatch" : note);
      return;
    case TypeNode::Var:
      if (a->name != b->name) mismatch(expected, actual, pos, note);
      return;
    default:
      if (a->args.size() != b->args.size()) mismatch(expected, actual, pos, note);
      for (std::size_t i = 0; i < a->args.size(); ++i) unify(a->args[i], b->args[i], pos, note);
    }
  }

  // ---- declarations ------------------------------------------------------

  TypePtr expand(const TypePtr& t) const { return expandSynonyms(program_, t); }

  void requireKindType(const TypePtr& t) const {
    Kind k = inferKind(program_, t);
    if (k != Kind::Type) {
      throw TypeError("kind-mismatch", print(t) + " has kind Nat where Type is expected", t->pos, "Type", "Nat");
    }
  }

  TypePtr checkDecl(const Decl& d, Decl& out) {
    resetMetas();
    switch (d.kind) {
    case DeclKind::TypeSynonym: {
      std::map<std::string, Kind> vars;
      for (const auto& p : d.typeParams) vars[p] = Kind::Nat;
      Kind k = kindOf(program_, d.synonymBody, vars);
      if (k != Kind::Type) {
        throw TypeError("kind-mismatch", "type synonym '" + d.name + "' must have kind Type", d.pos, "Type", "Nat");
      }
      return nullptr;
    }
    case DeclKind::Network: {
      requireKindType(d.signature);
      TypePtr t = expand(d.signature);
      networkShape(t, d);
      return t;
    }
    case DeclKind::Dataset: {
      requireKindType(d.signature);
      TypePtr t = expand(d.signature);
      tensorDims(t);
      return t;
    }
    case DeclKind::Parameter: {
      requireKindType(d.signature);
      TypePtr t = expand(d.signature);
      if (t->node != TypeNode::Rat && t->node != TypeNode::Nat && t->node != TypeNode::Bool) {
        throw TypeError("unsupported-type", "parameter '" + d.name + "' must be Rat, Nat or Bool", d.pos,
                        "Rat | Nat | Bool", print(t));
      }
      return t;
    }
    case DeclKind::Property: {
      requireKindType(d.signature);
      TypePtr t = expand(d.signature);
      if (t->node != TypeNode::Bool) {
        throw TypeError("property-not-bool", "property '" + d.name + "' must have type Bool", d.pos, "Bool", print(t));
      }
      out.body = finish(check(d.body, t));
      return t;
    }
    case DeclKind::Def: {
      if (d.signature) {
        requireKindType(d.signature);
        TypePtr t = expand(d.signature);
        TypePtr body = t;
        while (body->node == TypeNode::Pi) {
          rigid_.push_back(body->name);
          body = body->args[0];
        }
        out.body = finish(check(d.body, body));
        return t;
      }
      auto [e, t] = synth(d.body);
      out.body = finish(e);
      TypePtr zt = zonk(t);
      if (hasMeta(zt)) {
        throw TypeError("cannot-infer", "cannot infer the type of '" + d.name + "'; add a signature", d.pos);
      }
      return zt;
    }
    }
    return nullptr;
  }

  static void networkShape(const TypePtr& t, const Decl& d) {
    auto fail = [&](const std::string& why) {
      throw TypeError("unsupported-network-type",
                      "network '" + d.name + "' must have type Tensor Rat [m] -> Tensor Rat [n]: " + why, d.pos,
                      "Tensor Rat [m] -> Tensor Rat [n]", print(t));
    };
    if (t->node != TypeNode::Fun) fail("not a function type");
    for (const auto& side : t->args) {
      if (side->node != TypeNode::Tensor) fail("network inputs and outputs must be tensors");
      if (side->args[0]->node != TypeNode::Rat) fail("only rank-1 tensors of Rat are supported");
      if (side->args[1]->node != TypeNode::NatLit) fail("dimensions must be literals");
    }
  }

  static bool hasMeta(const TypePtr& t) {
    if (t->node == TypeNode::Meta) return true;
    for (const auto& a : t->args) {
      if (hasMeta(a)) return true;
    }
    return false;
  }

  // Zonks every annotation in an elaborated tree and runs deferred checks.
  ExprPtr finish(const ExprPtr& e) {
    for (const auto& pending : pendingBounds_) {
      TypePtr dim = zonk(pending.dim);
      if (dim->node == TypeNode::NatLit && pending.literal >= dim->value) outOfBounds(pending.literal, dim->value, pending.pos);
    }
    pendingBounds_.clear();
    return zonkTree(e);
  }

  ExprPtr zonkTree(const ExprPtr& e) const {
    auto copy = std::make_shared<Expr>(*e);
    if (copy->type) copy->type = zonk(copy->type);
    if (copy->binderType) {
      copy->binderType = zonk(copy->binderType);
      if (hasMeta(copy->binderType)) {
        throw TypeError("cannot-infer", "cannot infer the type of '" + e->name + "'; add an annotation", e->pos);
      }
    }
    for (auto& t : copy->typeArgs) {
      t = zonk(t);
      if (hasMeta(t)) {
        throw TypeError("unresolved-shape", "cannot determine the shape argument of '" + e->name + "' at this use",
                        e->pos);
      }
    }
    for (auto& c : copy->children) c = zonkTree(c);
    return copy;
  }

  [[noreturn]] static void outOfBounds(std::uint64_t literal, std::uint64_t dim, SourcePos pos) {
    throw TypeError("index-out-of-bounds",
                    "index " + std::to_string(literal) + " is out of bounds for dimension " + std::to_string(dim) + " (" +
                        std::to_string(literal) + " >= " + std::to_string(dim) + ")",
                    pos, "Index " + std::to_string(dim), std::to_string(literal));
  }

  // ---- expressions -------------------------------------------------------

  struct Binding {
    std::string name;
    TypePtr type;
  };

  static ExprPtr annotate(std::shared_ptr<Expr> e, TypePtr t) {
    e->type = std::move(t);
    return e;
  }

  std::shared_ptr<Expr> copyOf(const ExprPtr& e) const { return std::make_shared<Expr>(*e); }

  TypePtr binderAnnotation(const ExprPtr& e) {
    if (!e->binderType) return freshMeta();
    std::map<std::string, Kind> vars;
    for (const auto& r : rigid_) vars[r] = Kind::Nat;
    if (kindOf(program_, e->binderType, vars) != Kind::Type) {
      throw TypeError("kind-mismatch", "binder '" + e->name + "' must be annotated with a type of kind Type",
                      e->pos, "Type", "Nat");
    }
    return expand(e->binderType);
  }

  ExprPtr withBinder(const std::string& name, const TypePtr& t, const std::function<ExprPtr()>& body) {
    ctx_.push_back({name, t});
    ExprPtr out;
    try {
      out = body();
    } catch (...) {
      ctx_.pop_back();
      throw;
    }
    ctx_.pop_back();
    return out;
  }

  const Binding& bound(const ExprPtr& e) const {
    if (e->level < 0 || static_cast<std::size_t>(e->level) >= ctx_.size() || ctx_[e->level].name != e->name) {
      throw TypeError("internal-scope", "variable '" + e->name + "' is not in scope (expression was not resolved)", e->pos);
    }
    return ctx_[static_cast<std::size_t>(e->level)];
  }

  TypePtr instantiate(const TypePtr& t, std::vector<TypePtr>& typeArgs) {
    TypePtr cur = t;
    std::map<std::string, TypePtr> subst;
    while (cur->node == TypeNode::Pi) {
      TypePtr m = freshMeta();
      subst[cur->name] = m;
      typeArgs.push_back(m);
      cur = cur->args[0];
    }
    return subst.empty() ? cur : substituteVars(cur, subst);
  }

  ExprPtr check(const ExprPtr& e, const TypePtr& expectedIn) {
    TypePtr expected = resolve(expectedIn);
    switch (e->node) {
    case ExprNode::Lambda:
      if (expected->node == TypeNode::Fun) {
        TypePtr dom = expected->args[0];
        if (e->binderType) unify(dom, binderAnnotation(e), e->pos);
        auto out = copyOf(e);
        out->binderType = dom;
        out->children[0] = withBinder(e->name, dom, [&] { return check(e->children[0], expected->args[1]); });
        return annotate(out, expected);
      }
      break;

    case ExprNode::Forall:
    case ExprNode::Foreach:
      if (expected->node == TypeNode::Tensor) return foreach(e, expected->args[0], expected->args[1], expected);
      if (e->node == ExprNode::Forall && expected->node == TypeNode::Bool) return quantifier(e);
      break;

    case ExprNode::Exists:
      if (expected->node == TypeNode::Bool) return quantifier(e);
      break;

    case ExprNode::NatLiteral: {
      auto out = copyOf(e);
      switch (expected->node) {
      case TypeNode::Rat:
      case TypeNode::Nat:
        return annotate(out, expected);
      case TypeNode::Index: {
        TypePtr dim = resolve(expected->args[0]);
        if (dim->node == TypeNode::NatLit && e->nat >= dim->value) outOfBounds(e->nat, dim->value, e->pos);
        if (dim->node == TypeNode::Meta) pendingBounds_.push_back({e->nat, dim, e->pos});
        return annotate(out, expected);
      }
      case TypeNode::Meta:
        unify(expected, types::rat(), e->pos);
        return annotate(out, types::rat());
      default:
        mismatch(expected, types::rat(), e->pos, "numeric literal");
      }
    }

    case ExprNode::VecLiteral:
      if (expected->node == TypeNode::Tensor) {
        unify(expected->args[1], types::natLit(e->children.size()), e->pos, "vector length");
        auto out = copyOf(e);
        for (auto& c : out->children) c = check(c, expected->args[0]);
        return annotate(out, expected);
      }
      break;

    case ExprNode::If: {
      auto out = copyOf(e);
      out->children[0] = check(e->children[0], types::boolean());
      out->children[1] = check(e->children[1], expected);
      out->children[2] = check(e->children[2], expected);
      return annotate(out, expected);
    }

    case ExprNode::Let: {
      auto out = copyOf(e);
      auto [bound, boundType] = synth(e->children[0]);
      out->children[0] = bound;
      out->binderType = boundType;
      out->children[1] = withBinder(e->name, boundType, [&] { return check(e->children[1], expected); });
      return annotate(out, expected);
    }

    case ExprNode::Var:
      if (e->scope == VarScope::Global) {
        const Decl& d = program_.decls[static_cast<std::size_t>(e->level)];
        if (d.kind == DeclKind::Def && !d.signature) {
          // Unannotated definitions are typed at each use by re-checking their body.
          Checker inner(program_);
          inner.declTypes_ = declTypes_;
          inner.elaborated_ = elaborated_;
          inner.metas_ = metas_;
          inner.check(d.body, expected);
          metas_ = inner.metas_;
          auto out = copyOf(e);
          return annotate(out, expected);
        }
      }
      break;

    default:
      break;
    }

    auto [out, actual] = synth(e);
    unify(expected, actual, e->pos);
    return out;
  }

  ExprPtr quantifier(const ExprPtr& e) {
    TypePtr binder = binderAnnotation(e);
    auto out = copyOf(e);
    out->binderType = binder;
    out->children[0] = withBinder(e->name, binder, [&] { return check(e->children[0], types::boolean()); });
    return annotate(out, types::boolean());
  }

  ExprPtr foreach(const ExprPtr& e, const TypePtr& elem, const TypePtr& dim, const TypePtr& whole) {
    TypePtr binder = types::index(dim);
    if (e->binderType) unify(binder, binderAnnotation(e), e->pos);
    auto out = copyOf(e);
    out->node = ExprNode::Foreach;
    out->binderType = binder;
    out->children[0] = withBinder(e->name, binder, [&] { return check(e->children[0], elem); });
    return annotate(out, whole);
  }

  std::pair<ExprPtr, TypePtr> synth(const ExprPtr& e) {
    auto out = copyOf(e);
    auto done = [&](TypePtr t) { return std::make_pair(annotate(out, t), t); };

    switch (e->node) {
    case ExprNode::Var: {
      if (e->scope == VarScope::Bound) return done(bound(e).type);
      if (e->scope != VarScope::Global) {
        throw TypeError("internal-scope", "unresolved variable '" + e->name + "'", e->pos);
      }
      auto idx = static_cast<std::size_t>(e->level);
      const Decl& d = program_.decls[idx];
      if (d.kind == DeclKind::TypeSynonym) throw TypeError("not-a-value", "'" + e->name + "' is a type", e->pos);
      out->typeArgs.clear();
      TypePtr t = instantiate(declTypes_.at(idx), out->typeArgs);
      return done(t);
    }
    case ExprNode::RatLiteral:
    case ExprNode::NatLiteral:
      return done(types::rat());
    case ExprNode::True:
    case ExprNode::False:
      return done(types::boolean());

    case ExprNode::Add:
    case ExprNode::Sub:
    case ExprNode::Mul:
    case ExprNode::Div:
    case ExprNode::Neg:
      for (auto& c : out->children) c = check(c, types::rat());
      return done(types::rat());

    case ExprNode::Not:
    case ExprNode::And:
    case ExprNode::Or:
    case ExprNode::Implies:
      for (auto& c : out->children) c = check(c, types::boolean());
      return done(types::boolean());

    case ExprNode::Leq:
    case ExprNode::Lt:
    case ExprNode::Geq:
    case ExprNode::Gt:
      for (auto& c : out->children) c = check(c, types::rat());
      return done(types::boolean());

    case ExprNode::Eq:
    case ExprNode::Neq: {
      bool lhsLiteral = e->children[0]->node == ExprNode::NatLiteral;
      std::size_t first = lhsLiteral ? 1 : 0;
      auto [a, t] = synth(e->children[first]);
      TypePtr rt = resolve(t);
      if (rt->node != TypeNode::Rat && rt->node != TypeNode::Bool && rt->node != TypeNode::Index &&
          rt->node != TypeNode::Nat && rt->node != TypeNode::Meta) {
        throw TypeError("unsupported-equality", "equality is only defined on Rat, Bool, Nat and Index values", e->pos,
                        "Rat | Bool | Nat | Index", print(zonk(t)));
      }
      out->children[first] = a;
      out->children[1 - first] = check(e->children[1 - first], t);
      return done(types::boolean());
    }

    case ExprNode::App: {
      auto [fn, ft] = synth(e->children[0]);
      TypePtr f = resolve(ft);
      if (f->node == TypeNode::Meta) {
        TypePtr dom = freshMeta();
        TypePtr cod = freshMeta();
        unify(f, types::fun(dom, cod), e->pos);
        f = resolve(f);
      }
      if (f->node != TypeNode::Fun) {
        throw TypeError("not-a-function", "cannot apply a value of type " + print(zonk(f)), e->pos, "function",
                        print(zonk(f)));
      }
      out->children[0] = fn;
      out->children[1] = check(e->children[1], f->args[0]);
      return done(f->args[1]);
    }

    case ExprNode::Index: {
      auto [v, vt] = synth(e->children[0]);
      TypePtr t = resolve(vt);
      if (t->node == TypeNode::Meta) {
        TypePtr elem = freshMeta();
        TypePtr dim = freshMeta();
        unify(t, types::tensor(elem, dim), e->pos);
        t = resolve(t);
      }
      if (t->node != TypeNode::Tensor) {
        throw TypeError("not-a-tensor", "cannot index a value of type " + print(zonk(t)), e->pos, "Tensor",
                        print(zonk(t)));
      }
      out->children[0] = v;
      out->children[1] = check(e->children[1], types::index(t->args[1]));
      return done(t->args[0]);
    }

    case ExprNode::Lambda: {
      TypePtr binder = binderAnnotation(e);
      TypePtr bodyType;
      out->binderType = binder;
      out->children[0] = withBinder(e->name, binder, [&] {
        auto [b, bt] = synth(e->children[0]);
        bodyType = bt;
        return b;
      });
      return done(types::fun(binder, bodyType));
    }

    case ExprNode::Forall:
    case ExprNode::Exists:
    case ExprNode::Foreach: {
      TypePtr binder = binderAnnotation(e);
      TypePtr bodyType;
      ExprPtr body = withBinder(e->name, binder, [&] {
        auto [b, bt] = synth(e->children[0]);
        bodyType = bt;
        return b;
      });
      TypePtr rb = resolve(bodyType);
      if (e->node != ExprNode::Foreach && rb->node == TypeNode::Bool) {
        out->binderType = binder;
        out->children[0] = body;
        return done(types::boolean());
      }
      if (e->node == ExprNode::Exists) mismatch(types::boolean(), bodyType, e->pos, "body of exists");
      TypePtr rbinder = resolve(binder);
      if (rbinder->node != TypeNode::Index) {
        throw TypeError("cannot-infer", "cannot determine the dimension of the tensor built by '" + e->name +
                                            "'; annotate the binder with an Index type",
                        e->pos);
      }
      out->node = ExprNode::Foreach;
      out->binderType = rbinder;
      out->children[0] = body;
      return done(types::tensor(bodyType, rbinder->args[0]));
    }

    case ExprNode::Let: {
      auto [bound, boundType] = synth(e->children[0]);
      out->children[0] = bound;
      out->binderType = boundType;
      TypePtr bodyType;
      out->children[1] = withBinder(e->name, boundType, [&] {
        auto [b, bt] = synth(e->children[1]);
        bodyType = bt;
        return b;
      });
      return done(bodyType);
    }

    case ExprNode::If: {
      out->children[0] = check(e->children[0], types::boolean());
      auto [a, at] = synth(e->children[1]);
      out->children[1] = a;
      out->children[2] = check(e->children[2], at);
      return done(at);
    }

    case ExprNode::VecLiteral: {
      if (e->children.empty()) {
        throw TypeError("cannot-infer", "cannot infer the element type of an empty vector", e->pos);
      }
      auto [first, elem] = synth(e->children[0]);
      out->children[0] = first;
      for (std::size_t i = 1; i < e->children.size(); ++i) out->children[i] = check(e->children[i], elem);
      return done(types::tensor(elem, types::natLit(e->children.size())));
    }

    case ExprNode::Fold: {
      auto [v, vt] = synth(e->children[2]);
      TypePtr t = resolve(vt);
      if (t->node != TypeNode::Tensor) {
        throw TypeError("not-a-tensor", "fold expects a tensor but found " + print(zonk(t)), e->pos, "Tensor",
                        print(zonk(t)));
      }
      auto [z, zt] = synth(e->children[1]);
      out->children[2] = v;
      out->children[1] = z;
      out->children[0] = check(e->children[0], types::fun(t->args[0], types::fun(zt, zt)));
      return done(zt);
    }
    }
    throw TypeError("internal", "unhandled expression form " + nodeName(e->node), e->pos);
  }

  struct PendingBound {
    std::uint64_t literal;
    TypePtr dim;
    SourcePos pos;
  };

  const Program& program_;
  std::vector<TypePtr> declTypes_;
  std::vector<Decl> elaborated_;
  std::vector<std::optional<TypePtr>> metas_;
  std::vector<PendingBound> pendingBounds_;
  std::vector<Binding> ctx_;
  std::vector<std::string> rigid_;
};

} // namespace

TypedProgram checkProgram(const Program& program) { return Checker(program).run(); }

ExprPtr checkExpression(const TypedProgram& tp, const ExprPtr& e, const TypePtr& expected) {
  Checker c(tp.program);
  c.load(tp);
  return c.checkClosed(e, expandSynonyms(tp.program, expected));
}

NetworkShape shapeOf(const TypedProgram& tp, const std::string& networkName) {
  std::size_t i = tp.indexOf(networkName);
  const Decl& d = tp.program.decls[i];
  if (d.kind != DeclKind::Network) throw TypeError("not-a-network", "'" + networkName + "' is not a network", d.pos);
  const TypePtr& t = tp.declTypes[i];
  return {tensorDims(t->args[0]).at(0), tensorDims(t->args[1]).at(0)};
}

} // namespace specbridge
