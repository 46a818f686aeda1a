// SPDX-License-Identifier: Apache-2.0
#include "specbridge/loss.hpp"

#include "specbridge/printer.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace specbridge {

// ---- logics --------------------------------------------------------------

Logic Logic::parse(const std::string& text) {
  Logic l;
  if (text == "dl2") {
    l.kind = LogicKind::DL2;
  } else if (text == "godel") {
    l.kind = LogicKind::Godel;
  } else if (text == "lukasiewicz") {
    l.kind = LogicKind::Lukasiewicz;
  } else if (text == "product") {
    l.kind = LogicKind::Product;
  } else if (text == "yager" || text.rfind("yager:", 0) == 0) {
    l.kind = LogicKind::Yager;
    if (text.size() > 6) {
      try {
        std::size_t used = 0;
        l.p = std::stod(text.substr(6), &used);
        if (used != text.size() - 6) throw std::invalid_argument(text);
      } catch (const std::exception&) {
        throw Error("unknown-logic", "bad Yager parameter in '" + text + "'");
      }
    }
    if (!(l.p > 0)) throw Error("unknown-logic", "the Yager parameter must be positive");
  } else {
    throw Error("unknown-logic", "unknown logic '" + text + "' (dl2, godel, lukasiewicz, product, yager[:p])");
  }
  return l;
}

std::string Logic::name() const {
  switch (kind) {
  case LogicKind::DL2:
    return "dl2";
  case LogicKind::Godel:
    return "godel";
  case LogicKind::Lukasiewicz:
    return "lukasiewicz";
  case LogicKind::Product:
    return "product";
  case LogicKind::Yager:
    return "yager";
  }
  return "dl2";
}

std::string opName(LossNode::Op op) {
  switch (op) {
  case LossNode::Op::Const: return "const";
  case LossNode::Op::Var: return "var";
  case LossNode::Op::Resource: return "resource";
  case LossNode::Op::NetworkApply: return "network";
  case LossNode::Op::Add: return "add";
  case LossNode::Op::Sub: return "sub";
  case LossNode::Op::Mul: return "mul";
  case LossNode::Op::Div: return "div";
  case LossNode::Op::Max: return "max";
  case LossNode::Op::Min: return "min";
  case LossNode::Op::Pow: return "pow";
  case LossNode::Op::Indicator: return "indicator";
  case LossNode::Op::SampleForall: return "forall";
  case LossNode::Op::SampleExists: return "exists";
  }
  return "const";
}

std::string aggregateName(LossNode::Aggregate a) {
  switch (a) {
  case LossNode::Aggregate::Mean: return "mean";
  case LossNode::Aggregate::Min: return "min";
  case LossNode::Aggregate::And: return "and";
  case LossNode::Aggregate::Or: return "or";
  }
  return "mean";
}

// ---- domain extraction ---------------------------------------------------

namespace {

struct Affine {
  std::map<std::size_t, Rational> coeffs;
  Rational constant;
};

std::optional<Affine> affineIn(const ExprPtr& e, int level, const std::vector<std::uint64_t>& dims) {
  auto both = [&](std::optional<Affine> a, std::optional<Affine> b, int sign) -> std::optional<Affine> {
    if (!a || !b) return std::nullopt;
    for (const auto& [k, c] : b->coeffs) {
      a->coeffs[k] += sign * c;
      if (a->coeffs[k] == 0) a->coeffs.erase(k);
    }
    a->constant += sign * b->constant;
    return a;
  };
  auto scale = [](Affine a, const Rational& k) {
    for (auto& [i, c] : a.coeffs) c *= k;
    a.constant *= k;
    if (k == 0) a.coeffs.clear();
    return a;
  };
  switch (e->node) {
  case ExprNode::RatLiteral:
    return Affine{{}, e->rat};
  case ExprNode::NatLiteral:
    return Affine{{}, Rational(static_cast<unsigned long>(e->nat))};
  case ExprNode::Add:
    return both(affineIn(e->children[0], level, dims), affineIn(e->children[1], level, dims), 1);
  case ExprNode::Sub:
    return both(affineIn(e->children[0], level, dims), affineIn(e->children[1], level, dims), -1);
  case ExprNode::Neg: {
    auto a = affineIn(e->children[0], level, dims);
    if (!a) return std::nullopt;
    return scale(*a, -1);
  }
  case ExprNode::Mul: {
    auto a = affineIn(e->children[0], level, dims);
    auto b = affineIn(e->children[1], level, dims);
    if (!a || !b) return std::nullopt;
    if (a->coeffs.empty()) return scale(*b, a->constant);
    if (b->coeffs.empty()) return scale(*a, b->constant);
    return std::nullopt;
  }
  case ExprNode::Div: {
    auto a = affineIn(e->children[0], level, dims);
    auto b = affineIn(e->children[1], level, dims);
    if (!a || !b || !b->coeffs.empty() || b->constant == 0) return std::nullopt;
    return scale(*a, Rational(1) / b->constant);
  }
  case ExprNode::Var:
  case ExprNode::Index: {
    std::vector<std::uint64_t> path;
    ExprPtr base = e;
    while (base->node == ExprNode::Index) {
      if (base->children[1]->node != ExprNode::NatLiteral) return std::nullopt;
      path.push_back(base->children[1]->nat);
      base = base->children[0];
    }
    if (base->node != ExprNode::Var || base->scope != VarScope::Bound || base->level != level) return std::nullopt;
    if (path.size() != dims.size()) return std::nullopt;
    std::reverse(path.begin(), path.end());
    std::size_t flat = 0;
    for (std::size_t k = 0; k < path.size(); ++k) flat = flat * dims[k] + path[k];
    return Affine{{{flat, Rational(1)}}, Rational(0)};
  }
  default:
    return std::nullopt;
  }
}

struct Bound {
  std::size_t component = 0;
  std::optional<Rational> lo;
  std::optional<Rational> hi;
};

/// `lhs node rhs` read as a bound on one component of the variable.
std::optional<Bound> boundOf(ExprNode node, const ExprPtr& lhs, const ExprPtr& rhs, int level,
                             const std::vector<std::uint64_t>& dims) {
  auto a = affineIn(lhs, level, dims);
  auto b = affineIn(rhs, level, dims);
  if (!a || !b) return std::nullopt;
  // lhs - rhs = k * v + c
  for (const auto& [i, c] : b->coeffs) {
    a->coeffs[i] -= c;
    if (a->coeffs[i] == 0) a->coeffs.erase(i);
  }
  a->constant -= b->constant;
  if (a->coeffs.size() != 1) return std::nullopt;
  auto [component, k] = *a->coeffs.begin();
  Rational point = -a->constant / k;
  Bound out;
  out.component = component;
  bool upper = false; // k v + c <= 0 with k > 0 is an upper bound
  switch (node) {
  case ExprNode::Leq:
  case ExprNode::Lt:
    upper = k > 0;
    break;
  case ExprNode::Geq:
  case ExprNode::Gt:
    upper = k < 0;
    break;
  case ExprNode::Eq:
    out.lo = point;
    out.hi = point;
    return out;
  default:
    return std::nullopt;
  }
  if (upper) {
    out.hi = point;
  } else {
    out.lo = point;
  }
  return out;
}

std::optional<Bound> boundAtom(const ExprPtr& e, bool negated, int level, const std::vector<std::uint64_t>& dims) {
  if (!isComparison(e->node)) return std::nullopt;
  ExprNode node = negated ? negateComparison(e->node) : e->node;
  return boundOf(node, e->children[0], e->children[1], level, dims);
}

void flatten(const ExprPtr& e, ExprNode kind, std::vector<ExprPtr>& out) {
  if (e->node == kind) {
    for (const auto& c : e->children) flatten(c, kind, out);
  } else {
    out.push_back(e);
  }
}

std::string componentName(const std::string& var, const std::vector<std::uint64_t>& dims, std::size_t flat) {
  if (dims.empty()) return var;
  std::vector<std::uint64_t> idx(dims.size());
  for (std::size_t k = dims.size(); k-- > 0;) {
    idx[k] = flat % dims[k];
    flat /= dims[k];
  }
  std::string s = var;
  for (auto i : idx) s += " ! " + std::to_string(i);
  return s;
}

} // namespace

DomainExtraction extractDomain(const ExprPtr& body, int level, const std::vector<std::uint64_t>& dims,
                               const std::optional<Interval>& fallback, const std::string& varName) {
  std::size_t size = 1;
  for (auto d : dims) size *= d;
  std::vector<std::optional<Rational>> lo(size), hi(size);
  auto absorb = [&](const Bound& b) {
    if (b.lo && (!lo[b.component] || *b.lo > *lo[b.component])) lo[b.component] = b.lo;
    if (b.hi && (!hi[b.component] || *b.hi < *hi[b.component])) hi[b.component] = b.hi;
  };

  DomainExtraction out;
  out.residual = body;
  if (body->node == ExprNode::And) {
    std::vector<ExprPtr> conjuncts, rest;
    flatten(body, ExprNode::And, conjuncts);
    for (const auto& c : conjuncts) {
      if (auto b = boundAtom(c, false, level, dims)) {
        absorb(*b);
      } else {
        rest.push_back(c);
      }
    }
    if (rest.empty()) {
      out.residual = expr::boolean(true, body->pos);
    } else if (rest.size() == 1) {
      out.residual = rest[0];
    } else {
      out.residual = expr::nary(ExprNode::And, rest, body->pos);
    }
  } else if (body->node == ExprNode::Or) {
    std::vector<ExprPtr> disjuncts;
    flatten(body, ExprNode::Or, disjuncts);
    std::vector<Bound> bounds;
    bool consequent = false;
    for (const auto& d : disjuncts) {
      if (auto b = boundAtom(d, true, level, dims)) {
        bounds.push_back(*b);
      } else {
        consequent = true;
      }
    }
    // Only an implication-shaped disjunction has an antecedent to read.
    if (consequent) {
      for (const auto& b : bounds) absorb(b);
    }
  } else if (auto b = boundAtom(body, false, level, dims)) {
    absorb(*b);
    out.residual = expr::boolean(true, body->pos);
  }

  std::vector<std::string> missing;
  out.domain.dims = dims;
  for (std::size_t k = 0; k < size; ++k) {
    bool usedFallback = false;
    if (!lo[k] && fallback) {
      lo[k] = fallback->first;
      usedFallback = true;
    }
    if (!hi[k] && fallback) {
      hi[k] = fallback->second;
      usedFallback = true;
    }
    if (!lo[k] || !hi[k]) {
      missing.push_back(componentName(varName, dims, k) + (lo[k] ? " (upper)" : hi[k] ? " (lower)" : ""));
      continue;
    }
    if (*lo[k] > *hi[k]) {
      throw CompileError("empty-domain", "the bounds on " + componentName(varName, dims, k) + " are contradictory",
                         body->pos);
    }
    if (usedFallback) out.fallbackComponents.push_back(k);
    out.domain.box.emplace_back(*lo[k], *hi[k]);
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    throw CompileError("unbounded-domain", "no sampling bounds for " + list + "; pass a fallback domain", body->pos);
  }
  return out;
}

// ---- translation ---------------------------------------------------------

namespace {

LossNodePtr node(LossNode::Op op, std::vector<LossNodePtr> args) {
  auto n = std::make_shared<LossNode>();
  n->op = op;
  n->args = std::move(args);
  return n;
}

LossNodePtr cnst(const Rational& r) {
  auto n = std::make_shared<LossNode>();
  n->op = LossNode::Op::Const;
  n->value = r;
  return n;
}

LossNodePtr bin(LossNode::Op op, LossNodePtr a, LossNodePtr b) { return node(op, {std::move(a), std::move(b)}); }

class Translator {
public:
  Translator(const TypedProgram& tp, const LossOptions& options) : tp_(tp), options_(options) {}

  LossNodePtr formula(const ExprPtr& e) {
    switch (e->node) {
    case ExprNode::True:
      return cnst(fuzzy() ? 1 : 0);
    case ExprNode::False:
      return cnst(fuzzy() ? 0 : 1);
    case ExprNode::Not:
      return formula(negateNormal(e->children[0]));
    case ExprNode::Implies:
      return connective(false, formula(negateNormal(e->children[0])), formula(e->children[1]));
    case ExprNode::And:
    case ExprNode::Or: {
      LossNodePtr acc = formula(e->children[0]);
      for (std::size_t i = 1; i < e->children.size(); ++i) {
        acc = connective(e->node == ExprNode::And, acc, formula(e->children[i]));
      }
      return acc;
    }
    case ExprNode::Leq:
    case ExprNode::Lt:
    case ExprNode::Geq:
    case ExprNode::Gt:
    case ExprNode::Eq:
    case ExprNode::Neq:
      return atom(e->node, term(e->children[0]), term(e->children[1]));
    case ExprNode::Forall:
    case ExprNode::Exists:
      return quantifier(e);
    default:
      throw CompileError("unsupported-loss-node", "'" + print(e) + "' has no differentiable translation", e->pos);
    }
  }

  std::vector<NetworkSlot> networks() const {
    std::vector<NetworkSlot> out;
    for (const auto& [name, slot] : networks_) out.push_back(slot);
    return out;
  }
  std::vector<ResourceSlot> resources() const {
    std::vector<ResourceSlot> out;
    for (const auto& [name, slot] : resources_) out.push_back(slot);
    return out;
  }

private:
  bool fuzzy() const { return options_.logic.fuzzy(); }

  LossNodePtr connective(bool conj, LossNodePtr s, LossNodePtr t) {
    using Op = LossNode::Op;
    switch (options_.logic.kind) {
    case LogicKind::DL2:
      return bin(conj ? Op::Add : Op::Mul, s, t);
    case LogicKind::Godel:
      return bin(conj ? Op::Min : Op::Max, s, t);
    case LogicKind::Lukasiewicz:
      if (conj) return bin(Op::Max, cnst(0), bin(Op::Sub, bin(Op::Add, s, t), cnst(1)));
      return bin(Op::Min, cnst(1), bin(Op::Add, s, t));
    case LogicKind::Product:
      if (conj) return bin(Op::Mul, s, t);
      return bin(Op::Sub, bin(Op::Add, s, t), bin(Op::Mul, s, t));
    case LogicKind::Yager: {
      Rational p = rationalFromDouble(options_.logic.p);
      Rational inv = Rational(1) / p;
      if (conj) {
        auto sum = bin(Op::Add, bin(Op::Pow, bin(Op::Sub, cnst(1), s), cnst(p)),
                       bin(Op::Pow, bin(Op::Sub, cnst(1), t), cnst(p)));
        return bin(Op::Max, cnst(0), bin(Op::Sub, cnst(1), bin(Op::Pow, sum, cnst(inv))));
      }
      auto sum = bin(Op::Add, bin(Op::Pow, s, cnst(p)), bin(Op::Pow, t, cnst(p)));
      return bin(Op::Min, cnst(1), bin(Op::Pow, sum, cnst(inv)));
    }
    }
    return s;
  }

  LossNodePtr atom(ExprNode cmp, const LossNodePtr& a, const LossNodePtr& b) {
    using Op = LossNode::Op;
    auto violation = [](const LossNodePtr& l, const LossNodePtr& r) { return bin(Op::Max, bin(Op::Sub, l, r), cnst(0)); };
    Rational sigma = rationalFromDouble(options_.sigma);
    Rational xi = rationalFromDouble(options_.xi);
    auto truth = [&](LossNodePtr v) {
      return bin(Op::Max, cnst(0), bin(Op::Sub, cnst(1), bin(Op::Div, std::move(v), cnst(sigma))));
    };
    switch (cmp) {
    case ExprNode::Geq:
      return atom(ExprNode::Leq, b, a);
    case ExprNode::Gt:
      return atom(ExprNode::Lt, b, a);
    case ExprNode::Leq:
      return fuzzy() ? truth(violation(a, b)) : violation(a, b);
    case ExprNode::Lt:
      if (fuzzy()) return truth(violation(a, b));
      return bin(Op::Add, violation(a, b), bin(Op::Mul, cnst(xi), bin(Op::Indicator, a, b)));
    case ExprNode::Eq: {
      auto dist = bin(Op::Max, bin(Op::Sub, a, b), bin(Op::Sub, b, a));
      return fuzzy() ? truth(dist) : dist;
    }
    case ExprNode::Neq:
      return connective(false, atom(ExprNode::Lt, a, b), atom(ExprNode::Lt, b, a));
    default:
      throw CompileError("unsupported-loss-node", "not a comparison");
    }
  }

  LossNodePtr quantifier(const ExprPtr& e) {
    const TypePtr& t = e->binderType;
    std::vector<std::uint64_t> dims;
    if (t->node != TypeNode::Rat) {
      try {
        dims = tensorDims(t);
      } catch (const TypeError&) {
        throw CompileError("unsupported-quantifier", "cannot sample '" + e->name + "' of type " + print(t), e->pos);
      }
    }
    int level = static_cast<int>(scope_.size());
    DomainExtraction dx;
    if (options_.extractDomains) {
      dx = extractDomain(e->children[0], level, dims, options_.fallback, e->name);
    } else {
      ExprPtr tautology = expr::boolean(true);
      dx = extractDomain(tautology, level, dims, options_.fallback, e->name);
      dx.residual = e->children[0];
    }
    auto n = std::make_shared<LossNode>();
    n->op = e->node == ExprNode::Forall ? LossNode::Op::SampleForall : LossNode::Op::SampleExists;
    n->var = nextVar_++;
    n->id = nextId_++;
    n->name = e->name;
    n->domain = dx.domain;
    if (fuzzy()) {
      n->aggregate = e->node == ExprNode::Forall ? LossNode::Aggregate::And : LossNode::Aggregate::Or;
    } else {
      n->aggregate = e->node == ExprNode::Forall ? LossNode::Aggregate::Mean : LossNode::Aggregate::Min;
    }
    scope_.push_back({n->var, dims});
    n->args.push_back(formula(dx.residual));
    scope_.pop_back();
    return n;
  }

  LossNodePtr term(const ExprPtr& e) {
    using Op = LossNode::Op;
    switch (e->node) {
    case ExprNode::RatLiteral:
      return cnst(e->rat);
    case ExprNode::NatLiteral:
      return cnst(Rational(static_cast<unsigned long>(e->nat)));
    case ExprNode::Add:
      return bin(Op::Add, term(e->children[0]), term(e->children[1]));
    case ExprNode::Sub:
      return bin(Op::Sub, term(e->children[0]), term(e->children[1]));
    case ExprNode::Mul:
      return bin(Op::Mul, term(e->children[0]), term(e->children[1]));
    case ExprNode::Div:
      return bin(Op::Div, term(e->children[0]), term(e->children[1]));
    case ExprNode::Neg:
      return bin(Op::Sub, cnst(0), term(e->children[0]));
    case ExprNode::Var:
    case ExprNode::Index:
      return access(e);
    default:
      throw CompileError("unsupported-loss-node", "'" + print(e) + "' has no differentiable translation", e->pos);
    }
  }

  LossNodePtr access(const ExprPtr& e) {
    std::vector<std::uint64_t> path;
    ExprPtr base = e;
    while (base->node == ExprNode::Index) {
      const ExprPtr& idx = base->children[1];
      if (idx->node != ExprNode::NatLiteral) {
        throw CompileError("unsupported-loss-node", "symbolic index in '" + print(e) + "'", e->pos);
      }
      path.push_back(idx->nat);
      base = base->children[0];
    }
    std::reverse(path.begin(), path.end());
    auto flatIndex = [&](const std::vector<std::uint64_t>& dims) -> std::size_t {
      if (dims.size() != path.size()) {
        throw CompileError("unsupported-loss-node", "'" + print(e) + "' is not a scalar component", e->pos);
      }
      std::size_t flat = 0;
      for (std::size_t k = 0; k < path.size(); ++k) flat = flat * dims[k] + path[k];
      return flat;
    };

    if (base->node == ExprNode::Var && base->scope == VarScope::Bound) {
      std::size_t level = static_cast<std::size_t>(base->level);
      if (level >= scope_.size()) {
        throw CompileError("unsupported-loss-node", "'" + print(e) + "' is not a sampled variable", e->pos);
      }
      auto n = std::make_shared<LossNode>();
      n->op = LossNode::Op::Var;
      n->var = scope_[level].first;
      n->index = flatIndex(scope_[level].second);
      return n;
    }
    if (base->node == ExprNode::Var && base->scope == VarScope::Global) {
      const Decl& d = tp_.program.decls.at(static_cast<std::size_t>(base->level));
      if (d.kind != DeclKind::Parameter && d.kind != DeclKind::Dataset) {
        throw CompileError("unsupported-loss-node", "'" + print(e) + "' has no differentiable translation", e->pos);
      }
      const TypePtr& t = tp_.declTypes.at(static_cast<std::size_t>(base->level));
      ResourceSlot slot{d.name, d.kind, {}};
      if (t->node == TypeNode::Tensor) slot.dims = tensorDims(t);
      if (t->node == TypeNode::Bool) {
        throw CompileError("unsupported-loss-node", "Boolean parameter '" + d.name + "' must be bound", e->pos);
      }
      resources_[d.name] = slot;
      auto n = std::make_shared<LossNode>();
      n->op = LossNode::Op::Resource;
      n->name = d.name;
      n->index = flatIndex(slot.dims);
      return n;
    }
    if (base->node == ExprNode::App && path.size() == 1) {
      const ExprPtr& fn = base->children[0];
      if (fn->node == ExprNode::Var && fn->scope == VarScope::Global &&
          tp_.program.decls.at(static_cast<std::size_t>(fn->level)).kind == DeclKind::Network) {
        NetworkShape shape = shapeOf(tp_, fn->name);
        networks_[fn->name] = {fn->name, static_cast<std::size_t>(shape.inputDim),
                               static_cast<std::size_t>(shape.outputDim)};
        auto n = std::make_shared<LossNode>();
        n->op = LossNode::Op::NetworkApply;
        n->name = fn->name;
        n->index = path[0];
        const ExprPtr& arg = base->children[1];
        for (std::uint64_t k = 0; k < shape.inputDim; ++k) {
          n->args.push_back(arg->node == ExprNode::VecLiteral ? term(arg->children.at(k))
                                                              : term(expr::index(arg, expr::nat(k), arg->pos)));
        }
        return n;
      }
    }
    throw CompileError("unsupported-loss-node", "'" + print(e) + "' has no differentiable translation", e->pos);
  }

  const TypedProgram& tp_;
  const LossOptions& options_;
  std::vector<std::pair<int, std::vector<std::uint64_t>>> scope_;
  int nextVar_ = 0;
  int nextId_ = 0;
  std::map<std::string, NetworkSlot> networks_;
  std::map<std::string, ResourceSlot> resources_;
};

} // namespace

LossNodePtr translateFormula(const TypedProgram& tp, const ExprPtr& e, const LossOptions& options) {
  Translator t(tp, options);
  return t.formula(e);
}

LossProgram compileLoss(const TypedProgram& tp, const std::string& property, const LossOptions& options) {
  ExprPtr nf = normaliseProperty(tp, property, options.normalise);
  Translator t(tp, options);
  LossNodePtr body = t.formula(nf);
  LossProgram lp;
  lp.property = property;
  lp.logic = options.logic;
  lp.sigma = options.sigma;
  lp.xi = options.xi;
  lp.samples = options.samples;
  lp.seed = options.seed;
  lp.networks = t.networks();
  lp.resources = t.resources();
  lp.root = options.logic.fuzzy() ? bin(LossNode::Op::Sub, cnst(1), body) : body;
  return lp;
}

// ---- JSON ----------------------------------------------------------------

namespace {

nlohmann::json nodeToJson(const LossNodePtr& n) {
  nlohmann::json j;
  j["op"] = opName(n->op);
  switch (n->op) {
  case LossNode::Op::Const:
    j["value"] = toFractionString(n->value);
    return j;
  case LossNode::Op::Var:
    j["var"] = n->var;
    j["index"] = n->index;
    return j;
  case LossNode::Op::Resource:
    j["name"] = n->name;
    j["index"] = n->index;
    return j;
  case LossNode::Op::NetworkApply:
    j["name"] = n->name;
    j["output"] = n->index;
    break;
  case LossNode::Op::SampleForall:
  case LossNode::Op::SampleExists: {
    j["var"] = n->var;
    j["id"] = n->id;
    j["name"] = n->name;
    j["dims"] = n->domain.dims;
    nlohmann::json box = nlohmann::json::array();
    for (const auto& [lo, hi] : n->domain.box) box.push_back({toFractionString(lo), toFractionString(hi)});
    j["domain"] = box;
    j["aggregate"] = aggregateName(n->aggregate);
    j["body"] = nodeToJson(n->args.at(0));
    return j;
  }
  default:
    break;
  }
  j["args"] = nlohmann::json::array();
  for (const auto& a : n->args) j["args"].push_back(nodeToJson(a));
  return j;
}

Rational rat(const nlohmann::json& j) {
  try {
    if (j.is_string()) return parseRational(j.get<std::string>());
    if (j.is_number_integer()) return Rational(j.get<long>());
    if (j.is_number()) return rationalFromDecimalDouble(j.get<double>());
  } catch (const std::invalid_argument&) {
  }
  throw Error("malformed-loss-program", "expected a rational, got " + j.dump());
}

LossNodePtr nodeFromJson(const nlohmann::json& j) {
  static const std::map<std::string, LossNode::Op> ops = {
      {"const", LossNode::Op::Const},   {"var", LossNode::Op::Var},          {"resource", LossNode::Op::Resource},
      {"network", LossNode::Op::NetworkApply}, {"add", LossNode::Op::Add},   {"sub", LossNode::Op::Sub},
      {"mul", LossNode::Op::Mul},       {"div", LossNode::Op::Div},          {"max", LossNode::Op::Max},
      {"min", LossNode::Op::Min},       {"pow", LossNode::Op::Pow},          {"indicator", LossNode::Op::Indicator},
      {"forall", LossNode::Op::SampleForall}, {"exists", LossNode::Op::SampleExists}};
  static const std::map<std::string, LossNode::Aggregate> aggs = {{"mean", LossNode::Aggregate::Mean},
                                                                  {"min", LossNode::Aggregate::Min},
                                                                  {"and", LossNode::Aggregate::And},
                                                                  {"or", LossNode::Aggregate::Or}};
  try {
    auto it = ops.find(j.at("op").get<std::string>());
    if (it == ops.end()) throw Error("malformed-loss-program", "unknown op " + j.at("op").dump());
    auto n = std::make_shared<LossNode>();
    n->op = it->second;
    switch (n->op) {
    case LossNode::Op::Const:
      n->value = rat(j.at("value"));
      return n;
    case LossNode::Op::Var:
      n->var = j.at("var").get<int>();
      n->index = j.at("index").get<std::size_t>();
      return n;
    case LossNode::Op::Resource:
      n->name = j.at("name").get<std::string>();
      n->index = j.at("index").get<std::size_t>();
      return n;
    case LossNode::Op::NetworkApply:
      n->name = j.at("name").get<std::string>();
      n->index = j.at("output").get<std::size_t>();
      break;
    case LossNode::Op::SampleForall:
    case LossNode::Op::SampleExists: {
      n->var = j.at("var").get<int>();
      n->id = j.at("id").get<int>();
      n->name = j.value("name", std::string("x"));
      n->domain.dims = j.at("dims").get<std::vector<std::uint64_t>>();
      for (const auto& iv : j.at("domain")) n->domain.box.emplace_back(rat(iv.at(0)), rat(iv.at(1)));
      auto a = aggs.find(j.at("aggregate").get<std::string>());
      if (a == aggs.end()) throw Error("malformed-loss-program", "unknown aggregate " + j.at("aggregate").dump());
      n->aggregate = a->second;
      n->args.push_back(nodeFromJson(j.at("body")));
      return n;
    }
    default:
      break;
    }
    for (const auto& a : j.at("args")) n->args.push_back(nodeFromJson(a));
    std::size_t want = n->op == LossNode::Op::NetworkApply ? n->args.size() : 2;
    if (n->args.size() != want) throw Error("malformed-loss-program", "'" + opName(n->op) + "' takes two operands");
    return n;
  } catch (const nlohmann::json::exception& e) {
    throw Error("malformed-loss-program", e.what());
  }
}

} // namespace

nlohmann::json toJson(const LossProgram& lp) {
  nlohmann::json j;
  j["format"] = "specbridge-loss/1";
  j["property"] = lp.property;
  j["logic"] = {{"name", lp.logic.name()}};
  if (lp.logic.kind == LogicKind::Yager) j["logic"]["p"] = lp.logic.p;
  j["sigma"] = lp.sigma;
  j["xi"] = lp.xi;
  j["samples"] = lp.samples;
  j["seed"] = lp.seed;
  j["sampler"] = "splitmix64/1";
  j["networks"] = nlohmann::json::array();
  for (const auto& n : lp.networks) {
    j["networks"].push_back({{"name", n.name}, {"inputDim", n.inputDim}, {"outputDim", n.outputDim}});
  }
  j["resources"] = nlohmann::json::array();
  for (const auto& r : lp.resources) {
    j["resources"].push_back({{"name", r.name}, {"kind", declKindName(r.kind)}, {"dims", r.dims}});
  }
  j["root"] = nodeToJson(lp.root);
  return j;
}

LossProgram lossProgramFromJson(const nlohmann::json& j) {
  try {
    if (j.at("format") != "specbridge-loss/1") {
      throw Error("malformed-loss-program", "unsupported format " + j.at("format").dump());
    }
    LossProgram lp;
    lp.property = j.at("property").get<std::string>();
    std::string logic = j.at("logic").at("name").get<std::string>();
    lp.logic = Logic::parse(logic);
    if (lp.logic.kind == LogicKind::Yager) lp.logic.p = j.at("logic").value("p", 2.0);
    lp.sigma = j.value("sigma", 1.0);
    lp.xi = j.value("xi", 1.0);
    lp.samples = j.value("samples", std::size_t{10});
    lp.seed = j.value("seed", std::uint64_t{0});
    for (const auto& n : j.at("networks")) {
      lp.networks.push_back({n.at("name").get<std::string>(), n.at("inputDim").get<std::size_t>(),
                             n.at("outputDim").get<std::size_t>()});
    }
    for (const auto& r : j.at("resources")) {
      ResourceSlot s;
      s.name = r.at("name").get<std::string>();
      s.kind = r.at("kind") == "dataset" ? DeclKind::Dataset : DeclKind::Parameter;
      s.dims = r.at("dims").get<std::vector<std::uint64_t>>();
      lp.resources.push_back(s);
    }
    lp.root = nodeFromJson(j.at("root"));
    return lp;
  } catch (const nlohmann::json::exception& e) {
    throw Error("malformed-loss-program", e.what());
  }
}

// ---- sampling ------------------------------------------------------------

namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

} // namespace

double sampleUnit(std::uint64_t seed, std::uint64_t stream, std::uint64_t sample, std::uint64_t component) {
  std::uint64_t k = splitmix(seed);
  k = splitmix(k ^ stream);
  k = splitmix(k ^ sample);
  k = splitmix(k ^ component);
  return static_cast<double>(k >> 11) * 0x1.0p-53;
}

// ---- evaluation ----------------------------------------------------------

namespace {

struct Dual {
  double v = 0;
  std::vector<double> d; // empty means all-zero

  Dual() = default;
  Dual(double value) : v(value) {} // NOLINT(google-explicit-constructor)
};

void axpy(std::vector<double>& out, double k, const std::vector<double>& x) {
  if (x.empty() || k == 0) return;
  if (out.empty()) out.assign(x.size(), 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) out[i] += k * x[i];
}

double value(double x) { return x; }
double value(const Dual& x) { return x.v; }

Dual operator+(const Dual& a, const Dual& b) {
  Dual r(a.v + b.v);
  r.d = a.d;
  axpy(r.d, 1, b.d);
  return r;
}
Dual operator-(const Dual& a, const Dual& b) {
  Dual r(a.v - b.v);
  r.d = a.d;
  axpy(r.d, -1, b.d);
  return r;
}
Dual operator*(const Dual& a, const Dual& b) {
  Dual r(a.v * b.v);
  axpy(r.d, b.v, a.d);
  axpy(r.d, a.v, b.d);
  return r;
}
Dual operator/(const Dual& a, const Dual& b) {
  Dual r(a.v / b.v);
  axpy(r.d, 1 / b.v, a.d);
  axpy(r.d, -a.v / (b.v * b.v), b.d);
  return r;
}

double powT(double a, double c) { return std::pow(a, c); }
Dual powT(const Dual& a, double c) {
  Dual r(std::pow(a.v, c));
  // At a zero base the derivative is taken as zero.
  if (a.v != 0) axpy(r.d, c * std::pow(a.v, c - 1), a.d);
  return r;
}

template <class T>
class Evaluator {
public:
  Evaluator(const LossProgram& lp, const LossResources& res, std::uint64_t seed, std::size_t samples,
            EvalStats* stats)
      : lp_(lp), res_(res), seed_(seed), samples_(samples), stats_(stats) {
    if (samples == 0) throw Error("invalid-argument", "the sample count must be at least 1");
    std::size_t offset = 0;
    for (const auto& slot : lp.networks) {
      auto it = res.networks.find(slot.name);
      if (it == res.networks.end()) throw ResourceError("unbound-resource", "network '" + slot.name + "' is not bound");
      checkNetworkShape(it->second, slot.inputDim, slot.outputDim, slot.name);
      offsets_[slot.name] = offset;
      offset += it->second.parameterCount();
    }
    totalParams_ = offset;
    for (const auto& slot : lp.resources) {
      auto it = res.values.find(slot.name);
      if (it == res.values.end()) {
        throw ResourceError("unbound-resource", declKindName(slot.kind) + " '" + slot.name + "' is not bound");
      }
      std::size_t size = 1;
      for (auto d : slot.dims) size *= d;
      std::vector<Rational> flat = it->second.flatten();
      if (flat.size() != size) {
        throw ResourceError("resource-shape-mismatch", "'" + slot.name + "' has " + std::to_string(flat.size()) +
                                                           " components, expected " + std::to_string(size));
      }
      std::vector<double> xs;
      for (const auto& r : flat) xs.push_back(toDouble(r));
      values_[slot.name] = xs;
    }
  }

  std::size_t totalParams() const { return totalParams_; }
  std::map<int, std::vector<T>> vars;

  T eval(const LossNodePtr& n) {
    using Op = LossNode::Op;
    switch (n->op) {
    case Op::Const:
      return T(toDouble(n->value));
    case Op::Var: {
      auto it = vars.find(n->var);
      if (it == vars.end() || n->index >= it->second.size()) {
        throw Error("malformed-loss-program", "variable " + std::to_string(n->var) + " is not in scope");
      }
      return it->second[n->index];
    }
    case Op::Resource: {
      auto it = values_.find(n->name);
      if (it == values_.end() || n->index >= it->second.size()) {
        throw ResourceError("unbound-resource", "'" + n->name + "' is not bound");
      }
      return T(it->second[n->index]);
    }
    case Op::NetworkApply:
      return apply(n);
    case Op::Add:
      return eval(n->args[0]) + eval(n->args[1]);
    case Op::Sub:
      return eval(n->args[0]) - eval(n->args[1]);
    case Op::Mul:
      return eval(n->args[0]) * eval(n->args[1]);
    case Op::Div:
      return eval(n->args[0]) / eval(n->args[1]);
    case Op::Max:
      return maxT(eval(n->args[0]), eval(n->args[1]));
    case Op::Min:
      return minT(eval(n->args[0]), eval(n->args[1]));
    case Op::Pow:
      return powT(eval(n->args[0]), value(eval(n->args[1])));
    case Op::Indicator: {
      double a = value(eval(n->args[0]));
      double b = value(eval(n->args[1]));
      kink(a - b);
      return T(a == b ? 1.0 : 0.0);
    }
    case Op::SampleForall:
    case Op::SampleExists:
      return sample(n);
    }
    return T(0.0);
  }

  T combine(bool conj, const T& s, const T& t) {
    switch (lp_.logic.kind) {
    case LogicKind::DL2:
      return conj ? s + t : s * t;
    case LogicKind::Godel:
      return conj ? minT(s, t) : maxT(s, t);
    case LogicKind::Lukasiewicz:
      return conj ? maxT(T(0.0), s + t - T(1.0)) : minT(T(1.0), s + t);
    case LogicKind::Product:
      return conj ? s * t : s + t - s * t;
    case LogicKind::Yager: {
      double p = lp_.logic.p;
      if (conj) return maxT(T(0.0), T(1.0) - powT(powT(T(1.0) - s, p) + powT(T(1.0) - t, p), 1 / p));
      return minT(T(1.0), powT(powT(s, p) + powT(t, p), 1 / p));
    }
    }
    return s;
  }

private:
  void kink(double gap) {
    if (stats_) stats_->kinkMargin = std::min(stats_->kinkMargin, std::abs(gap));
  }

  // Ties take the first operand.
  T maxT(const T& a, const T& b) {
    kink(value(a) - value(b));
    return value(a) >= value(b) ? a : b;
  }
  T minT(const T& a, const T& b) {
    kink(value(a) - value(b));
    return value(a) <= value(b) ? a : b;
  }

  T sample(const LossNodePtr& n) {
    std::size_t comps = n->domain.box.size();
    std::vector<double> lo, width;
    for (const auto& [l, h] : n->domain.box) {
      lo.push_back(toDouble(l));
      width.push_back(toDouble(h) - toDouble(l));
    }
    auto saved = vars.find(n->var) == vars.end() ? std::nullopt : std::optional<std::vector<T>>(vars[n->var]);
    std::optional<T> acc;
    T sum(0.0);
    for (std::size_t s = 0; s < samples_; ++s) {
      std::vector<T> point;
      point.reserve(comps);
      for (std::size_t k = 0; k < comps; ++k) {
        point.push_back(T(lo[k] + sampleUnit(seed_, static_cast<std::uint64_t>(n->id), s, k) * width[k]));
      }
      vars[n->var] = std::move(point);
      cache_.clear();
      T v = eval(n->args[0]);
      switch (n->aggregate) {
      case LossNode::Aggregate::Mean:
        sum = sum + v;
        break;
      case LossNode::Aggregate::Min:
        acc = acc ? minT(*acc, v) : v;
        break;
      case LossNode::Aggregate::And:
      case LossNode::Aggregate::Or:
        acc = acc ? combine(n->aggregate == LossNode::Aggregate::And, *acc, v) : v;
        break;
      }
    }
    if (saved) {
      vars[n->var] = *saved;
    } else {
      vars.erase(n->var);
    }
    cache_.clear();
    if (n->aggregate == LossNode::Aggregate::Mean) return sum / T(static_cast<double>(samples_));
    return *acc;
  }

  const std::string& keyOf(const LossNodePtr& n) {
    auto it = keys_.find(n.get());
    if (it != keys_.end()) return it->second;
    return keys_[n.get()] = nodeToJson(n).dump();
  }

  T apply(const LossNodePtr& n) {
    std::string key = n->name + "|";
    for (const auto& a : n->args) key += keyOf(a) + "|";
    auto hit = cache_.find(key);
    if (hit == cache_.end()) {
      std::vector<T> in;
      in.reserve(n->args.size());
      for (const auto& a : n->args) in.push_back(eval(a));
      const Network& net = res_.networks.at(n->name);
      if (stats_) ++stats_->networkCalls;
      hit = cache_.emplace(key, run(net, offsets_.at(n->name), in)).first;
    }
    return hit->second.at(n->index);
  }

  std::vector<double> run(const Network& net, std::size_t, const std::vector<double>& in) {
    std::vector<double> x = in;
    for (const auto& L : net.layers) {
      std::vector<double> y(L.outputDim());
      for (std::size_t i = 0; i < L.outputDim(); ++i) {
        double s = L.biasF[i];
        for (std::size_t j = 0; j < x.size(); ++j) s += L.weightsF[i][j] * x[j];
        if (L.activation == Activation::ReLU) {
          kink(s);
          s = s > 0 ? s : 0;
        }
        y[i] = s;
      }
      x = std::move(y);
    }
    return x;
  }

  std::vector<Dual> run(const Network& net, std::size_t offset, const std::vector<Dual>& in) {
    std::vector<Dual> x = in;
    std::size_t p = offset;
    for (const auto& L : net.layers) {
      std::size_t rows = L.outputDim();
      std::size_t cols = L.inputDim();
      std::vector<Dual> y(rows);
      std::size_t biasBase = p + rows * cols;
      for (std::size_t i = 0; i < rows; ++i) {
        Dual s(L.biasF[i]);
        s.d.assign(totalParams_, 0.0);
        s.d[biasBase + i] = 1;
        for (std::size_t j = 0; j < cols; ++j) {
          s.v += L.weightsF[i][j] * x[j].v;
          axpy(s.d, L.weightsF[i][j], x[j].d);
          s.d[p + i * cols + j] += x[j].v;
        }
        if (L.activation == Activation::ReLU) {
          kink(s.v);
          if (!(s.v > 0)) s = Dual(0.0);
        }
        y[i] = std::move(s);
      }
      p = biasBase + rows;
      x = std::move(y);
    }
    return x;
  }

  const LossProgram& lp_;
  const LossResources& res_;
  std::uint64_t seed_;
  std::size_t samples_;
  EvalStats* stats_;
  std::map<std::string, std::size_t> offsets_;
  std::size_t totalParams_ = 0;
  std::map<std::string, std::vector<double>> values_;
  std::map<std::string, std::vector<T>> cache_;
  std::map<const LossNode*, std::string> keys_;
};

} // namespace

double evalLoss(const LossProgram& lp, const LossResources& resources, std::uint64_t seed, std::size_t samples,
                EvalStats* stats) {
  Evaluator<double> ev(lp, resources, seed, samples, stats);
  return ev.eval(lp.root);
}

double evalNode(const LossProgram& lp, const LossNodePtr& node, const LossResources& resources,
                const std::map<int, std::vector<double>>& bound, std::uint64_t seed, std::size_t samples,
                EvalStats* stats) {
  Evaluator<double> ev(lp, resources, seed, samples, stats);
  ev.vars = bound;
  return ev.eval(node);
}

LossGradient gradLoss(const LossProgram& lp, const LossResources& resources, std::uint64_t seed, std::size_t samples,
                      EvalStats* stats) {
  Evaluator<Dual> ev(lp, resources, seed, samples, stats);
  Dual r = ev.eval(lp.root);
  LossGradient g;
  g.value = r.v;
  r.d.resize(ev.totalParams(), 0.0);
  std::size_t offset = 0;
  for (const auto& slot : lp.networks) {
    std::size_t n = resources.networks.at(slot.name).parameterCount();
    g.wrt[slot.name] = std::vector<double>(r.d.begin() + static_cast<std::ptrdiff_t>(offset),
                                           r.d.begin() + static_cast<std::ptrdiff_t>(offset + n));
    offset += n;
  }
  return g;
}

} // namespace specbridge
