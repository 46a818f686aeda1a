// SPDX-License-Identifier: Apache-2.0
#include "specbridge/verify.hpp"

#include "specbridge/fsutil.hpp"
#include "specbridge/printer.hpp"

#include <algorithm>
#include <atomic>
#include <numeric>
#include <set>
#include <sstream>

namespace specbridge {

namespace {

constexpr Var kOutputBase = 1 << 20;
constexpr Var kProblemBase = 1 << 24;
constexpr Var kAppBase = 1 << 28;
constexpr Var kAppStride = 1 << 16;

Var problemVar(std::size_t k) { return kProblemBase + static_cast<Var>(k); }
bool isProblemVar(Var v) { return v >= kProblemBase && v < kAppBase; }
Var appOutVar(std::size_t app, std::size_t j) {
  return kAppBase + static_cast<Var>(app) * kAppStride + static_cast<Var>(j);
}
bool isAppOutVar(Var v) { return v >= kAppBase; }
std::size_t appOf(Var v) { return static_cast<std::size_t>((v - kAppBase) / kAppStride); }
std::size_t appSlot(Var v) { return static_cast<std::size_t>((v - kAppBase) % kAppStride); }

std::atomic<std::size_t> gSolverCalls{0};

} // namespace

std::size_t ProblemVar::size() const {
  std::size_t n = 1;
  for (auto d : dims) n *= static_cast<std::size_t>(d);
  return n;
}

Var inputVar(std::size_t i) { return static_cast<Var>(i); }
Var outputVar(std::size_t j) { return kOutputBase + static_cast<Var>(j); }
bool isInputVar(Var v) { return v >= 0 && v < kOutputBase; }
bool isOutputVar(Var v) { return v >= kOutputBase && v < kProblemBase; }

std::size_t varIndex(Var v) {
  if (isInputVar(v)) return static_cast<std::size_t>(v);
  if (isOutputVar(v)) return static_cast<std::size_t>(v - kOutputBase);
  return static_cast<std::size_t>(v - kProblemBase);
}

std::string embeddingVarName(Var v) {
  if (isInputVar(v)) return "x" + std::to_string(varIndex(v));
  if (isOutputVar(v)) return "y" + std::to_string(varIndex(v));
  return "p" + std::to_string(varIndex(v));
}

std::string leafResultName(LeafResult::Kind k) {
  switch (k) {
  case LeafResult::Kind::Sat:
    return "sat";
  case LeafResult::Kind::Unsat:
    return "unsat";
  case LeafResult::Kind::Unsolved:
    break;
  }
  return "unsolved";
}

std::string statusName(PropertyStatus::Kind k) {
  switch (k) {
  case PropertyStatus::Kind::Verified:
    return "Verified";
  case PropertyStatus::Kind::Falsified:
    return "Falsified";
  case PropertyStatus::Kind::Error:
    break;
  }
  return "Error";
}

// ---- compilation ---------------------------------------------------------

namespace {

struct Formula {
  enum class Kind { And, Or, Atom, True, False };
  Kind kind = Kind::True;
  std::vector<Formula> kids;
  LinearConstraint atom;
};

struct Application {
  std::string network;
  std::size_t outputDim = 0;
  std::vector<LinearExpr> args;
};

bool isInfiniteBinder(const ExprPtr& e) {
  return (e->node == ExprNode::Forall || e->node == ExprNode::Exists) && e->binderType &&
         e->binderType->node != TypeNode::Bool && e->binderType->node != TypeNode::Index;
}

void scanQuantifiers(const ExprPtr& e, bool& hasForall, bool& hasExists, SourcePos& second) {
  if (!e) return;
  if (e->node == ExprNode::Forall || e->node == ExprNode::Exists) {
    bool& mine = e->node == ExprNode::Forall ? hasForall : hasExists;
    bool other = e->node == ExprNode::Forall ? hasExists : hasForall;
    if (other && !mine) second = e->pos;
    mine = true;
  }
  for (const auto& c : e->children) scanQuantifiers(c, hasForall, hasExists, second);
}

/// Gives every quantified variable of the normal form a distinct name so
/// witnesses can be keyed by name. Returns true if anything was renamed.
class Uniquifier {
public:
  explicit Uniquifier(const ExprPtr& e) { collect(e); }

  ExprPtr run(const ExprPtr& e, bool& renamed) {
    ExprPtr out = walk(e);
    renamed = renamed_;
    return out;
  }

private:
  void collect(const ExprPtr& e) {
    if (!e) return;
    if (isBinder(e->node)) taken_.insert(e->name);
    for (const auto& c : e->children) collect(c);
  }

  std::string pick(const std::string& name) {
    if (!assigned_.count(name)) {
      assigned_.insert(name);
      return name;
    }
    renamed_ = true;
    for (int k = 1;; ++k) {
      std::string candidate = name + "_" + std::to_string(k);
      if (!taken_.count(candidate) && !assigned_.count(candidate)) {
        assigned_.insert(candidate);
        return candidate;
      }
    }
  }

  ExprPtr walk(const ExprPtr& e) {
    if (!e) return e;
    if (e->node == ExprNode::Var && e->scope == VarScope::Bound && e->level >= 0 &&
        static_cast<std::size_t>(e->level) < names_.size() && names_[e->level] != e->name) {
      auto copy = std::make_shared<Expr>(*e);
      copy->name = names_[e->level];
      return copy;
    }
    if (isBinder(e->node) || e->node == ExprNode::Let) {
      std::string name = isInfiniteBinder(e) ? pick(e->name) : e->name;
      std::vector<ExprPtr> kids;
      if (e->node == ExprNode::Let) {
        kids.push_back(walk(e->children[0]));
        names_.push_back(name);
        kids.push_back(walk(e->children[1]));
      } else {
        names_.push_back(name);
        kids.push_back(walk(e->children[0]));
      }
      names_.pop_back();
      auto copy = std::make_shared<Expr>(*e);
      copy->name = name;
      copy->children = std::move(kids);
      return copy;
    }
    if (e->children.empty()) return e;
    std::vector<ExprPtr> kids;
    kids.reserve(e->children.size());
    for (const auto& c : e->children) kids.push_back(walk(c));
    return expr::withChildren(e, std::move(kids));
  }

  std::set<std::string> taken_;
  std::set<std::string> assigned_;
  std::vector<std::string> names_;
  bool renamed_ = false;
};

class Compiler {
public:
  Compiler(const TypedProgram& tp, std::string property) : tp_(tp), property_(std::move(property)) {}

  Formula convert(const ExprPtr& e) {
    switch (e->node) {
    case ExprNode::True:
      return {Formula::Kind::True, {}, {}};
    case ExprNode::False:
      return {Formula::Kind::False, {}, {}};
    case ExprNode::And:
    case ExprNode::Or: {
      Formula f;
      f.kind = e->node == ExprNode::And ? Formula::Kind::And : Formula::Kind::Or;
      for (const auto& c : e->children) f.kids.push_back(convert(c));
      return f;
    }
    case ExprNode::Exists:
    case ExprNode::Forall: {
      ProblemVar pv;
      pv.name = e->name;
      if (e->binderType->node != TypeNode::Rat) pv.dims = tensorDims(e->binderType);
      pv.firstVar = problemVar(nextProblemSlot_);
      nextProblemSlot_ += pv.size();
      scope_.push_back(problemVars_.size());
      problemVars_.push_back(pv);
      Formula body = convert(e->children[0]);
      scope_.pop_back();
      return body;
    }
    case ExprNode::Eq:
    case ExprNode::Neq:
    case ExprNode::Leq:
    case ExprNode::Lt:
    case ExprNode::Geq:
    case ExprNode::Gt:
      return comparison(e);
    case ExprNode::Var:
      if (e->scope == VarScope::Global) unbound(e);
      [[fallthrough]];
    default:
      throw CompileError("unsupported-atom",
                         "'" + print(e) + "' in property '" + property_ + "' is not a linear comparison", e->pos);
    }
  }

  const std::vector<ProblemVar>& problemVars() const { return problemVars_; }
  const std::vector<Application>& apps() const { return apps_; }

private:
  Formula atom(LinearConstraint c) {
    Formula f;
    f.kind = Formula::Kind::Atom;
    f.atom = std::move(c);
    return f;
  }

  Formula comparison(const ExprPtr& e) {
    LinearExpr l = lin(e->children[0]) - lin(e->children[1]);
    LinearExpr zero;
    switch (e->node) {
    case ExprNode::Eq:
      return atom(LinearConstraint::make(l, Relation::Eq, zero));
    case ExprNode::Leq:
      return atom(LinearConstraint::make(l, Relation::Le, zero));
    case ExprNode::Lt:
      return atom(LinearConstraint::make(l, Relation::Lt, zero));
    case ExprNode::Geq:
      return atom(LinearConstraint::make(zero, Relation::Le, l));
    case ExprNode::Gt:
      return atom(LinearConstraint::make(zero, Relation::Lt, l));
    default: {
      Formula f;
      f.kind = Formula::Kind::Or;
      f.kids.push_back(atom(LinearConstraint::make(l, Relation::Lt, zero)));
      f.kids.push_back(atom(LinearConstraint::make(zero, Relation::Lt, l)));
      return f;
    }
    }
  }

  [[noreturn]] void unbound(const ExprPtr& var) {
    const Decl& d = tp_.program.decls.at(static_cast<std::size_t>(var->level));
    if (d.kind == DeclKind::Parameter || d.kind == DeclKind::Dataset) {
      throw CompileError("unbound-resource",
                         declKindName(d.kind) + " '" + d.name + "' must be bound to compile verifier queries", var->pos);
    }
    throw CompileError("unsupported-atom", "'" + print(var) + "' cannot appear in a verifier query", var->pos);
  }

  [[noreturn]] void nonlinear(const ExprPtr& e) {
    throw CompileError("nonlinear-embedding",
                       "'" + print(e) + "' is not affine in the quantified variables of property '" + property_ + "'",
                       e->pos);
  }

  LinearExpr lin(const ExprPtr& e) {
    switch (e->node) {
    case ExprNode::RatLiteral:
      return LinearExpr::ofConstant(e->rat);
    case ExprNode::NatLiteral:
      return LinearExpr::ofConstant(Rational(static_cast<unsigned long>(e->nat)));
    case ExprNode::Add:
      return lin(e->children[0]) + lin(e->children[1]);
    case ExprNode::Sub:
      return lin(e->children[0]) - lin(e->children[1]);
    case ExprNode::Neg:
      return lin(e->children[0]) * Rational(-1);
    case ExprNode::Mul: {
      LinearExpr a = lin(e->children[0]);
      LinearExpr b = lin(e->children[1]);
      if (a.isConstant()) return b * a.constant;
      if (b.isConstant()) return a * b.constant;
      nonlinear(e);
    }
    case ExprNode::Div: {
      LinearExpr a = lin(e->children[0]);
      LinearExpr b = lin(e->children[1]);
      if (!b.isConstant()) nonlinear(e);
      if (b.constant == 0) throw Error("division-by-zero", "division by zero in " + print(e), e->pos);
      return a * (Rational(1) / b.constant);
    }
    case ExprNode::Var:
    case ExprNode::Index:
      return access(e);
    default:
      throw CompileError("unsupported-atom",
                         "'" + print(e) + "' in property '" + property_ + "' has no linear encoding", e->pos);
    }
  }

  LinearExpr access(const ExprPtr& e) {
    std::vector<std::uint64_t> path;
    ExprPtr base = e;
    while (base->node == ExprNode::Index) {
      const ExprPtr& idx = base->children[1];
      if (idx->node == ExprNode::NatLiteral) {
        path.push_back(idx->nat);
      } else if (idx->node == ExprNode::RatLiteral && isInteger(idx->rat) && idx->rat >= 0) {
        path.push_back(idx->rat.get_num().get_ui());
      } else {
        throw CompileError("unsupported-atom", "symbolic index in '" + print(e) + "'", e->pos);
      }
      base = base->children[0];
    }
    std::reverse(path.begin(), path.end());

    if (base->node == ExprNode::Var && base->scope == VarScope::Bound) {
      std::size_t level = static_cast<std::size_t>(base->level);
      if (level >= scope_.size()) {
        throw CompileError("unsupported-atom", "'" + print(e) + "' is not a quantified variable", e->pos);
      }
      const ProblemVar& pv = problemVars_[scope_[level]];
      if (path.size() != pv.dims.size()) {
        throw CompileError("unsupported-atom", "'" + print(e) + "' is not a scalar component", e->pos);
      }
      std::size_t flat = 0;
      for (std::size_t k = 0; k < path.size(); ++k) flat = flat * pv.dims[k] + path[k];
      return LinearExpr::ofVar(pv.firstVar + static_cast<Var>(flat));
    }
    if (base->node == ExprNode::Var && base->scope == VarScope::Global) unbound(base);
    if (base->node == ExprNode::App && path.size() == 1) {
      std::size_t app = application(base);
      if (path[0] >= apps_[app].outputDim) {
        throw CompileError("unsupported-atom", "index out of range in '" + print(e) + "'", e->pos);
      }
      return LinearExpr::ofVar(appOutVar(app, path[0]));
    }
    throw CompileError("unsupported-atom", "'" + print(e) + "' has no linear encoding", e->pos);
  }

  std::size_t application(const ExprPtr& app) {
    const ExprPtr& fn = app->children[0];
    if (fn->node != ExprNode::Var || fn->scope != VarScope::Global ||
        tp_.program.decls.at(static_cast<std::size_t>(fn->level)).kind != DeclKind::Network) {
      throw CompileError("unsupported-atom", "'" + print(app) + "' is not a network application", app->pos);
    }
    NetworkShape shape = shapeOf(tp_, fn->name);
    const ExprPtr& arg = app->children[1];
    Application a;
    a.network = fn->name;
    a.outputDim = static_cast<std::size_t>(shape.outputDim);
    for (std::uint64_t k = 0; k < shape.inputDim; ++k) {
      if (arg->node == ExprNode::VecLiteral) {
        a.args.push_back(lin(arg->children.at(k)));
      } else {
        a.args.push_back(lin(expr::index(arg, expr::nat(k), arg->pos)));
      }
    }
    for (std::size_t i = 0; i < apps_.size(); ++i) {
      if (apps_[i].network == a.network && apps_[i].args == a.args) return i;
    }
    if (apps_.size() >= static_cast<std::size_t>(kAppStride) || a.outputDim >= static_cast<std::size_t>(kAppStride)) {
      throw CompileError("query-explosion", "too many network applications in property '" + property_ + "'");
    }
    apps_.push_back(std::move(a));
    return apps_.size() - 1;
  }

  const TypedProgram& tp_;
  std::string property_;
  std::vector<ProblemVar> problemVars_;
  std::size_t nextProblemSlot_ = 0;
  std::vector<std::size_t> scope_; // residual level -> problemVars_ index
  std::vector<Application> apps_;
};

using Clause = std::vector<LinearConstraint>;

class TreeBuilder {
public:
  TreeBuilder(const Compiler& c, CompiledQueries& out, const CompileOptions& options)
      : compiler_(c), out_(out), options_(options) {
    for (const auto& pv : c.problemVars()) {
      for (std::size_t k = 0; k < pv.size(); ++k) owner_[pv.firstVar + static_cast<Var>(k)] = &pv - c.problemVars().data();
    }
  }

  QueryTree build(const Formula& f) {
    if (f.kind == Formula::Kind::Or) {
      QueryTree t;
      t.kind = QueryTree::Kind::Or;
      std::vector<const Formula*> flat;
      flattenInto(f, Formula::Kind::Or, flat);
      for (const Formula* k : flat) {
        if (k->kind == Formula::Kind::False) continue;
        t.children.push_back(build(*k));
      }
      if (t.children.size() == 1) return std::move(t.children[0]);
      return t;
    }
    if (f.kind == Formula::Kind::False) {
      QueryTree t;
      t.kind = QueryTree::Kind::Or; // no disjuncts: unsatisfiable
      return t;
    }
    std::vector<const Formula*> conjuncts;
    flattenInto(f, Formula::Kind::And, conjuncts);
    auto groups = components(conjuncts);
    if (groups.size() > 1) {
      QueryTree t;
      t.kind = QueryTree::Kind::And;
      for (const auto& g : groups) t.children.push_back(buildComponent(g));
      return t;
    }
    return buildComponent(conjuncts);
  }

private:
  static void flattenInto(const Formula& f, Formula::Kind kind, std::vector<const Formula*>& out) {
    if (f.kind == kind) {
      for (const auto& k : f.kids) flattenInto(k, kind, out);
    } else {
      out.push_back(&f);
    }
  }

  void tokens(const LinearExpr& e, std::set<std::string>& out) const {
    for (const auto& [v, c] : e.coeffs) {
      (void)c;
      if (isProblemVar(v)) {
        out.insert("p" + std::to_string(owner_.at(v)));
      } else if (isAppOutVar(v)) {
        std::size_t a = appOf(v);
        if (out.insert("a" + std::to_string(a)).second) {
          for (const auto& arg : compiler_.apps()[a].args) tokens(arg, out);
        }
      }
    }
  }

  void tokens(const Formula& f, std::set<std::string>& out) const {
    if (f.kind == Formula::Kind::Atom) tokens(f.atom.lhs, out);
    for (const auto& k : f.kids) tokens(k, out);
  }

  std::vector<std::vector<const Formula*>> components(const std::vector<const Formula*>& conjuncts) const {
    std::size_t n = conjuncts.size();
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    std::function<std::size_t(std::size_t)> find = [&](std::size_t i) {
      return parent[i] == i ? i : parent[i] = find(parent[i]);
    };
    std::map<std::string, std::size_t> firstOwner;
    for (std::size_t i = 0; i < n; ++i) {
      std::set<std::string> ts;
      tokens(*conjuncts[i], ts);
      for (const auto& t : ts) {
        auto [it, inserted] = firstOwner.emplace(t, i);
        if (!inserted) parent[find(i)] = find(it->second);
      }
    }
    // Variable-free conjuncts join the first component so they are not lost.
    std::vector<std::vector<const Formula*>> groups;
    std::map<std::size_t, std::size_t> groupOf;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t r = find(i);
      auto [it, inserted] = groupOf.emplace(r, groups.size());
      if (inserted) groups.emplace_back();
      groups[it->second].push_back(conjuncts[i]);
    }
    if (groups.size() > 1) {
      std::vector<const Formula*> constants;
      std::vector<std::vector<const Formula*>> kept;
      for (auto& g : groups) {
        std::set<std::string> ts;
        for (const Formula* f : g) tokens(*f, ts);
        if (ts.empty()) {
          constants.insert(constants.end(), g.begin(), g.end());
        } else {
          kept.push_back(std::move(g));
        }
      }
      if (kept.empty()) return {constants};
      kept[0].insert(kept[0].end(), constants.begin(), constants.end());
      return kept;
    }
    return groups;
  }

  std::vector<Clause> dnf(const Formula& f) {
    switch (f.kind) {
    case Formula::Kind::True:
      return {Clause{}};
    case Formula::Kind::False:
      return {};
    case Formula::Kind::Atom:
      return {Clause{f.atom}};
    case Formula::Kind::Or: {
      std::vector<Clause> out;
      for (const auto& k : f.kids) {
        auto part = dnf(k);
        out.insert(out.end(), part.begin(), part.end());
        checkSize(out.size());
      }
      return out;
    }
    case Formula::Kind::And: {
      std::vector<Clause> acc{Clause{}};
      for (const auto& k : f.kids) {
        auto part = dnf(k);
        checkSize(acc.size() * part.size());
        std::vector<Clause> next;
        for (const auto& a : acc) {
          for (const auto& b : part) {
            Clause c = a;
            c.insert(c.end(), b.begin(), b.end());
            next.push_back(std::move(c));
          }
        }
        acc = std::move(next);
      }
      return acc;
    }
    }
    return {};
  }

  void checkSize(std::size_t n) const {
    if (n > options_.maxLeaves) {
      throw CompileError("query-explosion", "property '" + out_.property + "' needs more than " +
                                                std::to_string(options_.maxLeaves) + " verifier queries");
    }
  }

  QueryTree buildComponent(const std::vector<const Formula*>& conjuncts) {
    Formula conj;
    conj.kind = Formula::Kind::And;
    for (const Formula* f : conjuncts) conj.kids.push_back(*f);
    auto clauses = dnf(conj);
    if (clauses.size() == 1) return leaf(clauses[0]);
    QueryTree t;
    t.kind = QueryTree::Kind::Or;
    for (const auto& c : clauses) t.children.push_back(leaf(c));
    return t;
  }

  void collectApps(const LinearExpr& e, std::set<std::size_t>& out) const {
    for (const auto& [v, c] : e.coeffs) {
      (void)c;
      if (isAppOutVar(v) && out.insert(appOf(v)).second) {
        for (const auto& arg : compiler_.apps()[appOf(v)].args) collectApps(arg, out);
      }
    }
  }

  QueryTree leaf(const Clause& clause) {
    const auto& apps = compiler_.apps();
    std::set<std::size_t> used;
    for (const auto& c : clause) collectApps(c.lhs, used);

    Query q;
    q.id = static_cast<int>(out_.queries.size()) + 1;
    std::map<std::size_t, NetworkBlock> blockOf;
    std::size_t in = 0;
    std::size_t outOff = 0;
    for (std::size_t a : used) {
      NetworkBlock b;
      b.network = apps[a].network;
      b.inputOffset = in;
      b.inputDim = apps[a].args.size();
      b.outputOffset = outOff;
      b.outputDim = apps[a].outputDim;
      in += b.inputDim;
      outOff += b.outputDim;
      blockOf[a] = b;
      q.blocks.push_back(b);
    }
    auto remap = [&](const LinearExpr& e) {
      LinearExpr r = LinearExpr::ofConstant(e.constant);
      for (const auto& [v, c] : e.coeffs) {
        Var target = v;
        if (isAppOutVar(v)) target = outputVar(blockOf.at(appOf(v)).outputOffset + appSlot(v));
        r += LinearExpr::ofVar(target, c);
      }
      return r;
    };
    for (const auto& c : clause) q.original.push_back(LinearConstraint{remap(c.lhs), c.rel});
    for (std::size_t a : used) {
      const NetworkBlock& b = blockOf.at(a);
      for (std::size_t i = 0; i < b.inputDim; ++i) {
        q.original.push_back(LinearConstraint::make(LinearExpr::ofVar(inputVar(b.inputOffset + i)), Relation::Eq,
                                                    remap(apps[a].args[i])));
      }
    }

    std::set<Var> keep;
    for (const auto& b : q.blocks) {
      for (std::size_t i = 0; i < b.inputDim; ++i) keep.insert(inputVar(b.inputOffset + i));
      for (std::size_t j = 0; j < b.outputDim; ++j) keep.insert(outputVar(b.outputOffset + j));
    }
    EliminationResult elim = eliminateVariables(q.original, keep, options_.trace);
    q.recon = elim.recon;
    if (elim.infeasible) {
      q.constraints = {LinearConstraint{LinearExpr::ofConstant(1), Relation::Le}};
    } else {
      q.constraints = simplify(elim.reduced);
      std::stable_sort(q.constraints.begin(), q.constraints.end(),
                       [](const LinearConstraint& a, const LinearConstraint& b) {
                         auto key = [](const LinearConstraint& c) {
                           bool out = std::any_of(c.lhs.coeffs.begin(), c.lhs.coeffs.end(),
                                                  [](const auto& kv) { return isOutputVar(kv.first); });
                           Var first = c.lhs.coeffs.empty() ? -1 : c.lhs.coeffs.begin()->first;
                           return std::make_pair(out, first);
                         };
                         return key(a) < key(b);
                       });
    }

    std::set<std::size_t> pvs;
    for (Var v : variablesOf(q.original)) {
      if (isProblemVar(v)) pvs.insert(owner_.at(v));
    }
    for (std::size_t k : pvs) q.problemVars.push_back(compiler_.problemVars()[k]);

    QueryTree t;
    t.kind = QueryTree::Kind::Leaf;
    t.leaf = out_.queries.size();
    out_.queries.push_back(std::move(q));
    return t;
  }

  const Compiler& compiler_;
  CompiledQueries& out_;
  const CompileOptions& options_;
  std::map<Var, std::size_t> owner_;
};

} // namespace

CompiledQueries compileQueries(const TypedProgram& tp, const std::string& property, const CompileOptions& options) {
  ExprPtr nf = normaliseProperty(tp, property, options.normalise);
  bool hasForall = false;
  bool hasExists = false;
  SourcePos second;
  scanQuantifiers(nf, hasForall, hasExists, second);
  if (hasForall && hasExists) {
    throw CompileError("alternating-quantifiers",
                       "property '" + property +
                           "' mixes universal and existential quantifiers over infinite domains; verifier queries "
                           "support one quantifier kind",
                       second.line ? second : tp.decl(property).pos);
  }
  CompiledQueries cq;
  cq.property = property;
  cq.negated = !hasExists;
  bool renamed = false;
  cq.normalForm = Uniquifier(nf).run(nf, renamed);

  ExprPtr target = cq.negated ? negateNormal(cq.normalForm) : cq.normalForm;
  Compiler compiler(tp, property);
  Formula f = compiler.convert(target);
  TreeBuilder builder(compiler, cq, options);
  cq.root = builder.build(f);
  return cq;
}

// ---- emission ------------------------------------------------------------

namespace {

std::string number(const Rational& r) {
  if (isInteger(r)) return r.get_num().get_str();
  std::string d = toDecimalString(r);
  return d.empty() ? toFractionString(r) : d;
}

std::string renderConstraint(const LinearConstraint& c, const Rational& slack) {
  if (c.lhs.isConstant()) {
    // lhs rel 0 with no variables: print as 0 rel -constant.
    std::string op = c.rel == Relation::Eq ? "=" : "<=";
    Rational rhs = -c.lhs.constant;
    if (c.rel == Relation::Lt) rhs -= slack;
    return "0 " + op + " " + number(rhs);
  }
  Var pivot = -1;
  for (const auto& [v, k] : c.lhs.coeffs) {
    (void)k;
    if (isOutputVar(v)) {
      pivot = v;
      break;
    }
  }
  if (pivot < 0) pivot = c.lhs.coeffs.begin()->first;
  Rational pc = c.lhs.coeff(pivot);
  Rational scale = Rational(1) / abs(pc);
  if (c.rel == Relation::Eq) scale = Rational(1) / pc;
  bool flip = c.rel != Relation::Eq && pc < 0;
  if (flip) scale = -scale;
  LinearExpr e = c.lhs * scale;

  std::ostringstream out;
  bool first = true;
  auto term = [&](Var v, const Rational& k) {
    Rational mag = abs(k);
    std::string coef = mag == 1 ? "" : number(mag);
    if (first) {
      out << (k < 0 ? "-" : "") << coef << embeddingVarName(v);
      first = false;
    } else {
      out << (k < 0 ? " - " : " + ") << coef << embeddingVarName(v);
    }
  };
  for (const auto& [v, k] : e.coeffs)
    if (isInputVar(v)) term(v, k);
  for (const auto& [v, k] : e.coeffs)
    if (isOutputVar(v)) term(v, k);

  Rational rhs = -e.constant;
  std::string op;
  if (c.rel == Relation::Eq) {
    op = "=";
  } else if (!flip) {
    op = "<=";
    if (c.rel == Relation::Lt) rhs -= slack;
  } else {
    op = ">=";
    if (c.rel == Relation::Lt) rhs += slack;
  }
  out << " " << op << " " << number(rhs);
  return out.str();
}

nlohmann::json nodeJson(const QueryTree& t, const CompiledQueries& cq) {
  nlohmann::json j;
  switch (t.kind) {
  case QueryTree::Kind::Leaf: {
    const Query& q = cq.queries[t.leaf];
    j["kind"] = "leaf";
    j["query"] = q.id;
    j["file"] = "query" + std::to_string(q.id) + ".txt";
    nlohmann::json blocks = nlohmann::json::array();
    for (const auto& b : q.blocks) {
      blocks.push_back({{"network", b.network},
                        {"inputs", {b.inputOffset, b.inputDim}},
                        {"outputs", {b.outputOffset, b.outputDim}}});
    }
    j["networks"] = blocks;
    nlohmann::json pvs = nlohmann::json::array();
    for (const auto& pv : q.problemVars) pvs.push_back({{"name", pv.name}, {"dims", pv.dims}});
    j["variables"] = pvs;
    return j;
  }
  case QueryTree::Kind::And:
  case QueryTree::Kind::Or:
    j["kind"] = t.kind == QueryTree::Kind::And ? "and" : "or";
    j["children"] = nlohmann::json::array();
    for (const auto& c : t.children) j["children"].push_back(nodeJson(c, cq));
    return j;
  }
  return j;
}

} // namespace

std::string renderQuery(const Query& q, const Rational& slack) {
  std::string out;
  for (const auto& c : q.constraints) out += renderConstraint(c, slack) + "\n";
  return out;
}

nlohmann::json treeJson(const CompiledQueries& cq) {
  return {{"format", "specbridge-query-tree/1"},
          {"property", cq.property},
          {"negated", cq.negated},
          {"root", nodeJson(cq.root, cq)}};
}

std::vector<std::string> emitQueryFiles(const CompiledQueries& cq, const std::filesystem::path& dir,
                                        const Rational& slack) {
  std::filesystem::create_directories(dir);
  std::vector<std::string> files;
  for (const auto& q : cq.queries) {
    std::string name = "query" + std::to_string(q.id) + ".txt";
    writeFileAtomic(dir / name, renderQuery(q, slack));
    files.push_back(name);
  }
  writeFileAtomic(dir / "tree.json", treeJson(cq).dump(2) + "\n");
  files.push_back("tree.json");
  return files;
}

// ---- solver --------------------------------------------------------------

namespace {

class PatternSearch {
public:
  PatternSearch(const Query& q, std::vector<const Network*> nets) : q_(q), nets_(std::move(nets)), cs_(q.constraints) {}

  std::optional<Assignment> run() {
    if (!solveLinear(cs_)) return std::nullopt;
    return block(0);
  }

  std::size_t explored = 0;

private:
  std::vector<LinearExpr> inputsOf(std::size_t b) const {
    std::vector<LinearExpr> xs;
    for (std::size_t i = 0; i < q_.blocks[b].inputDim; ++i) {
      xs.push_back(LinearExpr::ofVar(inputVar(q_.blocks[b].inputOffset + i)));
    }
    return xs;
  }

  std::optional<Assignment> block(std::size_t b) {
    if (b == q_.blocks.size()) {
      ++explored;
      return solveLinear(cs_);
    }
    return layer(b, 0, inputsOf(b));
  }

  std::optional<Assignment> layer(std::size_t b, std::size_t l, const std::vector<LinearExpr>& vals) {
    const Network& net = *nets_[b];
    if (l == net.layers.size()) {
      std::size_t mark = cs_.size();
      for (std::size_t j = 0; j < vals.size(); ++j) {
        cs_.push_back(LinearConstraint::make(LinearExpr::ofVar(outputVar(q_.blocks[b].outputOffset + j)), Relation::Eq,
                                             vals[j]));
      }
      std::optional<Assignment> r;
      if (solveLinear(cs_)) r = block(b + 1);
      cs_.resize(mark);
      return r;
    }
    const Layer& L = net.layers[l];
    std::vector<LinearExpr> pre;
    pre.reserve(L.outputDim());
    for (std::size_t i = 0; i < L.outputDim(); ++i) {
      LinearExpr s = LinearExpr::ofConstant(L.bias[i]);
      for (std::size_t k = 0; k < vals.size(); ++k) {
        if (L.weights[i][k] != 0) s += vals[k] * L.weights[i][k];
      }
      pre.push_back(std::move(s));
    }
    if (L.activation == Activation::Identity) return layer(b, l + 1, pre);
    std::vector<LinearExpr> post = pre;
    return unit(b, l, 0, pre, post);
  }

  std::optional<Assignment> unit(std::size_t b, std::size_t l, std::size_t u, const std::vector<LinearExpr>& pre,
                                 std::vector<LinearExpr>& post) {
    if (u == pre.size()) return layer(b, l + 1, post);
    for (bool active : {true, false}) {
      LinearConstraint guard = active ? LinearConstraint::make(LinearExpr{}, Relation::Le, pre[u])
                                      : LinearConstraint::make(pre[u], Relation::Le, LinearExpr{});
      cs_.push_back(guard);
      std::optional<Assignment> r;
      if (solveLinear(cs_)) {
        post[u] = active ? pre[u] : LinearExpr{};
        r = unit(b, l, u + 1, pre, post);
      }
      cs_.pop_back();
      if (r) return r;
    }
    post[u] = pre[u];
    return std::nullopt;
  }

  const Query& q_;
  std::vector<const Network*> nets_;
  std::vector<LinearConstraint> cs_;
};

} // namespace

SolveResult solveQuery(const Query& q, const std::map<std::string, Network>& networks, const SolverOptions& options) {
  ++gSolverCalls;
  std::vector<const Network*> nets;
  std::size_t relus = 0;
  for (const auto& b : q.blocks) {
    auto it = networks.find(b.network);
    if (it == networks.end()) {
      throw ResourceError("unbound-resource", "network '" + b.network + "' is not bound");
    }
    checkNetworkShape(it->second, b.inputDim, b.outputDim, b.network);
    relus += it->second.reluCount();
    nets.push_back(&it->second);
  }
  if (relus > options.patternBudget) {
    throw Error("pattern-budget-exceeded", "query " + std::to_string(q.id) + " has " + std::to_string(relus) +
                                               " ReLU units; the pattern budget is " +
                                               std::to_string(options.patternBudget));
  }

  PatternSearch search(q, nets);
  std::optional<Assignment> found = search.run();
  SolveResult r;
  r.patternsExplored = search.explored;
  if (!found) return r;

  Assignment w;
  for (std::size_t bi = 0; bi < q.blocks.size(); ++bi) {
    const NetworkBlock& b = q.blocks[bi];
    std::vector<Rational> xs;
    for (std::size_t i = 0; i < b.inputDim; ++i) {
      Var v = inputVar(b.inputOffset + i);
      auto it = found->find(v);
      w[v] = it == found->end() ? Rational(0) : it->second;
      xs.push_back(w[v]);
    }
    std::vector<Rational> ys = evalNetwork(*nets[bi], xs);
    for (std::size_t j = 0; j < b.outputDim; ++j) {
      Var v = outputVar(b.outputOffset + j);
      auto it = found->find(v);
      if (it != found->end() && it->second != ys[j]) {
        throw Error("internal-solver", "solver witness disagrees with network '" + b.network + "'");
      }
      w[v] = ys[j];
    }
  }
  for (const auto& c : q.constraints) {
    if (!c.holds(w)) throw Error("internal-solver", "solver witness violates query " + std::to_string(q.id));
  }
  r.sat = true;
  r.witness = std::move(w);
  return r;
}

std::size_t solverInvocations() { return gSolverCalls.load(); }

// ---- verdicts ------------------------------------------------------------

nlohmann::json toJson(const GroundValue& g) {
  switch (g.kind) {
  case GroundValue::Kind::Rat:
    return toFractionString(g.rat);
  case GroundValue::Kind::Bool:
    return g.boolean;
  case GroundValue::Kind::Vec: {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& e : g.elems) a.push_back(toJson(e));
    return a;
  }
  }
  return nullptr;
}

nlohmann::json toJson(const PropertyStatus& s) {
  nlohmann::json j;
  j["status"] = statusName(s.kind);
  if (!s.reason.empty()) j["reason"] = s.reason;
  if (!s.witness.empty()) {
    j["witness"] = nlohmann::json::object();
    for (const auto& [name, v] : s.witness) j["witness"][name] = toJson(v);
  }
  if (!s.embedding.empty()) {
    j["embedding"] = nlohmann::json::object();
    for (const auto& [name, v] : s.embedding) j["embedding"][name] = toFractionString(v);
  }
  return j;
}

std::optional<bool> evaluateTree(const QueryTree& tree, std::vector<LeafResult>& results,
                                 const std::function<LeafResult(std::size_t)>& solve,
                                 std::vector<std::size_t>* satLeaves) {
  switch (tree.kind) {
  case QueryTree::Kind::Leaf: {
    if (results.size() <= tree.leaf) results.resize(tree.leaf + 1);
    if (results[tree.leaf].kind == LeafResult::Kind::Unsolved && solve) results[tree.leaf] = solve(tree.leaf);
    switch (results[tree.leaf].kind) {
    case LeafResult::Kind::Sat:
      if (satLeaves) satLeaves->push_back(tree.leaf);
      return true;
    case LeafResult::Kind::Unsat:
      return false;
    case LeafResult::Kind::Unsolved:
      return std::nullopt;
    }
    return std::nullopt;
  }
  case QueryTree::Kind::Or: {
    bool unknown = false;
    for (const auto& c : tree.children) {
      std::vector<std::size_t> local;
      auto r = evaluateTree(c, results, solve, &local);
      if (r && *r) {
        if (satLeaves) satLeaves->insert(satLeaves->end(), local.begin(), local.end());
        return true;
      }
      if (!r) unknown = true;
    }
    if (unknown) return std::nullopt;
    return false;
  }
  case QueryTree::Kind::And: {
    bool unknown = false;
    std::vector<std::size_t> all;
    for (const auto& c : tree.children) {
      auto r = evaluateTree(c, results, solve, &all);
      if (r && !*r) return false;
      if (!r) unknown = true;
    }
    if (unknown) return std::nullopt;
    if (satLeaves) satLeaves->insert(satLeaves->end(), all.begin(), all.end());
    return true;
  }
  }
  return std::nullopt;
}

std::map<std::string, GroundValue> liftCounterexample(const Query& q, const Assignment& embedding) {
  Assignment a = embedding;
  q.recon.replay(a);
  for (const auto& c : q.original) {
    bool ok = false;
    try {
      ok = c.holds(a);
    } catch (const Error&) {
      ok = false;
    }
    if (!ok) {
      throw Error("internal-lifting", "lifted assignment violates a constraint of query " + std::to_string(q.id));
    }
  }
  std::map<std::string, GroundValue> out;
  for (const auto& pv : q.problemVars) {
    std::vector<Rational> flat;
    for (std::size_t k = 0; k < pv.size(); ++k) {
      auto it = a.find(pv.firstVar + static_cast<Var>(k));
      flat.push_back(it == a.end() ? Rational(0) : it->second);
    }
    std::function<GroundValue(std::size_t, std::size_t&)> shape = [&](std::size_t d, std::size_t& pos) {
      if (d == pv.dims.size()) return GroundValue::ofRat(flat[pos++]);
      std::vector<GroundValue> elems;
      for (std::uint64_t i = 0; i < pv.dims[d]; ++i) elems.push_back(shape(d + 1, pos));
      return GroundValue::ofVec(std::move(elems));
    };
    std::size_t pos = 0;
    out[pv.name] = shape(0, pos);
  }
  return out;
}

namespace {

void zeroDefaults(const ExprPtr& e, std::map<std::string, GroundValue>& env) {
  if (!e) return;
  if (isInfiniteBinder(e) && !env.count(e->name)) {
    if (e->binderType->node == TypeNode::Rat) {
      env[e->name] = GroundValue::ofRat(0);
    } else {
      auto dims = tensorDims(e->binderType);
      std::function<GroundValue(std::size_t)> zero = [&](std::size_t d) {
        if (d == dims.size()) return GroundValue::ofRat(0);
        return GroundValue::ofVec(std::vector<GroundValue>(dims[d], zero(d + 1)));
      };
      env[e->name] = zero(0);
    }
  }
  for (const auto& c : e->children) zeroDefaults(c, env);
}

} // namespace

PropertyStatus deriveStatus(const TypedProgram& tp, const CompiledQueries& cq, std::vector<LeafResult>& results,
                            const std::map<std::string, Network>& networks,
                            const std::function<LeafResult(std::size_t)>& solve) {
  results.resize(cq.queries.size());
  std::vector<std::size_t> satLeaves;
  std::optional<bool> sat = evaluateTree(cq.root, results, solve, &satLeaves);
  PropertyStatus s;
  if (!sat) {
    s.kind = PropertyStatus::Kind::Error;
    s.reason = "some verifier queries are unsolved";
    return s;
  }
  bool holds = cq.negated ? !*sat : *sat;
  s.kind = holds ? PropertyStatus::Kind::Verified : PropertyStatus::Kind::Falsified;
  if (!*sat) return s;

  for (std::size_t leaf : satLeaves) {
    const Query& q = cq.queries[leaf];
    const Assignment& w = results[leaf].witness;
    auto lifted = liftCounterexample(q, w);
    s.witness.insert(lifted.begin(), lifted.end());
    std::string prefix = satLeaves.size() > 1 ? "q" + std::to_string(q.id) + "." : "";
    for (const auto& [v, value] : w) s.embedding[prefix + embeddingVarName(v)] = value;
  }

  GroundEnv env;
  env.quantified = s.witness;
  zeroDefaults(cq.normalForm, env.quantified);
  for (const auto& [name, net] : networks) {
    const Network* p = &net;
    env.networks[name] = [p](const std::vector<Rational>& x) { return evalNetwork(*p, x); };
  }
  bool value = evaluateGround(tp, cq.normalForm, env);
  if (value != holds) {
    throw Error("internal-lifting", "lifted witness does not " + std::string(holds ? "satisfy" : "falsify") +
                                        " property '" + cq.property + "'");
  }
  return s;
}

PropertyStatus verifyProperty(const TypedProgram& tp, const std::string& property,
                              const std::map<std::string, Network>& networks, const CompileOptions& compile,
                              const SolverOptions& solver) {
  CompiledQueries cq = compileQueries(tp, property, compile);
  std::vector<LeafResult> results(cq.queries.size());
  auto solve = [&](std::size_t leaf) {
    SolveResult r = solveQuery(cq.queries[leaf], networks, solver);
    LeafResult lr;
    lr.kind = r.sat ? LeafResult::Kind::Sat : LeafResult::Kind::Unsat;
    lr.witness = std::move(r.witness);
    return lr;
  };
  return deriveStatus(tp, cq, results, networks, solve);
}

} // namespace specbridge
