// SPDX-License-Identifier: Apache-2.0
#include "specbridge/printer.hpp"

#include <sstream>

namespace specbridge {

std::string PrintStyle::sym(const std::string& key) const {
  auto it = symbols.find(key);
  if (it != symbols.end()) return it->second;
  if (key == "binder.") return ".";
  if (key == "lambda->") return "->";
  if (key == "lambda") return "\\";
  return key;
}

namespace {

// Binding strength of each printed form; larger binds tighter.
enum Level : int {
  kBinder = 0,
  kImplies = 1,
  kOr = 2,
  kAnd = 3,
  kNot = 4,
  kCompare = 5,
  kAdd = 6,
  kMul = 7,
  kNeg = 8,
  kIndex = 9,
  kApp = 10,
  kAtom = 11,
};

std::string opSpelling(ExprNode node) {
  switch (node) {
  case ExprNode::Add: return "+";
  case ExprNode::Sub: return "-";
  case ExprNode::Mul: return "*";
  case ExprNode::Div: return "/";
  case ExprNode::And: return "and";
  case ExprNode::Or: return "or";
  case ExprNode::Implies: return "=>";
  case ExprNode::Eq: return "==";
  case ExprNode::Neq: return "!=";
  case ExprNode::Leq: return "<=";
  case ExprNode::Lt: return "<";
  case ExprNode::Geq: return ">=";
  case ExprNode::Gt: return ">";
  case ExprNode::Index: return "!";
  default: return "?";
  }
}

class TypePrinter {
public:
  explicit TypePrinter(const PrintStyle& s) : style_(s) {}

  // level 0: any; 1: operand of an arrow's left side; 2: atom
  std::string print(const TypePtr& t, int level = 0) const {
    switch (t->node) {
    case TypeNode::Pi: {
      std::string binder = t->binderKind == Kind::Nat ? t->name : "(" + t->name + " : Type)";
      return paren(level > 0, style_.sym("forall") + " " + binder + " " + style_.sym("binder.") + " " + print(t->args[0]));
    }
    case TypeNode::Fun:
      return paren(level > 0, print(t->args[0], 1) + " " + style_.sym("->") + " " + print(t->args[1], 0));
    case TypeNode::Tensor: {
      std::vector<TypePtr> dims;
      TypePtr elem = t;
      while (elem->node == TypeNode::Tensor) {
        dims.push_back(elem->args[1]);
        elem = elem->args[0];
      }
      std::string out = style_.sym("Tensor") + " " + print(elem, 2) + " [";
      for (std::size_t i = 0; i < dims.size(); ++i) out += (i ? ", " : "") + print(dims[i]);
      return paren(level > 1, out + "]");
    }
    case TypeNode::Index:
      return paren(level > 1, style_.sym("Index") + " " + print(t->args[0], 2));
    case TypeNode::Named: {
      std::string out = t->name;
      for (const auto& a : t->args) out += " " + print(a, 2);
      return paren(level > 1 && !t->args.empty(), out);
    }
    case TypeNode::Var: return t->name;
    case TypeNode::NatLit: return std::to_string(t->value);
    case TypeNode::Bool: return style_.sym("Bool");
    case TypeNode::Rat: return style_.sym("Rat");
    case TypeNode::Nat: return style_.sym("Nat");
    case TypeNode::Meta: return "?" + std::to_string(t->value);
    }
    return "?";
  }

private:
  static std::string paren(bool wrap, const std::string& s) { return wrap ? "(" + s + ")" : s; }

  const PrintStyle& style_;
};

class ExprPrinter {
public:
  explicit ExprPrinter(const PrintStyle& s) : style_(s), types_(s) {}

  std::string print(const ExprPtr& e, int level = kBinder) const {
    switch (e->node) {
    case ExprNode::Var: return e->name;
    case ExprNode::NatLiteral: return std::to_string(e->nat);
    case ExprNode::RatLiteral: return literal(e->rat, level);
    case ExprNode::True: return style_.sym("true");
    case ExprNode::False: return style_.sym("false");

    case ExprNode::Lambda: {
      if (auto section = sectionOperator(e)) return "(" + style_.sym(*section) + ")";
      return paren(level > kBinder, style_.sym("lambda") + binderText(e) + " " + style_.sym("lambda->") + " " +
                                        print(e->children[0]));
    }
    case ExprNode::Forall:
    case ExprNode::Exists:
    case ExprNode::Foreach: {
      std::string kw = e->node == ExprNode::Forall ? "forall" : e->node == ExprNode::Exists ? "exists" : "foreach";
      return paren(level > kBinder, style_.sym(kw) + " " + binderText(e) + " " + style_.sym("binder.") + " " +
                                        print(e->children[0]));
    }
    case ExprNode::Let:
      return paren(level > kBinder, style_.sym("let") + " " + e->name + " = " + print(e->children[0]) + " " +
                                        style_.sym("in") + " " + print(e->children[1]));
    case ExprNode::If:
      return paren(level > kBinder, style_.sym("if") + " " + print(e->children[0]) + " " + style_.sym("then") + " " +
                                        print(e->children[1]) + " " + style_.sym("else") + " " +
                                        print(e->children[2]));

    case ExprNode::Implies:
      return paren(level > kImplies, print(e->children[0], kOr) + " " + style_.sym("=>") + " " +
                                         print(e->children[1], kImplies));
    case ExprNode::Or:
      return infixLeft(e, level, kOr);
    case ExprNode::And:
      if (e->chained) {
        if (auto chain = chainText(e)) return paren(level > kCompare, *chain);
      }
      return infixLeft(e, level, kAnd);
    case ExprNode::Not:
      return paren(level > kNot, style_.sym("not") + " " + print(e->children[0], kNot));
    case ExprNode::Eq:
    case ExprNode::Neq:
    case ExprNode::Leq:
    case ExprNode::Lt:
    case ExprNode::Geq:
    case ExprNode::Gt:
      return paren(level > kCompare, print(e->children[0], kAdd) + " " + style_.sym(opSpelling(e->node)) + " " +
                                         print(e->children[1], kAdd));
    case ExprNode::Add:
    case ExprNode::Sub:
      return infixLeft(e, level, kAdd);
    case ExprNode::Mul:
    case ExprNode::Div:
      return infixLeft(e, level, kMul);
    case ExprNode::Neg:
      return paren(level > kNeg, "-" + print(e->children[0], kNeg));
    case ExprNode::Index:
      return infixLeft(e, level, kIndex);
    case ExprNode::App:
      return paren(level > kApp, print(e->children[0], kApp) + " " + print(e->children[1], kAtom));
    case ExprNode::Fold:
      return paren(level > kApp, style_.sym("fold") + " " + print(e->children[0], kAtom) + " " +
                                     print(e->children[1], kAtom) + " " + print(e->children[2], kAtom));
    case ExprNode::VecLiteral: {
      std::string out = "[";
      for (std::size_t i = 0; i < e->children.size(); ++i) out += (i ? ", " : "") + print(e->children[i]);
      return out + "]";
    }
    }
    return "?";
  }

private:
  static std::string paren(bool wrap, const std::string& s) { return wrap ? "(" + s + ")" : s; }

  std::string literal(const Rational& r, int level) const {
    std::string dec = toDecimalString(r);
    if (!dec.empty()) return paren(r < 0 && level > kNeg, dec);
    Rational mag = abs(r);
    std::string frac = mag.get_num().get_str() + " / " + mag.get_den().get_str();
    if (r < 0) return paren(level > kNeg, "-(" + frac + ")");
    return paren(level > kMul, frac);
  }

  std::string binderText(const ExprPtr& e) const {
    if (!e->binderType || e->node == ExprNode::Foreach) return e->name;
    return "(" + e->name + " : " + types_.print(e->binderType) + ")";
  }

  std::string infixLeft(const ExprPtr& e, int level, int own) const {
    return paren(level > own, print(e->children[0], own) + " " + style_.sym(opSpelling(e->node)) + " " +
                                  print(e->children[1], own + 1));
  }

  // \_lhs -> \_rhs -> _lhs op _rhs, as produced by an operator section.
  static std::optional<std::string> sectionOperator(const ExprPtr& e) {
    if (e->name != "_lhs" || e->binderType) return std::nullopt;
    const ExprPtr& inner = e->children[0];
    if (inner->node != ExprNode::Lambda || inner->name != "_rhs" || inner->binderType) return std::nullopt;
    const ExprPtr& body = inner->children[0];
    if (body->children.size() != 2 || body->node == ExprNode::App || body->node == ExprNode::Index) return std::nullopt;
    if (!isArithmetic(body->node) && !isComparison(body->node) && body->node != ExprNode::And &&
        body->node != ExprNode::Or && body->node != ExprNode::Implies)
      return std::nullopt;
    const ExprPtr& l = body->children[0];
    const ExprPtr& r = body->children[1];
    if (l->node != ExprNode::Var || l->name != "_lhs" || r->node != ExprNode::Var || r->name != "_rhs") return std::nullopt;
    return opSpelling(body->node);
  }

  void collectChain(const ExprPtr& e, std::vector<ExprPtr>& atoms) const {
    if (e->node == ExprNode::And && e->chained) {
      collectChain(e->children[0], atoms);
      collectChain(e->children[1], atoms);
    } else {
      atoms.push_back(e);
    }
  }

  std::optional<std::string> chainText(const ExprPtr& e) const {
    std::vector<ExprPtr> atoms;
    collectChain(e, atoms);
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      if (!isComparison(atoms[i]->node)) return std::nullopt;
      if (i > 0 && !structurallyEqual(atoms[i - 1]->children[1], atoms[i]->children[0])) return std::nullopt;
    }
    std::string out = print(atoms[0]->children[0], kAdd);
    for (const auto& a : atoms) out += " " + style_.sym(opSpelling(a->node)) + " " + print(a->children[1], kAdd);
    return out;
  }

  const PrintStyle& style_;
  TypePrinter types_;
};

} // namespace

std::string print(const ExprPtr& e, const PrintStyle& style) { return ExprPrinter(style).print(e); }

std::string print(const TypePtr& t, const PrintStyle& style) { return TypePrinter(style).print(t); }

std::string print(const Decl& d, const PrintStyle& style) {
  std::ostringstream out;
  auto equation = [&](const ExprPtr& body) {
    ExprPtr b = body;
    std::string args;
    while (b->node == ExprNode::Lambda && !b->binderType && b->name != "_lhs") {
      args += " " + b->name;
      b = b->children[0];
    }
    out << d.name << args << " = " << print(b, style);
  };

  switch (d.kind) {
  case DeclKind::TypeSynonym:
    out << style.sym("type") << " " << d.name;
    for (const auto& p : d.typeParams) out << " " << p;
    out << " = " << print(d.synonymBody, style);
    break;
  case DeclKind::Network:
  case DeclKind::Dataset:
  case DeclKind::Parameter: {
    std::string ann = d.kind == DeclKind::Network ? "@network" : d.kind == DeclKind::Dataset ? "@dataset" : "@parameter";
    out << style.sym(ann) << "\n" << d.name << " : " << print(d.signature, style);
    break;
  }
  case DeclKind::Property:
    out << style.sym("@property") << "\n" << d.name << " : " << print(d.signature, style) << "\n";
    equation(d.body);
    break;
  case DeclKind::Def:
    if (d.signature) out << d.name << " : " << print(d.signature, style) << "\n";
    equation(d.body);
    break;
  }
  return out.str();
}

std::string print(const Program& p, const PrintStyle& style) {
  std::string out;
  for (std::size_t i = 0; i < p.decls.size(); ++i) {
    if (i) out += "\n";
    out += print(p.decls[i], style) + "\n";
  }
  return out;
}

nlohmann::json toJson(const TypePtr& t) {
  if (!t) return nullptr;
  nlohmann::json j;
  j["node"] = nodeName(t->node);
  switch (t->node) {
  case TypeNode::Pi:
    j["binder"] = t->name;
    j["kind"] = t->binderKind == Kind::Nat ? "Nat" : "Type";
    j["body"] = toJson(t->args[0]);
    return j;
  case TypeNode::Var:
    j["name"] = t->name;
    return j;
  case TypeNode::NatLit:
  case TypeNode::Meta:
    j["value"] = t->value;
    return j;
  case TypeNode::Named:
    j["name"] = t->name;
    break;
  default:
    break;
  }
  if (!t->args.empty()) {
    j["args"] = nlohmann::json::array();
    for (const auto& a : t->args) j["args"].push_back(toJson(a));
  }
  return j;
}

nlohmann::json toJson(const ExprPtr& e) {
  if (!e) return nullptr;
  nlohmann::json j;
  j["node"] = nodeName(e->node);
  switch (e->node) {
  case ExprNode::Var:
    j["name"] = e->name;
    if (e->scope == VarScope::Bound) {
      j["scope"] = "bound";
      j["level"] = e->level;
    } else if (e->scope == VarScope::Global) {
      j["scope"] = "global";
      j["decl"] = e->level;
    }
    return j;
  case ExprNode::RatLiteral:
    j["value"] = toFractionString(e->rat);
    return j;
  case ExprNode::NatLiteral:
    j["value"] = e->nat;
    return j;
  case ExprNode::Lambda:
  case ExprNode::Forall:
  case ExprNode::Exists:
  case ExprNode::Foreach:
    j["binder"] = e->name;
    if (e->binderType) j["annotation"] = toJson(e->binderType);
    j["body"] = toJson(e->children[0]);
    return j;
  case ExprNode::Let:
    j["binder"] = e->name;
    j["bound"] = toJson(e->children[0]);
    j["body"] = toJson(e->children[1]);
    return j;
  default:
    break;
  }
  if (e->chained) j["chained"] = true;
  j["args"] = nlohmann::json::array();
  for (const auto& c : e->children) j["args"].push_back(toJson(c));
  return j;
}

nlohmann::json toJson(const Program& p) {
  nlohmann::json decls = nlohmann::json::array();
  for (const auto& d : p.decls) {
    nlohmann::json j;
    j["kind"] = declKindName(d.kind);
    j["name"] = d.name;
    if (!d.typeParams.empty()) j["params"] = d.typeParams;
    if (d.kind == DeclKind::TypeSynonym) {
      j["type"] = toJson(d.synonymBody);
    } else {
      j["signature"] = toJson(d.signature);
      if (d.body) j["body"] = toJson(d.body);
    }
    decls.push_back(j);
  }
  return nlohmann::json{{"decls", decls}};
}

} // namespace specbridge
