// SPDX-License-Identifier: Apache-2.0
#include "specbridge/parser.hpp"

#include <algorithm>
#include <set>

namespace specbridge {

namespace {

class Parser {
public:
  explicit Parser(const std::vector<Token>& tokens) : toks_(tokens) {}

  Program program() {
    Program p;
    while (!at(TokenKind::End)) {
      expect(TokenKind::DeclStart);
      p.decls.push_back(declaration());
      if (!at(TokenKind::DeclStart) && !at(TokenKind::End)) fail({TokenKind::DeclStart, TokenKind::End});
    }
    return p;
  }

  ExprPtr standaloneExpression() {
    skipMarkers();
    ExprPtr e = expression();
    skipMarkers();
    if (!at(TokenKind::End)) fail({TokenKind::End});
    return e;
  }

  TypePtr standaloneType() {
    skipMarkers();
    TypePtr t = type();
    skipMarkers();
    if (!at(TokenKind::End)) fail({TokenKind::End});
    return t;
  }

private:
  const Token& peek(std::size_t ahead = 0) const {
    return toks_[std::min(pos_ + ahead, toks_.size() - 1)];
  }

  bool at(TokenKind kind) const { return peek().kind == kind; }

  const Token& advance() {
    const Token& t = peek();
    if (pos_ < toks_.size() - 1) ++pos_;
    return t;
  }

  bool accept(TokenKind kind) {
    if (!at(kind)) return false;
    advance();
    return true;
  }

  const Token& expect(TokenKind kind) {
    if (!at(kind)) fail({kind});
    return advance();
  }

  void skipMarkers() {
    while (at(TokenKind::DeclStart) || at(TokenKind::LineStart)) advance();
  }

  [[noreturn]] void fail(std::initializer_list<TokenKind> expected) const {
    std::set<std::string> names;
    for (TokenKind k : expected) names.insert(tokenKindName(k));
    failNamed(names);
  }

  [[noreturn]] void failNamed(const std::set<std::string>& expected) const {
    std::string list;
    for (const auto& n : expected) list += (list.empty() ? "" : ", ") + n;
    const Token& t = peek();
    std::string found = tokenKindName(t.kind) + (t.text.empty() ? "" : " '" + t.text + "'");
    throw ParseError("unexpected-token", "expected one of {" + list + "} but found " + found, t.pos);
  }

  // ---- declarations ------------------------------------------------------

  Decl declaration() {
    const Token& first = peek();
    if (first.kind == TokenKind::Annotation) return annotated();
    if (first.kind == TokenKind::KwType) return synonym();
    if (first.kind == TokenKind::Ident) return definition();
    fail({TokenKind::Annotation, TokenKind::KwType, TokenKind::Ident});
  }

  Decl annotated() {
    const Token& ann = advance();
    accept(TokenKind::LineStart);
    Decl d;
    d.pos = ann.pos;
    if (ann.text == "@network") d.kind = DeclKind::Network;
    else if (ann.text == "@dataset") d.kind = DeclKind::Dataset;
    else if (ann.text == "@parameter") d.kind = DeclKind::Parameter;
    else d.kind = DeclKind::Property;

    d.name = expect(TokenKind::Ident).text;
    expect(TokenKind::Colon);
    d.signature = type();
    if (d.kind == DeclKind::Property) d.body = equation(d.name, true);
    return d;
  }

  Decl synonym() {
    Decl d;
    d.pos = advance().pos;
    d.kind = DeclKind::TypeSynonym;
    d.name = expect(TokenKind::Ident).text;
    while (at(TokenKind::Ident)) d.typeParams.push_back(advance().text);
    expect(TokenKind::Assign);
    d.synonymBody = type();
    return d;
  }

  Decl definition() {
    Decl d;
    d.kind = DeclKind::Def;
    d.pos = peek().pos;
    if (peek(1).kind == TokenKind::Colon) {
      d.name = advance().text;
      advance();
      d.signature = type();
      d.body = equation(d.name, true);
    } else {
      d.name = peek().text;
      d.body = equation(d.name, false);
    }
    return d;
  }

  // name args* = expr, optionally preceded by a LineStart marker.
  ExprPtr equation(const std::string& name, bool afterSignature) {
    if (afterSignature) {
      if (at(TokenKind::DeclStart) && peek(1).kind == TokenKind::Ident && peek(2).kind != TokenKind::Colon) {
        advance();
      } else {
        expect(TokenKind::LineStart);
      }
    }
    const Token& head = expect(TokenKind::Ident);
    if (head.text != name) {
      throw ParseError("definition-name-mismatch",
                       "definition of '" + head.text + "' follows the signature of '" + name + "'", head.pos);
    }
    std::vector<Token> args;
    while (at(TokenKind::Ident)) args.push_back(advance());
    expect(TokenKind::Assign);
    ExprPtr body = expression();
    for (auto it = args.rbegin(); it != args.rend(); ++it) {
      body = expr::binder(ExprNode::Lambda, it->text, nullptr, body, it->pos);
    }
    return body;
  }

  // ---- types -------------------------------------------------------------

  TypePtr type() {
    if (at(TokenKind::KwForall)) {
      SourcePos p = advance().pos;
      std::vector<std::pair<std::string, Kind>> binders;
      do {
        if (accept(TokenKind::LParen)) {
          std::string name = expect(TokenKind::Ident).text;
          expect(TokenKind::Colon);
          const Token& k = expect(TokenKind::Ident);
          if (k.text != "Nat" && k.text != "Type") {
            throw ParseError("unexpected-token", "expected kind Nat or Type but found '" + k.text + "'", k.pos);
          }
          expect(TokenKind::RParen);
          binders.emplace_back(name, k.text == "Nat" ? Kind::Nat : Kind::Type);
        } else {
          binders.emplace_back(expect(TokenKind::Ident).text, Kind::Nat);
        }
      } while (at(TokenKind::Ident) || at(TokenKind::LParen));
      expect(TokenKind::Dot);
      TypePtr body = type();
      for (auto it = binders.rbegin(); it != binders.rend(); ++it) {
        auto t = std::make_shared<Type>(*types::pi(it->first, it->second, body));
        t->pos = p;
        body = t;
      }
      return body;
    }
    TypePtr lhs = typeApplication();
    if (accept(TokenKind::Arrow)) return types::fun(lhs, type());
    return lhs;
  }

  static TypePtr positioned(TypePtr t, SourcePos p) {
    auto copy = std::make_shared<Type>(*t);
    copy->pos = p;
    return copy;
  }

  TypePtr typeApplication() {
    const Token& t = peek();
    if (t.kind == TokenKind::Ident) {
      if (t.text == "Tensor") {
        advance();
        TypePtr elem = typeAtom();
        expect(TokenKind::LBracket);
        std::vector<TypePtr> dims{type()};
        while (accept(TokenKind::Comma)) dims.push_back(type());
        expect(TokenKind::RBracket);
        TypePtr result = elem;
        for (auto it = dims.rbegin(); it != dims.rend(); ++it) result = types::tensor(result, *it);
        return positioned(result, t.pos);
      }
      if (t.text == "Vector") {
        advance();
        TypePtr elem = typeAtom();
        TypePtr dim = typeAtom();
        return positioned(types::tensor(elem, dim), t.pos);
      }
      if (t.text == "Index") {
        advance();
        return positioned(types::index(typeAtom()), t.pos);
      }
      if (!isBuiltinTypeName(t.text)) {
        advance();
        std::vector<TypePtr> args;
        while (startsTypeAtom()) args.push_back(typeAtom());
        return positioned(types::named(t.text, std::move(args)), t.pos);
      }
    }
    return typeAtom();
  }

  static bool isBuiltinTypeName(const std::string& s) {
    return s == "Rat" || s == "Bool" || s == "Nat" || s == "Tensor" || s == "Vector" || s == "Index";
  }

  bool startsTypeAtom() const {
    return at(TokenKind::Ident) || at(TokenKind::Nat) || at(TokenKind::LParen);
  }

  TypePtr typeAtom() {
    const Token& t = peek();
    switch (t.kind) {
    case TokenKind::Nat:
      advance();
      return positioned(types::natLit(std::stoull(t.text)), t.pos);
    case TokenKind::LParen: {
      advance();
      TypePtr inner = type();
      expect(TokenKind::RParen);
      return inner;
    }
    case TokenKind::Ident:
      advance();
      if (t.text == "Rat") return positioned(types::rat(), t.pos);
      if (t.text == "Bool") return positioned(types::boolean(), t.pos);
      if (t.text == "Nat") return positioned(types::nat(), t.pos);
      if (t.text == "Tensor" || t.text == "Vector" || t.text == "Index") {
        throw ParseError("unexpected-token", "'" + t.text + "' must be applied; wrap it in parentheses", t.pos);
      }
      return positioned(types::named(t.text), t.pos);
    default:
      failNamed({"type"});
    }
  }

  // ---- expressions -------------------------------------------------------

  ExprPtr expression() {
    if (startsBinderForm()) return binderForm();
    return implication();
  }

  bool startsBinderForm() const {
    switch (peek().kind) {
    case TokenKind::KwForall:
    case TokenKind::KwExists:
    case TokenKind::KwForeach:
    case TokenKind::Backslash:
    case TokenKind::KwLet:
    case TokenKind::KwIf:
      return true;
    default:
      return false;
    }
  }

  struct Binder {
    std::string name;
    TypePtr annotation;
    SourcePos pos;
  };

  std::vector<Binder> binders() {
    std::vector<Binder> out;
    do {
      if (at(TokenKind::LParen)) {
        SourcePos p = advance().pos;
        std::string name = expect(TokenKind::Ident).text;
        expect(TokenKind::Colon);
        TypePtr t = type();
        expect(TokenKind::RParen);
        out.push_back({name, t, p});
      } else {
        const Token& id = expect(TokenKind::Ident);
        Binder b{id.text, nullptr, id.pos};
        if (accept(TokenKind::Colon)) b.annotation = type();
        out.push_back(b);
        if (b.annotation) break;
      }
    } while (at(TokenKind::Ident) || at(TokenKind::LParen));
    return out;
  }

  ExprPtr binderForm() {
    const Token& kw = advance();
    switch (kw.kind) {
    case TokenKind::KwForall:
    case TokenKind::KwExists:
    case TokenKind::KwForeach: {
      ExprNode node = kw.kind == TokenKind::KwForall   ? ExprNode::Forall
                      : kw.kind == TokenKind::KwExists ? ExprNode::Exists
                                                       : ExprNode::Foreach;
      auto bs = binders();
      expect(TokenKind::Dot);
      ExprPtr body = expression();
      for (auto it = bs.rbegin(); it != bs.rend(); ++it) {
        body = expr::binder(node, it->name, it->annotation, body, it == bs.rend() - 1 ? kw.pos : it->pos);
      }
      return body;
    }
    case TokenKind::Backslash: {
      auto bs = binders();
      expect(TokenKind::Arrow);
      ExprPtr body = expression();
      for (auto it = bs.rbegin(); it != bs.rend(); ++it) {
        body = expr::binder(ExprNode::Lambda, it->name, it->annotation, body, it == bs.rend() - 1 ? kw.pos : it->pos);
      }
      return body;
    }
    case TokenKind::KwLet: {
      std::string name = expect(TokenKind::Ident).text;
      expect(TokenKind::Assign);
      ExprPtr bound = expression();
      expect(TokenKind::KwIn);
      ExprPtr body = expression();
      return expr::let(name, bound, body, kw.pos);
    }
    case TokenKind::KwIf: {
      ExprPtr c = expression();
      expect(TokenKind::KwThen);
      ExprPtr a = expression();
      expect(TokenKind::KwElse);
      ExprPtr b = expression();
      return expr::ite(c, a, b, kw.pos);
    }
    default:
      failNamed({"expression"});
    }
  }

  ExprPtr implication() {
    ExprPtr lhs = disjunction();
    if (at(TokenKind::Implies)) {
      SourcePos p = advance().pos;
      ExprPtr rhs = startsBinderForm() ? binderForm() : implication();
      return expr::binary(ExprNode::Implies, lhs, rhs, p);
    }
    return lhs;
  }

  ExprPtr disjunction() {
    ExprPtr lhs = conjunction();
    while (at(TokenKind::KwOr)) {
      SourcePos p = advance().pos;
      lhs = expr::binary(ExprNode::Or, lhs, conjunction(), p);
    }
    return lhs;
  }

  ExprPtr conjunction() {
    ExprPtr lhs = negation();
    while (at(TokenKind::KwAnd)) {
      SourcePos p = advance().pos;
      lhs = expr::binary(ExprNode::And, lhs, negation(), p);
    }
    return lhs;
  }

  ExprPtr negation() {
    if (at(TokenKind::KwNot)) {
      SourcePos p = advance().pos;
      return expr::unary(ExprNode::Not, negation(), p);
    }
    return comparison();
  }

  static std::optional<ExprNode> comparisonOp(TokenKind k) {
    switch (k) {
    case TokenKind::EqEq: return ExprNode::Eq;
    case TokenKind::NotEq: return ExprNode::Neq;
    case TokenKind::Leq: return ExprNode::Leq;
    case TokenKind::Lt: return ExprNode::Lt;
    case TokenKind::Geq: return ExprNode::Geq;
    case TokenKind::Gt: return ExprNode::Gt;
    default: return std::nullopt;
    }
  }

  ExprPtr comparison() {
    std::vector<ExprPtr> operands{additive()};
    std::vector<std::pair<ExprNode, SourcePos>> ops;
    while (auto op = comparisonOp(peek().kind)) {
      ops.emplace_back(*op, advance().pos);
      operands.push_back(additive());
    }
    if (ops.empty()) return operands.front();
    ExprPtr result = expr::binary(ops[0].first, operands[0], operands[1], ops[0].second);
    for (std::size_t i = 1; i < ops.size(); ++i) {
      ExprPtr atom = expr::binary(ops[i].first, operands[i], operands[i + 1], ops[i].second);
      auto chain = std::make_shared<Expr>(*expr::binary(ExprNode::And, result, atom, ops[i].second));
      chain->chained = true;
      result = chain;
    }
    return result;
  }

  ExprPtr additive() {
    ExprPtr lhs = multiplicative();
    while (at(TokenKind::Plus) || at(TokenKind::Minus)) {
      const Token& op = advance();
      ExprNode node = op.kind == TokenKind::Plus ? ExprNode::Add : ExprNode::Sub;
      lhs = expr::binary(node, lhs, multiplicative(), op.pos);
    }
    return lhs;
  }

  ExprPtr multiplicative() {
    ExprPtr lhs = unaryMinus();
    while (at(TokenKind::Star) || at(TokenKind::Slash)) {
      const Token& op = advance();
      ExprNode node = op.kind == TokenKind::Star ? ExprNode::Mul : ExprNode::Div;
      lhs = expr::binary(node, lhs, unaryMinus(), op.pos);
    }
    return lhs;
  }

  ExprPtr unaryMinus() {
    if (at(TokenKind::Minus)) {
      SourcePos p = advance().pos;
      return expr::unary(ExprNode::Neg, unaryMinus(), p);
    }
    return indexing();
  }

  ExprPtr indexing() {
    ExprPtr lhs = application();
    while (at(TokenKind::Bang)) {
      SourcePos p = advance().pos;
      lhs = expr::index(lhs, application(), p);
    }
    return lhs;
  }

  bool startsAtom() const {
    switch (peek().kind) {
    case TokenKind::Ident:
    case TokenKind::Nat:
    case TokenKind::Rat:
    case TokenKind::KwTrue:
    case TokenKind::KwFalse:
    case TokenKind::LParen:
    case TokenKind::LBracket:
      return true;
    default:
      return false;
    }
  }

  ExprPtr application() {
    if (at(TokenKind::KwFold)) {
      SourcePos p = advance().pos;
      ExprPtr f = atom();
      ExprPtr z = atom();
      ExprPtr v = atom();
      return expr::fold(f, z, v, p);
    }
    ExprPtr head = atom();
    while (startsAtom() || startsBinderForm()) {
      ExprPtr arg = startsBinderForm() ? binderForm() : atom();
      head = expr::app(head, arg, arg->pos);
    }
    return head;
  }

  static std::optional<ExprNode> sectionOp(TokenKind k) {
    switch (k) {
    case TokenKind::Plus: return ExprNode::Add;
    case TokenKind::Minus: return ExprNode::Sub;
    case TokenKind::Star: return ExprNode::Mul;
    case TokenKind::Slash: return ExprNode::Div;
    case TokenKind::KwAnd: return ExprNode::And;
    case TokenKind::KwOr: return ExprNode::Or;
    case TokenKind::Implies: return ExprNode::Implies;
    default: return comparisonOp(k);
    }
  }

  ExprPtr atom() {
    const Token& t = peek();
    switch (t.kind) {
    case TokenKind::Ident:
      advance();
      return expr::var(t.text, t.pos);
    case TokenKind::Nat:
      advance();
      try {
        return expr::nat(std::stoull(t.text), t.pos);
      } catch (const std::out_of_range&) {
        throw ParseError("malformed-numeral", "natural literal out of range", t.pos);
      }
    case TokenKind::Rat:
      advance();
      return expr::rat(parseRational(t.text), t.pos);
    case TokenKind::KwTrue:
    case TokenKind::KwFalse:
      advance();
      return expr::boolean(t.kind == TokenKind::KwTrue, t.pos);
    case TokenKind::LParen: {
      advance();
      if (auto op = sectionOp(peek().kind); op && peek(1).kind == TokenKind::RParen) {
        advance();
        advance();
        ExprPtr body = expr::binary(*op, expr::var("_lhs", t.pos), expr::var("_rhs", t.pos), t.pos);
        return expr::binder(ExprNode::Lambda, "_lhs", nullptr,
                            expr::binder(ExprNode::Lambda, "_rhs", nullptr, body, t.pos), t.pos);
      }
      ExprPtr inner = expression();
      expect(TokenKind::RParen);
      return inner;
    }
    case TokenKind::LBracket: {
      advance();
      std::vector<ExprPtr> elems;
      if (!at(TokenKind::RBracket)) {
        elems.push_back(expression());
        while (accept(TokenKind::Comma)) elems.push_back(expression());
      }
      expect(TokenKind::RBracket);
      return expr::vec(std::move(elems), t.pos);
    }
    default:
      if (startsBinderForm()) return binderForm();
      failNamed({"expression"});
    }
  }

  const std::vector<Token>& toks_;
  std::size_t pos_ = 0;
};

} // namespace

Program parse(const std::vector<Token>& tokens) { return Parser(tokens).program(); }

Program parseSource(std::string_view source) {
  auto tokens = tokenize(source);
  return parse(tokens);
}

ExprPtr parseExpression(std::string_view source) {
  auto tokens = tokenize(source);
  return Parser(tokens).standaloneExpression();
}

TypePtr parseType(std::string_view source) {
  auto tokens = tokenize(source);
  return Parser(tokens).standaloneType();
}

} // namespace specbridge
