// SPDX-License-Identifier: Apache-2.0
#include "specbridge/lexer.hpp"

#include <cctype>
#include <unordered_map>

namespace specbridge {

std::string tokenKindName(TokenKind kind) {
  switch (kind) {
  case TokenKind::DeclStart: return "decl-start";
  case TokenKind::LineStart: return "line-start";
  case TokenKind::Ident: return "ident";
  case TokenKind::Nat: return "nat";
  case TokenKind::Rat: return "rat";
  case TokenKind::Annotation: return "annotation";
  case TokenKind::KwType: return "kw-type";
  case TokenKind::KwForall: return "kw-forall";
  case TokenKind::KwExists: return "kw-exists";
  case TokenKind::KwForeach: return "kw-foreach";
  case TokenKind::KwLet: return "kw-let";
  case TokenKind::KwIn: return "kw-in";
  case TokenKind::KwIf: return "kw-if";
  case TokenKind::KwThen: return "kw-then";
  case TokenKind::KwElse: return "kw-else";
  case TokenKind::KwAnd: return "kw-and";
  case TokenKind::KwOr: return "kw-or";
  case TokenKind::KwNot: return "kw-not";
  case TokenKind::KwTrue: return "kw-true";
  case TokenKind::KwFalse: return "kw-false";
  case TokenKind::KwFold: return "kw-fold";
  case TokenKind::Dot: return "dot";
  case TokenKind::Colon: return "colon";
  case TokenKind::Comma: return "comma";
  case TokenKind::LParen: return "lparen";
  case TokenKind::RParen: return "rparen";
  case TokenKind::LBracket: return "lbracket";
  case TokenKind::RBracket: return "rbracket";
  case TokenKind::Backslash: return "backslash";
  case TokenKind::Arrow: return "arrow";
  case TokenKind::Implies: return "op=>";
  case TokenKind::Assign: return "assign";
  case TokenKind::EqEq: return "op==";
  case TokenKind::NotEq: return "op!=";
  case TokenKind::Leq: return "op<=";
  case TokenKind::Lt: return "op<";
  case TokenKind::Geq: return "op>=";
  case TokenKind::Gt: return "op>";
  case TokenKind::Plus: return "op+";
  case TokenKind::Minus: return "op-";
  case TokenKind::Star: return "op*";
  case TokenKind::Slash: return "op/";
  case TokenKind::Bang: return "op!";
  case TokenKind::End: return "end";
  }
  return "?";
}

namespace {

const std::unordered_map<std::string_view, TokenKind>& keywords() {
  static const std::unordered_map<std::string_view, TokenKind> table{
      {"type", TokenKind::KwType},     {"forall", TokenKind::KwForall}, {"exists", TokenKind::KwExists},
      {"foreach", TokenKind::KwForeach}, {"let", TokenKind::KwLet},     {"in", TokenKind::KwIn},
      {"if", TokenKind::KwIf},         {"then", TokenKind::KwThen},     {"else", TokenKind::KwElse},
      {"and", TokenKind::KwAnd},       {"or", TokenKind::KwOr},         {"not", TokenKind::KwNot},
      {"true", TokenKind::KwTrue},     {"false", TokenKind::KwFalse},   {"fold", TokenKind::KwFold},
  };
  return table;
}

bool isIdentStart(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }

bool isIdentChar(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '\''; }

bool isDigit(char c) { return c >= '0' && c <= '9'; }

struct RawToken {
  Token token;
  bool startsLine = false; // first token of a line beginning in column 1
  bool firstOnLine = false;
};

class Scanner {
public:
  explicit Scanner(std::string_view src) : src_(src) {}

  std::vector<RawToken> run() {
    std::vector<RawToken> out;
    bool lineHasToken = false;
    while (true) {
      skipTrivia(lineHasToken);
      if (at_ >= src_.size()) break;
      RawToken raw;
      raw.firstOnLine = !lineHasToken;
      raw.startsLine = !lineHasToken && column_ == 1;
      raw.token = next();
      lineHasToken = true;
      out.push_back(std::move(raw));
    }
    return out;
  }

private:
  SourcePos pos() const { return {line_, column_}; }

  char peek(std::size_t ahead = 0) const { return at_ + ahead < src_.size() ? src_[at_ + ahead] : '\0'; }

  void advance() {
    if (src_[at_] == '\n') {
      ++line_;
      column_ = 1;
    } else {
      ++column_;
    }
    ++at_;
  }

  void skipTrivia(bool& lineHasToken) {
    while (at_ < src_.size()) {
      char c = peek();
      if (c == '\n') {
        lineHasToken = false;
        advance();
      } else if (c == ' ' || c == '\t' || c == '\r') {
        advance();
      } else if (c == '-' && peek(1) == '-') {
        while (at_ < src_.size() && peek() != '\n') advance();
      } else if (c == '{' && peek(1) == '-') {
        SourcePos start = pos();
        advance();
        advance();
        while (!(peek() == '-' && peek(1) == '}')) {
          if (at_ >= src_.size()) throw LexError("unterminated-comment", "unterminated block comment", start);
          advance();
        }
        advance();
        advance();
      } else {
        return;
      }
    }
  }

  Token make(TokenKind kind, SourcePos start, std::size_t from) const {
    return Token{kind, std::string(src_.substr(from, at_ - from)), start};
  }

  Token number(SourcePos start) {
    std::size_t from = at_;
    while (isDigit(peek())) advance();
    bool rational = false;
    if (peek() == '.') {
      if (!isDigit(peek(1))) throw LexError("malformed-numeral", "digits expected after decimal point", start);
      rational = true;
      advance();
      while (isDigit(peek())) advance();
    }
    if (peek() == 'e' || peek() == 'E') {
      std::size_t digitAt = (peek(1) == '+' || peek(1) == '-') ? 2 : 1;
      if (!isDigit(peek(digitAt))) throw LexError("malformed-numeral", "digits expected in exponent", start);
      rational = true;
      advance();
      if (digitAt == 2) advance();
      while (isDigit(peek())) advance();
    }
    if (isIdentChar(peek()) || (peek() == '.' && isDigit(peek(1)))) {
      throw LexError("malformed-numeral", "malformed numeral '" + std::string(src_.substr(from, at_ - from + 1)) + "'",
                     start);
    }
    return make(rational ? TokenKind::Rat : TokenKind::Nat, start, from);
  }

  Token next() {
    SourcePos start = pos();
    std::size_t from = at_;
    char c = peek();

    if (isDigit(c)) return number(start);

    if (isIdentStart(c)) {
      while (isIdentChar(peek())) advance();
      std::string_view word = src_.substr(from, at_ - from);
      auto kw = keywords().find(word);
      return make(kw == keywords().end() ? TokenKind::Ident : kw->second, start, from);
    }

    if (c == '@') {
      advance();
      if (!isIdentStart(peek())) throw LexError("illegal-character", "annotation name expected after '@'", start);
      while (isIdentChar(peek())) advance();
      std::string_view word = src_.substr(from + 1, at_ - from - 1);
      if (word != "network" && word != "dataset" && word != "parameter" && word != "property") {
        throw LexError("unknown-annotation", "unknown annotation '@" + std::string(word) + "'", start);
      }
      return make(TokenKind::Annotation, start, from);
    }

    auto two = [&](char second, TokenKind kind) -> bool {
      if (peek(1) != second) return false;
      advance();
      advance();
      return (void)kind, true;
    };

    switch (c) {
    case '-':
      if (two('>', TokenKind::Arrow)) return make(TokenKind::Arrow, start, from);
      advance();
      return make(TokenKind::Minus, start, from);
    case '=':
      if (two('>', TokenKind::Implies)) return make(TokenKind::Implies, start, from);
      if (two('=', TokenKind::EqEq)) return make(TokenKind::EqEq, start, from);
      advance();
      return make(TokenKind::Assign, start, from);
    case '!':
      if (two('=', TokenKind::NotEq)) return make(TokenKind::NotEq, start, from);
      advance();
      return make(TokenKind::Bang, start, from);
    case '<':
      if (two('=', TokenKind::Leq)) return make(TokenKind::Leq, start, from);
      advance();
      return make(TokenKind::Lt, start, from);
    case '>':
      if (two('=', TokenKind::Geq)) return make(TokenKind::Geq, start, from);
      advance();
      return make(TokenKind::Gt, start, from);
    default:
      break;
    }

    TokenKind single;
    switch (c) {
    case '.': single = TokenKind::Dot; break;
    case ':': single = TokenKind::Colon; break;
    case ',': single = TokenKind::Comma; break;
    case '(': single = TokenKind::LParen; break;
    case ')': single = TokenKind::RParen; break;
    case '[': single = TokenKind::LBracket; break;
    case ']': single = TokenKind::RBracket; break;
    case '\\': single = TokenKind::Backslash; break;
    case '+': single = TokenKind::Plus; break;
    case '*': single = TokenKind::Star; break;
    case '/': single = TokenKind::Slash; break;
    default: {
      std::string shown = (static_cast<unsigned char>(c) < 0x20 || static_cast<unsigned char>(c) >= 0x7f)
                              ? "byte 0x" + hex(static_cast<unsigned char>(c))
                              : "'" + std::string(1, c) + "'";
      throw LexError("illegal-character", "illegal character " + shown, start);
    }
    }
    advance();
    return make(single, start, from);
  }

  static std::string hex(unsigned char c) {
    const char* digits = "0123456789abcdef";
    return {digits[c >> 4], digits[c & 0xf]};
  }

  std::string_view src_;
  std::size_t at_ = 0;
  int line_ = 1;
  int column_ = 1;
};

} // namespace

std::vector<Token> tokenize(std::string_view source) {
  std::vector<RawToken> raw = Scanner(source).run();
  std::vector<Token> out;
  out.reserve(raw.size() + 16);

  bool previousLineAnnotationOnly = false;
  std::string previousSignature; // name declared by the previous column-1 `name :` line

  for (std::size_t i = 0; i < raw.size(); ++i) {
    const RawToken& r = raw[i];
    if (r.startsLine) {
      const Token& t = r.token;
      bool declaresSomething =
          t.kind == TokenKind::Ident || t.kind == TokenKind::KwType || t.kind == TokenKind::Annotation;
      bool nextIsColon = i + 1 < raw.size() && raw[i + 1].token.kind == TokenKind::Colon;
      bool continues = !declaresSomething || previousLineAnnotationOnly ||
                       (t.kind == TokenKind::Ident && !nextIsColon && t.text == previousSignature);
      if (declaresSomething) out.push_back(Token{continues ? TokenKind::LineStart : TokenKind::DeclStart, "", t.pos});

      bool lineEndsHere = i + 1 >= raw.size() || raw[i + 1].firstOnLine;
      previousLineAnnotationOnly = t.kind == TokenKind::Annotation && lineEndsHere;
      previousSignature = (t.kind == TokenKind::Ident && nextIsColon) ? t.text : std::string();
    }
    out.push_back(r.token);
  }

  SourcePos endPos = raw.empty() ? SourcePos{1, 1} : raw.back().token.pos;
  out.push_back(Token{TokenKind::End, "", endPos});
  return out;
}

} // namespace specbridge
