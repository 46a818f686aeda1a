// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "specbridge/diagnostics.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace specbridge {

enum class TokenKind {
  DeclStart, // a new top-level declaration begins here
  LineStart, // a column-1 line that continues the current declaration
  Ident,
  Nat,
  Rat,
  Annotation, // @network, @dataset, @parameter, @property
  KwType,
  KwForall,
  KwExists,
  KwForeach,
  KwLet,
  KwIn,
  KwIf,
  KwThen,
  KwElse,
  KwAnd,
  KwOr,
  KwNot,
  KwTrue,
  KwFalse,
  KwFold,
  Dot,
  Colon,
  Comma,
  LParen,
  RParen,
  LBracket,
  RBracket,
  Backslash,
  Arrow,   // ->
  Implies, // =>
  Assign,  // =
  EqEq,
  NotEq,
  Leq,
  Lt,
  Geq,
  Gt,
  Plus,
  Minus,
  Star,
  Slash,
  Bang,
  End,
};

struct Token {
  TokenKind kind = TokenKind::End;
  std::string text;
  SourcePos pos;
};

/// Short class name used in diagnostics and tests: "kw-forall", "ident", "op>=", ...
std::string tokenKindName(TokenKind kind);

/// Splits source text into tokens. Column-1 lines are resolved into
/// DeclStart/LineStart markers: an annotation line and a signature line join
/// the declaration that follows them; everything indented is a continuation.
/// The returned stream always ends with an End token.
std::vector<Token> tokenize(std::string_view source);

} // namespace specbridge
