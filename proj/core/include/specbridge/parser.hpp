// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "specbridge/ast.hpp"
#include "specbridge/lexer.hpp"

#include <string_view>
#include <vector>

namespace specbridge {

/// Builds the surface AST from a token stream produced by tokenize().
///
/// Operator precedence, loosest first: binder forms (forall, exists,
/// foreach, lambda, let, if) extend as far right as possible; `=>` (right
/// associative); `or`; `and`; `not`; comparisons (chains such as
/// `a <= b <= c` become a conjunction of adjacent pairs); `+ -`; `* /`;
/// unary minus; `!`; application.
///
/// Throws ParseError carrying the expected-token set and the offending position.
Program parse(const std::vector<Token>& tokens);

/// tokenize + parse.
Program parseSource(std::string_view source);

/// Parses a single expression (no declarations), used by tests and the ITP round trip.
ExprPtr parseExpression(std::string_view source);

TypePtr parseType(std::string_view source);

} // namespace specbridge
