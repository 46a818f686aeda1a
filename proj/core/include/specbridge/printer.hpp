// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "specbridge/ast.hpp"

#include <nlohmann/json.hpp>

#include <map>
#include <string>

namespace specbridge {

/// Spelling overrides for keywords and operators. Keys are the surface
/// spellings ("forall", "=>", "<=", "Rat", ...) plus two contextual entries:
/// "binder." for the dot after quantifier binders and "lambda->" for the
/// arrow after lambda binders. Unlisted keys print as themselves.
struct PrintStyle {
  std::map<std::string, std::string> symbols;

  std::string sym(const std::string& key) const;
};

std::string print(const ExprPtr& e, const PrintStyle& style = {});
std::string print(const TypePtr& t, const PrintStyle& style = {});
std::string print(const Decl& d, const PrintStyle& style = {});
std::string print(const Program& p, const PrintStyle& style = {});

/// Canonical JSON rendering used by `parse --dump-ast`.
nlohmann::json toJson(const ExprPtr& e);
nlohmann::json toJson(const TypePtr& t);
nlohmann::json toJson(const Program& p);

} // namespace specbridge
