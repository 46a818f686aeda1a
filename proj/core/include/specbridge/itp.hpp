// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "specbridge/printer.hpp"
#include "specbridge/ast.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace specbridge {

/// Rendering table for a proof-assistant target. `print.symbols` maps
/// surface spellings to target spellings; `sort` is what a declared type
/// synonym is typed as.
struct ItpStyle {
  std::string name = "agda";
  PrintStyle print;
  std::string comment = "--";
  std::string sort = "Set";
  std::string pragma = "{-# OPTIONS --allow-exec #-}";
  std::vector<std::string> imports;
};

/// Agda spellings: ∀, ∃, →, ⇒, ∧, ∨, ¬, ≤, ≥, ℚ and friends.
ItpStyle defaultItpStyle();

/// Entries in `j` override the default table. Throws Error("invalid-style")
/// when two surface spellings would render identically (the table must be
/// invertible, except that binder arrows may share the function arrow).
ItpStyle itpStyleFromJson(const nlohmann::json& j);
nlohmann::json toJson(const ItpStyle& s);

struct ExportOptions {
  std::string moduleName; // derived from the property name when empty
  bool allowUnverified = false;
  ItpStyle style = defaultItpStyle();
};

/// Declarations the property depends on, transitively, in source order,
/// followed by the property itself.
std::vector<std::string> exportedDeclarations(const Program& source, const std::string& property);

/// Module text for `property` of the parsed (unelaborated) source, backed
/// by the cache at `cacheDir`. The caller typechecks first. Reads the
/// cache without modifying it. Throws Error("unverified-property") unless
/// the cache is intact and reports Verified, or `allowUnverified` is set,
/// in which case the postulate is marked unchecked.
std::string exportInterface(const Program& source, const std::string& property,
                            const std::filesystem::path& cacheDir, const ExportOptions& options = {});

/// Inverse of the rendering: recovers the exported declarations as source
/// program (header, pragma, module and import lines are skipped).
Program parseExported(const std::string& text, const ItpStyle& style = defaultItpStyle());

} // namespace specbridge
