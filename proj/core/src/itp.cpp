// SPDX-License-Identifier: Apache-2.0
#include "specbridge/itp.hpp"

#include "specbridge/cache.hpp"
#include "specbridge/diagnostics.hpp"
#include "specbridge/parser.hpp"
#include "specbridge/resolve.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace fs = std::filesystem;

namespace specbridge {

namespace {

// Keys whose spelling may coincide with "->": they are recovered from
// context (the token after a binder) rather than from the inverse table.
const std::set<std::string> kContextual{"binder.", "lambda->"};

bool isQuantifierKey(const std::string& key) { return key == "forall" || key == "exists" || key == "foreach"; }

std::string markerFor(DeclKind k) {
  switch (k) {
  case DeclKind::TypeSynonym:
    return "@type";
  case DeclKind::Def:
    return "@def";
  case DeclKind::Network:
    return "@network";
  case DeclKind::Dataset:
    return "@dataset";
  case DeclKind::Parameter:
    return "@parameter";
  case DeclKind::Property:
    return "@property";
  }
  return "@def";
}

void validate(const ItpStyle& s) {
  std::map<std::string, std::string> seen;
  for (const auto& [key, spelling] : s.print.symbols) {
    if (spelling.empty() || spelling.find_first_of(" \t\n()[],") != std::string::npos) {
      throw Error("invalid-style", "spelling of '" + key + "' must be a single non-empty token");
    }
    if (kContextual.count(key)) continue;
    auto [it, fresh] = seen.emplace(spelling, key);
    if (!fresh) throw Error("invalid-style", "'" + it->second + "' and '" + key + "' both render as '" + spelling + "'");
  }
}

void collectType(const TypePtr& t, std::set<std::string>& names) {
  if (!t) return;
  if (t->node == TypeNode::Named) names.insert(t->name);
  for (const auto& a : t->args) collectType(a, names);
}

void collectExpr(const ExprPtr& e, std::set<std::string>& names) {
  if (!e) return;
  if (e->node == ExprNode::Var && e->scope != VarScope::Bound) names.insert(e->name);
  collectType(e->binderType, names);
  for (const auto& c : e->children) collectExpr(c, names);
}

std::string moduleNameFor(const std::string& property) {
  std::string out;
  bool upper = true;
  for (char c : property) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      out.push_back(upper ? static_cast<char>(std::toupper(static_cast<unsigned char>(c))) : c);
      upper = false;
    } else {
      upper = true;
    }
  }
  return out.empty() ? "Property" : out;
}

std::vector<std::string> tokens(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) out.push_back(cur);
    cur.clear();
  };
  for (char c : line) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      flush();
    } else if (std::string("()[],").find(c) != std::string::npos) {
      flush();
      out.emplace_back(1, c);
    } else {
      cur.push_back(c);
    }
  }
  flush();
  return out;
}

// Maps target spellings back to surface spellings, one line at a time.
class Unrenderer {
public:
  explicit Unrenderer(const ItpStyle& s) : style_(s) {
    for (const auto& [key, spelling] : s.print.symbols) {
      if (!kContextual.count(key)) inverse_[spelling] = key;
    }
    for (const char* key : {"lambda", "binder.", "lambda->"}) {
      if (!s.print.symbols.count(key)) inverse_.emplace(s.print.sym(key), key);
    }
  }

  std::string line(const std::string& text) const {
    std::vector<std::string> ts;
    // The printer glues the lambda keyword to its binder.
    const std::string lam = style_.print.sym("lambda");
    for (auto& t : tokens(text)) {
      if (t.size() > lam.size() && t.rfind(lam, 0) == 0) {
        ts.push_back(lam);
        ts.push_back(t.substr(lam.size()));
      } else {
        ts.push_back(t);
      }
    }
    std::string out;
    // After a quantifier or lambda keyword: the binder (a name or a
    // parenthesised group) and then the arrow that closes it.
    std::string pending;
    int depth = 0;
    bool binderDone = false;
    for (const auto& t : ts) {
      std::string surface;
      if (!pending.empty() && binderDone) {
        std::string arrowKey = pending == "lambda" ? "lambda->" : "binder.";
        if (t == style_.print.sym(arrowKey)) {
          surface = pending == "lambda" ? "->" : ".";
          pending.clear();
        }
      }
      if (surface.empty()) {
        auto it = inverse_.find(t);
        surface = it == inverse_.end() ? t : it->second;
        if (surface == "binder.") surface = ".";
        if (surface == "lambda->") surface = "->";
        if (surface == "lambda") surface = "\\";
        if (!pending.empty() && !binderDone) {
          if (t == "(") ++depth;
          if (t == ")") --depth;
          binderDone = depth == 0;
        } else if (isQuantifierKey(surface) || surface == "\\") {
          pending = surface == "\\" ? "lambda" : surface;
          binderDone = false;
          depth = 0;
        }
      }
      if (!out.empty()) out += " ";
      out += surface;
    }
    return out;
  }

private:
  const ItpStyle& style_;
  std::map<std::string, std::string> inverse_;
};

std::string indentLines(const std::string& text, const std::string& indent) {
  std::istringstream in(text);
  std::string line, out;
  while (std::getline(in, line)) out += indent + line + "\n";
  return out;
}

} // namespace

ItpStyle defaultItpStyle() {
  ItpStyle s;
  s.print.symbols = {
      {"forall", "∀"}, {"exists", "∃"}, {"binder.", "→"}, {"->", "→"}, {"lambda", "λ"}, {"lambda->", "→"},
      {"=>", "⇒"},     {"and", "∧"},    {"or", "∨"},      {"not", "¬"}, {"<=", "≤"},     {">=", "≥"},
      {"==", "≡"},     {"!=", "≢"},     {"Rat", "ℚ"},     {"Bool", "Set"}, {"Nat", "ℕ"},  {"true", "⊤"},
      {"false", "⊥"},
  };
  s.imports = {
      "open import Data.Rational using (ℚ; _+_; _-_; _*_; _÷_; _≤_; _<_)",
      "open import Data.Product using (_×_; ∃)",
      "open import Data.Sum using (_⊎_)",
      "open import Relation.Nullary using (¬_)",
      "open import Vehicle.Data.Tensor using (Tensor; _!_)",
  };
  return s;
}

ItpStyle itpStyleFromJson(const nlohmann::json& j) {
  ItpStyle s = defaultItpStyle();
  try {
    if (j.contains("name")) s.name = j.at("name").get<std::string>();
    if (j.contains("comment")) s.comment = j.at("comment").get<std::string>();
    if (j.contains("sort")) s.sort = j.at("sort").get<std::string>();
    if (j.contains("pragma")) s.pragma = j.at("pragma").get<std::string>();
    if (j.contains("imports")) s.imports = j.at("imports").get<std::vector<std::string>>();
    if (j.contains("symbols")) {
      for (const auto& [key, value] : j.at("symbols").items()) s.print.symbols[key] = value.get<std::string>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error("invalid-style", e.what());
  }
  if (s.comment.empty()) throw Error("invalid-style", "comment leader must be non-empty");
  validate(s);
  return s;
}

nlohmann::json toJson(const ItpStyle& s) {
  nlohmann::json j{{"name", s.name}, {"comment", s.comment}, {"sort", s.sort}, {"pragma", s.pragma},
                   {"imports", s.imports}};
  j["symbols"] = nlohmann::json::object();
  for (const auto& [key, value] : s.print.symbols) j["symbols"][key] = value;
  return j;
}

std::vector<std::string> exportedDeclarations(const Program& source, const std::string& property) {
  Program p = resolveNames(source);
  const Decl* root = p.find(property);
  if (!root || root->kind != DeclKind::Property) {
    throw Error("unknown-property", "'" + property + "' is not a @property declaration");
  }
  std::set<std::string> keep{property};
  std::vector<std::string> work{property};
  while (!work.empty()) {
    const Decl* d = p.find(work.back());
    work.pop_back();
    if (!d) continue;
    std::set<std::string> refs;
    collectType(d->signature, refs);
    collectType(d->synonymBody, refs);
    collectExpr(d->body, refs);
    for (const auto& r : refs) {
      if (p.find(r) && keep.insert(r).second) work.push_back(r);
    }
  }
  std::vector<std::string> out;
  for (const auto& d : p.decls) {
    if (keep.count(d.name) && d.name != property) out.push_back(d.name);
  }
  out.push_back(property);
  return out;
}

std::string exportInterface(const Program& source, const std::string& property, const fs::path& cacheDir,
                            const ExportOptions& options) {
  const ItpStyle& style = options.style;
  validate(style);
  std::vector<std::string> names = exportedDeclarations(source, property);

  CacheManifest manifest = readManifest(cacheDir);
  if (manifest.property != property) {
    throw Error("cache-mismatch", "cache holds property '" + manifest.property + "', not '" + property + "'");
  }
  PropertyStatus status = readStatus(cacheDir);
  bool verified = status.kind == PropertyStatus::Kind::Verified;
  if (!verified && !options.allowUnverified) {
    std::string why = statusName(status.kind) + (status.reason.empty() ? "" : " (" + status.reason + ")");
    throw Error("unverified-property", "refusing to export '" + property + "': cache status is " + why);
  }
  fs::path dir = fs::weakly_canonical(fs::absolute(cacheDir));
  std::string hash = sha256File(cacheDir / "manifest.json");
  const std::string& c = style.comment;

  std::ostringstream out;
  out << c << " Generated by specbridge export; do not edit.\n";
  out << c << " property: " << property << "\n";
  out << c << " status: " << (verified ? "verified" : "UNCHECKED (" + statusName(status.kind) + ")") << "\n";
  out << c << " cache-dir: " << dir.generic_string() << "\n";
  out << c << " manifest-sha256: " << hash << "\n";
  out << c << " integrity-hook: specbridge check-cache --cache-dir " << dir.generic_string() << "\n";
  out << style.pragma << "\n\n";
  out << "module " << (options.moduleName.empty() ? moduleNameFor(property) : options.moduleName) << " where\n\n";
  for (const auto& imp : style.imports) out << imp << "\n";

  for (const auto& name : names) {
    const Decl& d = *source.find(name);
    out << "\n" << c << " " << markerFor(d.kind) << "\n";
    switch (d.kind) {
    case DeclKind::TypeSynonym: {
      std::string text = print(d, style.print);
      // "type N ps = T" becomes "N : sort" / "N ps = T".
      std::string head = style.print.sym("type") + " ";
      if (text.rfind(head, 0) == 0) text = text.substr(head.size());
      if (d.typeParams.empty()) out << d.name << " : " << style.sort << "\n";
      out << text << "\n";
      break;
    }
    case DeclKind::Network:
    case DeclKind::Dataset:
    case DeclKind::Parameter:
      out << "postulate\n  " << d.name << " : " << print(d.signature, style.print) << "\n";
      break;
    case DeclKind::Def:
      out << print(d, style.print) << "\n";
      break;
    case DeclKind::Property:
      if (!verified) {
        out << c << " WARNING: unchecked postulate; the cache does not establish this property.\n";
      }
      out << "postulate\n" << indentLines(d.name + " : " + print(d.body, style.print), "  ");
      break;
    }
  }
  return out.str();
}

Program parseExported(const std::string& text, const ItpStyle& style) {
  Unrenderer un(style);
  const std::string lead = style.comment + " @";
  std::vector<std::pair<std::string, std::vector<std::string>>> blocks;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind(lead, 0) == 0) {
      blocks.push_back({line.substr(lead.size() - 1), {}});
      continue;
    }
    if (blocks.empty() || line.empty() || line.rfind(style.comment, 0) == 0) continue;
    std::string body = line;
    body.erase(0, body.find_first_not_of(' '));
    if (body == "postulate") continue;
    blocks.back().second.push_back(body);
  }

  std::ostringstream src;
  for (const auto& [marker, lines] : blocks) {
    if (lines.empty()) throw Error("malformed-export", "empty " + marker + " block");
    if (marker == "@type") {
      // Drop the "N : sort" line; the equation carries everything.
      const std::string& eq = lines.back();
      src << "type " << un.line(eq) << "\n\n";
    } else if (marker == "@network" || marker == "@dataset" || marker == "@parameter") {
      src << marker << "\n" << un.line(lines[0]) << "\n\n";
    } else if (marker == "@def") {
      for (const auto& l : lines) src << un.line(l) << "\n";
      src << "\n";
    } else if (marker == "@property") {
      std::string joined;
      for (const auto& l : lines) joined += (joined.empty() ? "" : " ") + l;
      auto colon = joined.find(" : ");
      if (colon == std::string::npos) throw Error("malformed-export", "property postulate has no signature");
      std::string name = joined.substr(0, colon);
      src << "@property\n" << name << " : Bool\n" << name << " = " << un.line(joined.substr(colon + 3)) << "\n\n";
    } else {
      throw Error("malformed-export", "unknown block marker " + marker);
    }
  }
  return parseSource(src.str());
}

} // namespace specbridge
