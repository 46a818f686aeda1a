// SPDX-License-Identifier: Apache-2.0
#include "specbridge/cache.hpp"

#include "specbridge/diagnostics.hpp"
#include "specbridge/fsutil.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <memory>

namespace fs = std::filesystem;

namespace specbridge {

std::string sha256Hex(std::string_view bytes) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), md.data(), &len) != 1) {
    throw Error("internal-hash", "SHA-256 computation failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 15]);
  }
  return out;
}

std::string sha256File(const fs::path& path) { return sha256Hex(readFile(path)); }

std::string checkName(CacheCheck::Kind k) {
  switch (k) {
  case CacheCheck::Kind::Valid:
    return "valid";
  case CacheCheck::Kind::Stale:
    return "stale";
  case CacheCheck::Kind::Corrupt:
    return "corrupt";
  }
  return "?";
}

GroundValue groundValueFromJson(const nlohmann::json& j) {
  if (j.is_boolean()) return GroundValue::ofBool(j.get<bool>());
  if (j.is_string()) return GroundValue::ofRat(parseRational(j.get<std::string>()));
  if (j.is_number_integer()) return GroundValue::ofRat(Rational(j.get<long>()));
  if (j.is_array()) {
    std::vector<GroundValue> elems;
    for (const auto& e : j) elems.push_back(groundValueFromJson(e));
    return GroundValue::ofVec(std::move(elems));
  }
  throw Error("corrupt-cache", "unexpected value " + j.dump());
}

namespace {

[[noreturn]] void corrupt(const std::string& what) { throw Error("corrupt-cache", what); }

LeafResult::Kind resultKind(const std::string& s) {
  if (s == "sat") return LeafResult::Kind::Sat;
  if (s == "unsat") return LeafResult::Kind::Unsat;
  if (s == "unsolved") return LeafResult::Kind::Unsolved;
  corrupt("unknown leaf result '" + s + "'");
}

PropertyStatus::Kind statusKind(const std::string& s) {
  if (s == "Verified") return PropertyStatus::Kind::Verified;
  if (s == "Falsified") return PropertyStatus::Kind::Falsified;
  if (s == "Error") return PropertyStatus::Kind::Error;
  corrupt("unknown status '" + s + "'");
}

nlohmann::json resourceJson(const CacheResource& r) {
  return {{"name", r.name},
          {"role", r.role},
          {"path", r.path.generic_string()},
          {"relativePath", r.relativePath},
          {"sha256", r.sha256}};
}

CacheResource resourceFromJson(const nlohmann::json& j) {
  CacheResource r;
  r.name = j.at("name").get<std::string>();
  r.role = j.at("role").get<std::string>();
  r.path = j.at("path").get<std::string>();
  r.relativePath = j.at("relativePath").get<std::string>();
  r.sha256 = j.at("sha256").get<std::string>();
  return r;
}

nlohmann::json recordJson(const LeafRecord& r) {
  nlohmann::json j{{"query", r.query}, {"result", leafResultName(r.kind)}};
  if (r.kind == LeafResult::Kind::Sat) {
    j["embedding"] = nlohmann::json::object();
    for (const auto& [name, v] : r.embedding) j["embedding"][name] = toFractionString(v);
    j["witness"] = nlohmann::json::object();
    for (const auto& [name, v] : r.witness) j["witness"][name] = toJson(v);
  }
  return j;
}

LeafRecord recordFromJson(const nlohmann::json& j) {
  LeafRecord r;
  r.query = j.at("query").get<int>();
  r.kind = resultKind(j.at("result").get<std::string>());
  if (j.contains("embedding")) {
    for (const auto& [name, v] : j["embedding"].items()) r.embedding[name] = parseRational(v.get<std::string>());
  }
  if (j.contains("witness")) {
    for (const auto& [name, v] : j["witness"].items()) r.witness[name] = groundValueFromJson(v);
  }
  return r;
}

PropertyStatus statusFromJson(const nlohmann::json& j) {
  PropertyStatus s;
  s.kind = statusKind(j.at("status").get<std::string>());
  s.reason = j.value("reason", "");
  if (j.contains("witness")) {
    for (const auto& [name, v] : j["witness"].items()) s.witness[name] = groundValueFromJson(v);
  }
  if (j.contains("embedding")) {
    for (const auto& [name, v] : j["embedding"].items()) s.embedding[name] = parseRational(v.get<std::string>());
  }
  return s;
}

fs::path absoluteOf(const fs::path& p) { return fs::weakly_canonical(fs::absolute(p)); }

CacheResource hashed(const fs::path& dir, std::string name, std::string role, const fs::path& path) {
  CacheResource r;
  r.name = std::move(name);
  r.role = std::move(role);
  r.path = absoluteOf(path);
  r.relativePath = r.path.lexically_relative(absoluteOf(dir)).generic_string();
  r.sha256 = sha256File(r.path);
  return r;
}

struct StoredTree {
  bool negated = true;
  QueryTree root;
};

StoredTree loadTree(const fs::path& dir) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(readFile(dir / "tree.json"));
  } catch (const nlohmann::json::exception& e) {
    corrupt(std::string("tree.json does not parse: ") + e.what());
  } catch (const ResourceError&) {
    corrupt("tree.json is missing");
  }
  try {
    return {j.at("negated").get<bool>(), treeFromJson(j.at("root"))};
  } catch (const nlohmann::json::exception& e) {
    corrupt(std::string("tree.json: ") + e.what());
  }
}

PropertyStatus statusFromRecords(const StoredTree& tree, const std::vector<LeafRecord>& records) {
  std::vector<LeafResult> results(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) results[i].kind = records[i].kind;
  std::vector<std::size_t> satLeaves;
  std::optional<bool> sat = evaluateTree(tree.root, results, nullptr, &satLeaves);
  PropertyStatus s;
  if (!sat) {
    s.reason = "some verifier queries are unsolved";
    return s;
  }
  bool holds = tree.negated ? !*sat : *sat;
  s.kind = holds ? PropertyStatus::Kind::Verified : PropertyStatus::Kind::Falsified;
  if (!*sat) return s;
  for (std::size_t leaf : satLeaves) {
    const LeafRecord& r = records[leaf];
    s.witness.insert(r.witness.begin(), r.witness.end());
    std::string prefix = satLeaves.size() > 1 ? "q" + std::to_string(r.query) + "." : "";
    for (const auto& [name, v] : r.embedding) s.embedding[prefix + name] = v;
  }
  return s;
}

void writeManifest(const fs::path& dir, const CacheManifest& m) {
  writeFileAtomic(dir / "manifest.json", toJson(m).dump(2) + "\n");
}

} // namespace

QueryTree treeFromJson(const nlohmann::json& j) {
  QueryTree t;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "leaf") {
    int id = j.at("query").get<int>();
    if (id < 1) corrupt("query ids start at 1");
    t.kind = QueryTree::Kind::Leaf;
    t.leaf = static_cast<std::size_t>(id - 1);
    return t;
  }
  if (kind == "and") {
    t.kind = QueryTree::Kind::And;
  } else if (kind == "or") {
    t.kind = QueryTree::Kind::Or;
  } else {
    corrupt("unknown tree node kind '" + kind + "'");
  }
  // An empty or is what a property that normalises to true compiles to.
  for (const auto& c : j.at("children")) t.children.push_back(treeFromJson(c));
  return t;
}

nlohmann::json toJson(const CacheManifest& m) {
  nlohmann::json j;
  j["format"] = kCacheFormat;
  j["hashAlgorithm"] = kHashAlgorithm;
  j["property"] = m.property;
  j["spec"] = resourceJson(m.spec);
  j["resources"] = nlohmann::json::array();
  for (const auto& r : m.resources) j["resources"].push_back(resourceJson(r));
  j["parameters"] = nlohmann::json::array();
  for (const auto& p : m.parameters) j["parameters"].push_back({{"name", p.name}, {"value", p.value}});
  j["tree"] = {{"file", m.tree.file}, {"sha256", m.tree.sha256}};
  j["queries"] = nlohmann::json::array();
  for (const auto& q : m.queries) j["queries"].push_back({{"file", q.file}, {"sha256", q.sha256}});
  j["results"] = nlohmann::json::array();
  for (const auto& r : m.results) j["results"].push_back(recordJson(r));
  j["status"] = toJson(m.status);
  return j;
}

CacheManifest manifestFromJson(const nlohmann::json& j) {
  try {
    if (j.at("format") != kCacheFormat) corrupt("unsupported cache format " + j.at("format").dump());
    if (j.at("hashAlgorithm") != kHashAlgorithm) {
      corrupt("unsupported hash algorithm " + j.at("hashAlgorithm").dump());
    }
    CacheManifest m;
    m.property = j.at("property").get<std::string>();
    m.spec = resourceFromJson(j.at("spec"));
    for (const auto& r : j.at("resources")) m.resources.push_back(resourceFromJson(r));
    for (const auto& p : j.at("parameters")) {
      m.parameters.push_back({p.at("name").get<std::string>(), p.at("value").get<std::string>()});
    }
    m.tree = {j.at("tree").at("file").get<std::string>(), j.at("tree").at("sha256").get<std::string>()};
    for (const auto& q : j.at("queries")) {
      m.queries.push_back({q.at("file").get<std::string>(), q.at("sha256").get<std::string>()});
    }
    for (const auto& r : j.at("results")) m.results.push_back(recordFromJson(r));
    if (m.results.size() != m.queries.size()) corrupt("results and queries differ in length");
    for (std::size_t i = 0; i < m.results.size(); ++i) {
      if (m.results[i].query != static_cast<int>(i + 1)) corrupt("results are not in query order");
    }
    m.status = statusFromJson(j.at("status"));
    return m;
  } catch (const nlohmann::json::exception& e) {
    corrupt(std::string("manifest.json: ") + e.what());
  } catch (const Error& e) {
    if (e.id() == "corrupt-cache") throw;
    corrupt("manifest.json: " + std::string(e.what()));
  }
}

CacheManifest writeCache(const fs::path& dir, const CompiledQueries& cq, const CacheInputs& inputs,
                         const Rational& slack) {
  fs::create_directories(dir);
  CacheManifest m;
  m.property = cq.property;
  m.spec = hashed(dir, "spec", "spec", inputs.specPath);
  for (const auto& [name, path] : inputs.networks) m.resources.push_back(hashed(dir, name, "network", path));
  for (const auto& [name, path] : inputs.datasets) m.resources.push_back(hashed(dir, name, "dataset", path));
  std::sort(m.resources.begin(), m.resources.end(),
            [](const CacheResource& a, const CacheResource& b) { return a.name < b.name; });
  for (const auto& [name, value] : inputs.parameters) m.parameters.push_back({name, value});

  for (const auto& file : emitQueryFiles(cq, dir, slack)) {
    CacheFile f{file, sha256File(dir / file)};
    if (file == "tree.json") {
      m.tree = f;
    } else {
      m.queries.push_back(f);
    }
  }
  for (const auto& q : cq.queries) m.results.push_back({q.id, LeafResult::Kind::Unsolved, {}, {}});
  m.status = statusFromRecords({cq.negated, cq.root}, m.results);
  writeManifest(dir, m);
  return m;
}

CacheManifest readManifest(const fs::path& dir) {
  std::string text;
  try {
    text = readFile(dir / "manifest.json");
  } catch (const ResourceError&) {
    corrupt("manifest.json is missing in " + dir.generic_string());
  }
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    corrupt(std::string("manifest.json does not parse: ") + e.what());
  }
  return manifestFromJson(j);
}

fs::path resolveResource(const fs::path& dir, const CacheResource& r) {
  fs::path rel = dir / r.relativePath;
  if (!r.relativePath.empty() && fs::exists(rel)) return rel;
  return r.path;
}

nlohmann::json toJson(const CacheCheck& c) {
  nlohmann::json j{{"cache", checkName(c.kind)}};
  if (c.kind == CacheCheck::Kind::Stale) {
    j["changed"] = c.changed;
    j["missing"] = c.missing;
  }
  if (c.kind == CacheCheck::Kind::Corrupt) j["reason"] = c.reason;
  return j;
}

CacheCheck checkCache(const fs::path& dir) {
  CacheCheck out;
  CacheManifest m;
  try {
    m = readManifest(dir);
    auto own = [&](const CacheFile& f) {
      std::string bytes;
      try {
        bytes = readFile(dir / f.file);
      } catch (const ResourceError&) {
        corrupt(f.file + " is missing");
      }
      if (sha256Hex(bytes) != f.sha256) corrupt(f.file + " does not match its recorded hash");
    };
    own(m.tree);
    for (const auto& q : m.queries) own(q);
    StoredTree tree = loadTree(dir);
    std::function<void(const QueryTree&)> leaves = [&](const QueryTree& t) {
      if (t.kind == QueryTree::Kind::Leaf) {
        if (t.leaf >= m.queries.size()) corrupt("tree.json references an unknown query");
        return;
      }
      for (const auto& c : t.children) leaves(c);
    };
    leaves(tree.root);
  } catch (const Error& e) {
    out.kind = CacheCheck::Kind::Corrupt;
    out.reason = e.detail().empty() ? e.what() : e.detail();
    return out;
  }

  std::vector<const CacheResource*> all{&m.spec};
  for (const auto& r : m.resources) all.push_back(&r);
  for (const CacheResource* r : all) {
    fs::path p = resolveResource(dir, *r);
    std::string bytes;
    try {
      bytes = readFile(p);
    } catch (const ResourceError&) {
      out.changed.push_back(r->name);
      out.missing.push_back(r->name);
      continue;
    }
    if (sha256Hex(bytes) != r->sha256) out.changed.push_back(r->name);
  }
  if (!out.changed.empty()) out.kind = CacheCheck::Kind::Stale;
  return out;
}

LeafRecord makeRecord(const Query& q, const LeafResult& r) {
  LeafRecord out{q.id, r.kind, {}, {}};
  if (r.kind != LeafResult::Kind::Sat) return out;
  for (const auto& [v, value] : r.witness) out.embedding[embeddingVarName(v)] = value;
  out.witness = liftCounterexample(q, r.witness);
  return out;
}

void recordResult(const fs::path& dir, const LeafRecord& record) {
  CacheManifest m = readManifest(dir);
  if (record.query < 1 || static_cast<std::size_t>(record.query) > m.results.size()) {
    throw Error("unknown-leaf", "cache has no query " + std::to_string(record.query));
  }
  m.results[static_cast<std::size_t>(record.query - 1)] = record;
  m.status = statusFromRecords(loadTree(dir), m.results);
  writeManifest(dir, m);
}

PropertyStatus readStoredStatus(const fs::path& dir) {
  CacheManifest m = readManifest(dir);
  return statusFromRecords(loadTree(dir), m.results);
}

PropertyStatus readStatus(const fs::path& dir) {
  CacheCheck c = checkCache(dir);
  if (c.kind != CacheCheck::Kind::Valid) {
    PropertyStatus s;
    s.reason = c.kind == CacheCheck::Kind::Stale ? "cache is stale; re-run verify" : "cache is corrupt: " + c.reason;
    return s;
  }
  return readStoredStatus(dir);
}

} // namespace specbridge
