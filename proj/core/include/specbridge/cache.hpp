// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "specbridge/verify.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace specbridge {

inline constexpr const char* kCacheFormat = "specbridge-cache/1";
inline constexpr const char* kHashAlgorithm = "sha256";

/// Lower-case hex SHA-256 of raw bytes.
std::string sha256Hex(std::string_view bytes);
std::string sha256File(const std::filesystem::path& path);

/// A hashed external file. `role` is spec, network or dataset.
struct CacheResource {
  std::string name;
  std::string role;
  std::filesystem::path path;  // absolute
  std::string relativePath;    // relative to the cache directory
  std::string sha256;
};

struct CacheParameter {
  std::string name;
  std::string value; // as given on the command line
};

/// Persisted outcome of one leaf. For SAT leaves the lifted problem-space
/// witness is stored next to the embedding assignment.
struct LeafRecord {
  int query = 0;
  LeafResult::Kind kind = LeafResult::Kind::Unsolved;
  std::map<std::string, Rational> embedding;
  std::map<std::string, GroundValue> witness;
};

struct CacheFile {
  std::string file;
  std::string sha256;
};

struct CacheManifest {
  std::string property;
  CacheResource spec;
  std::vector<CacheResource> resources; // sorted by name
  std::vector<CacheParameter> parameters; // sorted by name
  CacheFile tree;
  std::vector<CacheFile> queries; // query1.txt, query2.txt, ...
  std::vector<LeafRecord> results; // one per query, in id order
  PropertyStatus status;
};

nlohmann::json toJson(const CacheManifest& m);
/// Throws Error("corrupt-cache") on schema violations.
CacheManifest manifestFromJson(const nlohmann::json& j);

/// Inputs to a fresh cache for one compiled property.
struct CacheInputs {
  std::filesystem::path specPath;
  std::map<std::string, std::filesystem::path> networks;
  std::map<std::string, std::filesystem::path> datasets;
  std::map<std::string, std::string> parameters;
};

/// Emits query files and tree.json, hashes every input and writes
/// manifest.json last; all writes are temp-file + rename. Leaf results
/// start unsolved.
CacheManifest writeCache(const std::filesystem::path& dir, const CompiledQueries& cq, const CacheInputs& inputs,
                         const Rational& slack = 0);

/// Reads and parses manifest.json; throws Error("corrupt-cache").
CacheManifest readManifest(const std::filesystem::path& dir);

struct CacheCheck {
  enum class Kind { Valid, Stale, Corrupt };
  Kind kind = Kind::Valid;
  /// Stale: names of changed resources ("spec" for the source), with
  /// missing ones listed in `missing` as well.
  std::vector<std::string> changed;
  std::vector<std::string> missing;
  std::string reason; // Corrupt
};

std::string checkName(CacheCheck::Kind k);
nlohmann::json toJson(const CacheCheck& c);

/// Rehashes the spec and every resource and verifies the cache's own files.
/// Never invokes the solver. Relative paths are tried before absolute ones.
CacheCheck checkCache(const std::filesystem::path& dir);

/// Location of a resource as seen from `dir`: the cache-relative path if it
/// exists, else the absolute one.
std::filesystem::path resolveResource(const std::filesystem::path& dir, const CacheResource& r);

/// Record for a solved leaf, lifting SAT witnesses to the problem space.
LeafRecord makeRecord(const Query& q, const LeafResult& r);

/// Stores the result of leaf `query` and the verdict recomputed from all
/// stored results. Throws Error("unknown-leaf").
void recordResult(const std::filesystem::path& dir, const LeafRecord& record);

/// Verdict recomputed from the stored tree and leaf results only; Error
/// when a needed leaf is unsolved. Reads nothing outside `dir`.
PropertyStatus readStoredStatus(const std::filesystem::path& dir);

/// checkCache first: a stale or corrupt cache yields Error, so it can never
/// be reported Verified. Otherwise readStoredStatus.
PropertyStatus readStatus(const std::filesystem::path& dir);

/// Rebuilds the and/or structure from tree.json (leaf indices are query id - 1).
QueryTree treeFromJson(const nlohmann::json& j);

GroundValue groundValueFromJson(const nlohmann::json& j);

} // namespace specbridge
