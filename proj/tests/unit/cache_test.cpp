// SPDX-License-Identifier: Apache-2.0
#include "specbridge/cache.hpp"
#include "specbridge/diagnostics.hpp"
#include "specbridge/fsutil.hpp"
#include "specbridge/parser.hpp"
#include "specbridge/resolve.hpp"

#include "../support/fixtures.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace specbridge;
using specbridge::testing::fixturePath;
using specbridge::testing::ScratchDir;

namespace fs = std::filesystem;

namespace {

TypedProgram fromSource(const std::string& src) { return checkProgram(resolveNames(parseSource(src))); }

// A private copy of the controller spec and a network, so tests can edit them.
struct Workspace {
  ScratchDir root{"cache"};
  fs::path spec = root / "res/controller.vcl";
  fs::path net = root / "res/controller.json";
  fs::path cache = root / "cache";
  TypedProgram tp;
  CompiledQueries cq;

  explicit Workspace(const std::string& network = "good.json") {
    fs::create_directories(root / "res");
    fs::copy_file(fixturePath("specs/controller.vcl"), spec);
    fs::copy_file(fixturePath("specs/networks/" + network), net);
    tp = fromSource(readFile(spec));
    cq = compileQueries(tp, "safe");
  }

  CacheInputs inputs() const { return {spec, {{"controller", net}}, {}, {}}; }
  CacheManifest write() { return writeCache(cache, cq, inputs()); }
};

LeafRecord unsat(int id) { return {id, LeafResult::Kind::Unsat, {}, {}}; }

} // namespace

TEST(Sha256, StandardVectors) {
  EXPECT_EQ(sha256Hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256Hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Cache, ControllerManifestShape) {
  Workspace w;
  CacheManifest m = w.write();
  ASSERT_EQ(m.resources.size(), 1u);
  EXPECT_EQ(m.resources[0].name, "controller");
  EXPECT_EQ(m.resources[0].role, "network");
  EXPECT_EQ(m.resources[0].relativePath, "../res/controller.json");
  EXPECT_EQ(m.resources[0].sha256, sha256File(w.net));
  EXPECT_EQ(m.spec.sha256, sha256File(w.spec));
  EXPECT_EQ(m.queries.size(), 2u);
  EXPECT_TRUE(fs::exists(w.cache / "query1.txt"));
  EXPECT_TRUE(fs::exists(w.cache / "query2.txt"));
  EXPECT_TRUE(fs::exists(w.cache / "tree.json"));

  auto j = nlohmann::json::parse(readFile(w.cache / "manifest.json"));
  EXPECT_EQ(j["format"], "specbridge-cache/1");
  EXPECT_EQ(j["hashAlgorithm"], "sha256");
  EXPECT_EQ(j["parameters"], nlohmann::json::array());
  EXPECT_EQ(j["status"]["status"], "Error");
  for (const auto& r : j["results"]) EXPECT_EQ(r["result"], "unsolved");
  EXPECT_EQ(toJson(manifestFromJson(j)), j);
}

TEST(Cache, RewriteIsByteIdentical) {
  Workspace w;
  w.write();
  std::string first = readFile(w.cache / "manifest.json");
  w.write();
  EXPECT_EQ(readFile(w.cache / "manifest.json"), first);
  for (const auto& entry : fs::directory_iterator(w.cache)) {
    EXPECT_EQ(entry.path().filename().string().find(".tmp"), std::string::npos) << entry.path();
  }
}

TEST(Cache, UntouchedIsValid) {
  Workspace w;
  w.write();
  EXPECT_EQ(checkCache(w.cache).kind, CacheCheck::Kind::Valid);
}

TEST(Cache, EveryByteFlipMakesItStale) {
  Workspace w;
  w.write();
  const std::string original = readFile(w.net);
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<std::size_t> pos(0, original.size() - 1);
  std::size_t calls = solverInvocations();
  for (int i = 0; i < 100; ++i) {
    std::string bytes = original;
    bytes[pos(rng)] ^= static_cast<char>(1 + rng() % 255);
    writeFileAtomic(w.net, bytes);
    CacheCheck c = checkCache(w.cache);
    ASSERT_EQ(c.kind, CacheCheck::Kind::Stale) << i;
    EXPECT_EQ(c.changed, std::vector<std::string>{"controller"});
    EXPECT_TRUE(c.missing.empty());
    EXPECT_NE(readStatus(w.cache).kind, PropertyStatus::Kind::Verified);
  }
  writeFileAtomic(w.net, original);
  EXPECT_EQ(checkCache(w.cache).kind, CacheCheck::Kind::Valid);
  EXPECT_EQ(solverInvocations(), calls);
}

TEST(Cache, StaleNeverReadsAsVerified) {
  Workspace w;
  w.write();
  recordResult(w.cache, unsat(1));
  recordResult(w.cache, unsat(2));
  ASSERT_EQ(readStatus(w.cache).kind, PropertyStatus::Kind::Verified);

  writeFileAtomic(w.net, readFile(w.net) + " ");
  PropertyStatus s = readStatus(w.cache);
  EXPECT_EQ(s.kind, PropertyStatus::Kind::Error);
  EXPECT_NE(s.reason.find("stale"), std::string::npos);
  // The stored verdict itself is untouched; only the integrity gate differs.
  EXPECT_EQ(readStoredStatus(w.cache).kind, PropertyStatus::Kind::Verified);
}

TEST(Cache, MissingResourceIsStaleAndFlagged) {
  Workspace w;
  w.write();
  fs::remove(w.net);
  CacheCheck c = checkCache(w.cache);
  EXPECT_EQ(c.kind, CacheCheck::Kind::Stale);
  EXPECT_EQ(c.missing, std::vector<std::string>{"controller"});
  EXPECT_EQ(toJson(c)["missing"][0], "controller");
}

TEST(Cache, SpecEditIsStale) {
  Workspace w;
  w.write();
  writeFileAtomic(w.spec, readFile(w.spec) + "\n");
  CacheCheck c = checkCache(w.cache);
  EXPECT_EQ(c.kind, CacheCheck::Kind::Stale);
  EXPECT_EQ(c.changed, std::vector<std::string>{"spec"});
}

TEST(Cache, DamagedCacheFilesAreCorrupt) {
  {
    Workspace w;
    w.write();
    fs::remove(w.cache / "tree.json");
    CacheCheck c = checkCache(w.cache);
    EXPECT_EQ(c.kind, CacheCheck::Kind::Corrupt);
    EXPECT_NE(c.reason.find("tree.json"), std::string::npos);
  }
  {
    Workspace w;
    w.write();
    writeFileAtomic(w.cache / "query2.txt", "x0 <= 1\n");
    EXPECT_EQ(checkCache(w.cache).kind, CacheCheck::Kind::Corrupt);
  }
  {
    Workspace w;
    w.write();
    writeFileAtomic(w.cache / "manifest.json", "{ not json");
    EXPECT_EQ(checkCache(w.cache).kind, CacheCheck::Kind::Corrupt);
    EXPECT_EQ(readStatus(w.cache).kind, PropertyStatus::Kind::Error);
  }
  {
    ScratchDir empty("cache-empty");
    EXPECT_EQ(checkCache(empty.path()).kind, CacheCheck::Kind::Corrupt);
  }
}

TEST(Cache, RelocatedTogetherStaysValid) {
  Workspace w;
  w.write();
  ScratchDir other("cache-moved");
  fs::copy(w.root.path(), other.path(), fs::copy_options::recursive);
  fs::remove_all(w.root / "res");
  EXPECT_EQ(checkCache(other / "cache").kind, CacheCheck::Kind::Valid);
  // The original, whose relative and absolute paths are now both gone, is stale.
  EXPECT_EQ(checkCache(w.cache).kind, CacheCheck::Kind::Stale);
}

TEST(Cache, RecordedResultsDriveTheVerdict) {
  Workspace w;
  w.write();
  EXPECT_EQ(readStatus(w.cache).kind, PropertyStatus::Kind::Error);
  EXPECT_EQ(readStatus(w.cache).reason, "some verifier queries are unsolved");

  recordResult(w.cache, unsat(2));
  EXPECT_EQ(readStatus(w.cache).kind, PropertyStatus::Kind::Error);
  recordResult(w.cache, unsat(1));
  EXPECT_EQ(readStatus(w.cache).kind, PropertyStatus::Kind::Verified);
  auto j = nlohmann::json::parse(readFile(w.cache / "manifest.json"));
  EXPECT_EQ(j["status"]["status"], "Verified");
  EXPECT_EQ(checkCache(w.cache).kind, CacheCheck::Kind::Valid);
}

TEST(Cache, SatLeafFalsifiesWithoutTheOther) {
  Workspace w("zero.json");
  w.write();
  const Query& q1 = w.cq.queries[0];
  auto nets = std::map<std::string, Network>{{"controller", loadNetwork(w.net.string())}};
  SolveResult r = solveQuery(q1, nets);
  ASSERT_TRUE(r.sat);
  recordResult(w.cache, makeRecord(q1, {LeafResult::Kind::Sat, r.witness}));

  PropertyStatus s = readStatus(w.cache);
  EXPECT_EQ(s.kind, PropertyStatus::Kind::Falsified);
  EXPECT_EQ(s.witness.size(), 1u);
  EXPECT_EQ(s.embedding.at("x0"), r.witness.at(inputVar(0)));
  const auto& x = s.witness.begin()->second;
  ASSERT_EQ(x.elems.size(), 2u);
  EXPECT_EQ(x.elems[0].rat, 8 * r.witness.at(inputVar(0)) - 4);

  auto j = nlohmann::json::parse(readFile(w.cache / "manifest.json"));
  EXPECT_EQ(j["results"][1]["result"], "unsolved");
  EXPECT_EQ(j["status"]["status"], "Falsified");
}

TEST(Cache, UnknownLeafIsRejected) {
  Workspace w;
  w.write();
  for (int id : {0, 3}) {
    try {
      recordResult(w.cache, unsat(id));
      FAIL() << id;
    } catch (const Error& e) {
      EXPECT_EQ(e.id(), "unknown-leaf");
    }
  }
}

TEST(Cache, ParametersAndDatasetsAreRecorded) {
  ScratchDir d("cache-params");
  auto tp = fromSource("@parameter\neps : Rat\n\n@dataset\npts : Tensor Rat [2]\n\n@property\n"
                       "p : Bool\np = pts ! 0 <= eps\n");
  NormaliseOptions n;
  n.resources["eps"] = GroundValue::ofRat(Rational(1, 10));
  n.resources["pts"] = GroundValue::ofVector({Rational(0), Rational(1)});
  CompileOptions o;
  o.normalise = n;
  auto cq = compileQueries(tp, "p", o);
  writeFileAtomic(d / "spec.vcl", "spec");
  writeFileAtomic(d / "pts.json", "[\"0\", \"1\"]");
  CacheManifest m = writeCache(d / "cache", cq, {d / "spec.vcl", {}, {{"pts", d / "pts.json"}}, {{"eps", "0.1"}}});
  ASSERT_EQ(m.resources.size(), 1u);
  EXPECT_EQ(m.resources[0].role, "dataset");
  ASSERT_EQ(m.parameters.size(), 1u);
  EXPECT_EQ(m.parameters[0].value, "0.1");
  EXPECT_EQ(checkCache(d / "cache").kind, CacheCheck::Kind::Valid);
  // The property is ground and true, so its tree has no leaves at all.
  EXPECT_TRUE(cq.queries.empty());
  EXPECT_EQ(readStatus(d / "cache").kind, PropertyStatus::Kind::Verified);
}

TEST(Tree, JsonRoundTrip) {
  Workspace w;
  QueryTree t = treeFromJson(treeJson(w.cq)["root"]);
  ASSERT_EQ(t.kind, QueryTree::Kind::Or);
  ASSERT_EQ(t.children.size(), 2u);
  EXPECT_EQ(t.children[0].leaf, 0u);
  EXPECT_EQ(t.children[1].leaf, 1u);
  EXPECT_TRUE(treeFromJson(nlohmann::json{{"kind", "or"}, {"children", nlohmann::json::array()}}).children.empty());
  EXPECT_THROW(treeFromJson(nlohmann::json{{"kind", "xor"}, {"children", nlohmann::json::array()}}), Error);
}
