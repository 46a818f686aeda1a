// SPDX-License-Identifier: Apache-2.0
#include "driver.hpp"

#include "specbridge/cache.hpp"
#include "specbridge/fsutil.hpp"
#include "specbridge/parser.hpp"
#include "specbridge/resolve.hpp"
#include "specbridge/verify.hpp"

#include "../support/fixtures.hpp"
#include "../support/schema.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace specbridge;
using nlohmann::json;
using specbridge::testing::fixturePath;
using specbridge::testing::readFixture;
using specbridge::testing::SchemaValidator;
using specbridge::testing::ScratchDir;

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string out;
  std::string err;

  json stdoutJson() const { return json::parse(out); }
  json stderrJson() const {
    auto start = err.rfind('\n', err.size() - 2);
    return json::parse(start == std::string::npos ? err : err.substr(start + 1));
  }
};

Result runCli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  Result r;
  r.code = cli::run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

void expectSchema(const json& value, const std::string& schema) {
  SchemaValidator v(json::parse(readFixture("docs/schemas/" + schema + ".schema.json")));
  auto errors = v.validate(value);
  EXPECT_TRUE(errors.empty()) << schema << ": " << (errors.empty() ? "" : errors.front()) << "\n" << value.dump(2);
}

void expectError(const Result& r, int code, const std::string& id) {
  EXPECT_EQ(r.code, code) << r.err;
  ASSERT_FALSE(r.err.empty());
  json e = r.stderrJson();
  EXPECT_EQ(e.at("error"), id) << r.err;
  expectSchema(e, "error");
}

const std::string spec = fixturePath("specs/controller.vcl");
const std::string good = "controller=" + fixturePath("specs/networks/good.json");
const std::string zero = "controller=" + fixturePath("specs/networks/zero.json");
const std::string param = fixturePath("specs/parameterised.vcl");

} // namespace

// --- success paths and output schemas ---

TEST(Cli, VerifyGoodControllerExitsZero) {
  auto r = runCli({"verify", spec, "safe", "--network", good});
  ASSERT_EQ(r.code, 0) << r.err;
  json j = r.stdoutJson();
  EXPECT_EQ(j.at("status"), "Verified");
  expectSchema(j, "verify");
}

TEST(Cli, VerifyZeroControllerPrintsWitness) {
  auto r = runCli({"verify", spec, "safe", "--network", zero});
  ASSERT_EQ(r.code, 1) << r.err;
  json j = r.stdoutJson();
  EXPECT_EQ(j.at("status"), "Falsified");
  ASSERT_TRUE(j.contains("witness"));
  EXPECT_EQ(j.at("witness").at("x").size(), 2u);
  expectSchema(j, "verify");
}

TEST(Cli, CompileQueriesThenResumeFromCache) {
  ScratchDir d("cli-cache");
  std::string dir = (d / "out").string();
  auto c = runCli({"compile", "--target", "queries", spec, "safe", "--network", good, "--cache-dir", dir});
  ASSERT_EQ(c.code, 0) << c.err;
  expectSchema(c.stdoutJson(), "compile-queries");
  EXPECT_EQ(c.stdoutJson().at("queries"), 2);
  EXPECT_TRUE(fs::exists(d / "out" / "query1.txt"));

  // Nothing solved yet: the cache is intact but has no verdict.
  EXPECT_EQ(readStoredStatus(dir).kind, PropertyStatus::Kind::Error);
  auto v = runCli({"verify", "--cache-dir", dir});
  ASSERT_EQ(v.code, 0) << v.err;
  EXPECT_EQ(v.stdoutJson().at("status"), "Verified");
  expectSchema(v.stdoutJson(), "verify");
  EXPECT_EQ(readStoredStatus(dir).kind, PropertyStatus::Kind::Verified);
}

TEST(Cli, CheckCacheReportsEachStateWithoutSolving) {
  ScratchDir d("cli-check");
  fs::copy_file(fixturePath("specs/networks/good.json"), d / "good.json");
  std::string dir = (d / "out").string();
  ASSERT_EQ(runCli({"verify", spec, "safe", "--network", "controller=" + (d / "good.json").string(), "--cache-dir", dir}).code, 0);

  std::size_t calls = solverInvocations();
  auto valid = runCli({"check-cache", "--cache-dir", dir});
  EXPECT_EQ(valid.code, 0);
  EXPECT_EQ(valid.stdoutJson().at("cache"), "valid");
  expectSchema(valid.stdoutJson(), "check-cache");

  writeFileAtomic(d / "good.json", readFile(d / "good.json") + " ");
  auto stale = runCli({"check-cache", "--cache-dir", dir});
  EXPECT_EQ(stale.code, 1);
  EXPECT_EQ(stale.stdoutJson().at("changed"), json::array({"controller"}));
  expectSchema(stale.stdoutJson(), "check-cache");

  fs::remove(d / "out" / "tree.json");
  auto corrupt = runCli({"check-cache", "--cache-dir", dir});
  EXPECT_EQ(corrupt.code, 2);
  EXPECT_EQ(corrupt.stdoutJson().at("cache"), "corrupt");
  expectSchema(corrupt.stdoutJson(), "check-cache");
  EXPECT_EQ(solverInvocations(), calls);
}

TEST(Cli, ExportWritesTheModule) {
  ScratchDir d("cli-export");
  std::string dir = (d / "out").string();
  ASSERT_EQ(runCli({"verify", spec, "safe", "--network", good, "--cache-dir", dir}).code, 0);
  auto r = runCli({"export", "--target", "itp", spec, "safe", "--cache-dir", dir, "-o", (d / "Safe.agda").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  std::string text = readFile(d / "Safe.agda");
  EXPECT_NE(text.find("module Safe where"), std::string::npos);
  EXPECT_NE(text.find("safe : ∀ x → safeInput x ⇒ safeOutput x"), std::string::npos);
  // compile --target itp is the same renderer.
  auto same = runCli({"compile", "--target", "itp", spec, "safe", "--cache-dir", dir});
  EXPECT_EQ(same.out, text);
}

TEST(Cli, ParseAndCheck) {
  auto p = runCli({"parse", spec, "--dump-ast"});
  ASSERT_EQ(p.code, 0) << p.err;
  EXPECT_TRUE(p.stdoutJson().is_object());
  auto c = runCli({"check", spec});
  ASSERT_EQ(c.code, 0) << c.err;
  expectSchema(c.stdoutJson(), "check");
  auto nf = runCli({"check", spec, "--dump-normal-form", "safe"});
  ASSERT_EQ(nf.code, 0) << nf.err;
  EXPECT_NE(nf.stdoutJson().at("normalForm").get<std::string>().find("controller"), std::string::npos);
}

TEST(Cli, LossCompileAndEvalAgree) {
  ScratchDir d("cli-loss");
  std::string lp = (d / "lp.json").string();
  ASSERT_EQ(runCli({"compile", "--target", "loss", spec, "safe", "-o", lp, "--samples", "5", "--seed", "3"}).code, 0);
  auto direct = runCli({"loss-eval", spec, "safe", "--network", zero, "--samples", "5", "--seed", "3"});
  auto viaFile = runCli({"loss-eval", "--loss-program", lp, "--network", zero, "--samples", "5", "--seed", "3"});
  ASSERT_EQ(direct.code, 0) << direct.err;
  ASSERT_EQ(viaFile.code, 0) << viaFile.err;
  expectSchema(direct.stdoutJson(), "loss-eval");
  EXPECT_EQ(direct.stdoutJson().at("loss"), viaFile.stdoutJson().at("loss"));
  EXPECT_GT(direct.stdoutJson().at("loss").get<double>(), 0);

  auto g = runCli({"loss-eval", spec, "safe", "--network", good, "--gradient"});
  ASSERT_EQ(g.code, 0) << g.err;
  expectSchema(g.stdoutJson(), "loss-eval");
  EXPECT_EQ(g.stdoutJson().at("loss"), 0.0);
  EXPECT_EQ(g.stdoutJson().at("gradient").at("controller").size(), 3u);
}

TEST(Cli, SimulateExitReflectsRoadKeeping) {
  auto ok = runCli({"simulate", "--network", fixturePath("specs/networks/good.json"), "--runs", "50"});
  ASSERT_EQ(ok.code, 0) << ok.err;
  expectSchema(ok.stdoutJson(), "simulate");
  EXPECT_EQ(ok.stdoutJson().at("perRun").size(), 50u);
  auto off = runCli({"simulate", "--network", fixturePath("specs/networks/zero.json"), "--runs", "50", "--summary"});
  EXPECT_EQ(off.code, 1);
  expectSchema(off.stdoutJson(), "simulate");
  EXPECT_FALSE(off.stdoutJson().contains("perRun"));
}

TEST(Cli, ParametersAndDatasetsAreBound) {
  ScratchDir d("cli-param");
  writeFileAtomic(d / "limits.json", R"(["30", 1, 2.5])");
  std::string limits = "limits=" + (d / "limits.json").string();
  auto ok = runCli({"verify", param, "bounded", "--network", good, "--parameter", "eps=0.1", "--dataset", limits});
  EXPECT_EQ(ok.code, 0) << ok.err;
  auto wide = runCli({"verify", param, "bounded", "--network", good, "--parameter", "eps=20", "--dataset", limits});
  EXPECT_EQ(wide.code, 1) << wide.err;
}

TEST(Cli, HelpPerSubcommand) {
  for (const char* sub : {"parse", "check", "compile", "verify", "check-cache", "simulate", "loss-eval", "export"}) {
    auto r = runCli({sub, "--help"});
    EXPECT_EQ(r.code, 0) << sub;
    EXPECT_NE(r.out.find("Usage"), std::string::npos) << sub;
  }
}

// --- error paths: exit code and stable identifier ---

TEST(CliErrors, Usage) {
  expectError(runCli({}), 2, "usage");
  expectError(runCli({"frobnicate"}), 2, "usage");
  expectError(runCli({"verify", spec, "safe", "--bogus"}), 2, "usage");
  expectError(runCli({"compile", "--target", "binary", spec, "safe"}), 2, "usage");
  expectError(runCli({"verify"}), 2, "usage");
  expectError(runCli({"verify", spec}), 2, "usage");
  expectError(runCli({"loss-eval"}), 2, "usage");
  expectError(runCli({"compile", "--target", "queries", spec, "safe", "--network", good}), 2, "usage");
  expectError(runCli({"compile", "--target", "loss", spec, "safe", "--logic", "boolean"}), 2, "unknown-logic");
  expectError(runCli({"compile", "--target", "loss", spec, "safe", "--fallback-domain", "1"}), 2, "usage");
  expectError(runCli({"simulate", "--network", fixturePath("specs/networks/good.json"), "--wind-shift-bound", "x"}), 2,
              "usage");
  expectError(runCli({"simulate", "--network", fixturePath("specs/networks/good.json"), "--resolution", "0"}), 2, "usage");
}

TEST(CliErrors, FrontEnd) {
  ScratchDir d("cli-fe");
  writeFileAtomic(d / "syntax.vcl", "x = (1 +\n");
  writeFileAtomic(d / "types.vcl", "x : Bool\nx = 1\n");
  expectError(runCli({"check", (d / "missing.vcl").string()}), 2, "missing-resource");
  expectError(runCli({"check", (d / "syntax.vcl").string()}), 2, "unexpected-token");
  auto t = runCli({"check", (d / "types.vcl").string()});
  expectError(t, 2, "type-mismatch");
  EXPECT_EQ(t.stderrJson().at("expected"), "Bool");
  EXPECT_EQ(t.stderrJson().at("line"), 2);
  expectError(runCli({"verify", spec, "nosuch", "--network", good}), 2, "unknown-property");
  expectError(runCli({"verify", spec, "safeInput", "--network", good}), 2, "unknown-property");
}

TEST(CliErrors, Resources) {
  ScratchDir d("cli-res");
  writeFileAtomic(d / "short.json", "[1, 2]");
  writeFileAtomic(d / "bad.json", "{not json");
  writeFileAtomic(d / "wide.json", R"({"layers":[{"W":[["1","2","3"]],"b":["0"],"act":"id"}]})");
  std::string limits = "limits=" + fixturePath("specs/networks/good.json");

  auto unbound = runCli({"verify", spec, "safe"});
  expectError(unbound, 2, "unbound-resource");
  EXPECT_NE(unbound.stderrJson().at("message").get<std::string>().find("controller"), std::string::npos);
  expectError(runCli({"verify", spec, "safe", "--network", good, "--network", "other=x.json"}), 2, "extra-resource");
  expectError(runCli({"verify", spec, "safe", "--network", "controller"}), 2, "invalid-binding");
  expectError(runCli({"verify", spec, "safe", "--network", good, "--network", good}), 2, "invalid-binding");
  expectError(runCli({"verify", spec, "safe", "--network", "controller=" + (d / "none.json").string()}), 2,
              "missing-resource");
  expectError(runCli({"verify", spec, "safe", "--network", "controller=" + (d / "wide.json").string()}), 2,
              "resource-shape-mismatch");
  expectError(runCli({"verify", param, "bounded", "--network", good, "--parameter", "eps=1", "--dataset",
                   "limits=" + (d / "short.json").string()}),
              2, "resource-shape-mismatch");
  expectError(runCli({"verify", param, "bounded", "--network", good, "--parameter", "eps=1", "--dataset",
                   "limits=" + (d / "bad.json").string()}),
              2, "ill-typed-resource");
  expectError(runCli({"verify", param, "bounded", "--network", good, "--parameter", "eps=abc", "--dataset", limits}), 2,
              "ill-typed-resource");
  expectError(runCli({"verify", param, "bounded", "--network", good, "--parameter", "eps=1"}), 2, "unbound-resource");
}

TEST(CliErrors, UncompilableProperties) {
  std::string f = "f=" + fixturePath("specs/networks/identity1.json");
  for (const char* cmd : {"verify", "compile"}) {
    std::vector<std::string> a{cmd};
    if (std::string(cmd) == "compile") a.insert(a.end(), {"--target", "queries", "--cache-dir", "unused"});
    auto alt = a;
    alt.insert(alt.end(), {fixturePath("specs/alternating.vcl"), "reachable", "--network", f});
    auto non = a;
    non.insert(non.end(), {fixturePath("specs/nonlinear.vcl"), "bounded", "--network", f});
    expectError(runCli(alt), 2, "alternating-quantifiers");
    expectError(runCli(non), 2, "nonlinear-embedding");
  }
  // Compile errors take precedence over missing bindings.
  expectError(runCli({"verify", fixturePath("specs/alternating.vcl"), "reachable"}), 2, "alternating-quantifiers");
  EXPECT_FALSE(fs::exists("unused"));
}

TEST(CliErrors, Cache) {
  ScratchDir d("cli-cache-err");
  fs::copy_file(fixturePath("specs/networks/good.json"), d / "good.json");
  std::string dir = (d / "out").string();
  std::string net = "controller=" + (d / "good.json").string();
  ASSERT_EQ(runCli({"compile", "--target", "queries", spec, "safe", "--network", net, "--cache-dir", dir}).code, 0);

  // Export refuses until the queries are solved.
  expectError(runCli({"export", "--target", "itp", spec, "safe", "--cache-dir", dir}), 2, "unverified-property");
  auto unchecked = runCli({"export", "--target", "itp", spec, "safe", "--cache-dir", dir, "--allow-unverified"});
  EXPECT_EQ(unchecked.code, 0);
  EXPECT_NE(unchecked.out.find("UNCHECKED"), std::string::npos);

  ScratchDir other("cli-cache-other");
  writeFileAtomic(other / "p.vcl", "@property\nsafe2 : Bool\nsafe2 = true\n");
  expectError(runCli({"export", "--target", "itp", (other / "p.vcl").string(), "safe2", "--cache-dir", dir}), 2,
              "cache-mismatch");
  writeFileAtomic(other / "style.json", R"({"symbols": {"and": "∨"}})");
  expectError(runCli({"export", "--target", "itp", spec, "safe", "--cache-dir", dir, "--allow-unverified", "--style",
                   (other / "style.json").string()}),
              2, "invalid-style");

  writeFileAtomic(d / "good.json", readFile(d / "good.json") + "\n");
  expectError(runCli({"verify", "--cache-dir", dir}), 1, "stale-cache");
  fs::remove(d / "out" / "manifest.json");
  expectError(runCli({"verify", "--cache-dir", dir}), 2, "corrupt-cache");
}

TEST(CliErrors, LossProgram) {
  ScratchDir d("cli-lp");
  writeFileAtomic(d / "lp.json", R"({"format": "nope"})");
  expectError(runCli({"loss-eval", "--loss-program", (d / "lp.json").string(), "--network", zero}), 2,
              "malformed-loss-program");
  std::string lp = (d / "ok.json").string();
  ASSERT_EQ(runCli({"compile", "--target", "loss", spec, "safe", "-o", lp}).code, 0);
  expectError(runCli({"loss-eval", "--loss-program", lp}), 2, "unbound-resource");
  expectError(runCli({"loss-eval", "--loss-program", lp, "--network", zero, "--network",
                   "other=" + fixturePath("specs/networks/zero.json")}),
              2, "extra-resource");
}

// --- bindResources directly ---

TEST(Bind, ControllerEnvironment) {
  auto tp = checkProgram(resolveNames(parseSource(readFixture("specs/controller.vcl"))));
  cli::Bindings b;
  b.networks = {good};
  auto env = cli::bindResources(b, tp);
  EXPECT_EQ(env.networks.size(), 1u);
  EXPECT_TRUE(env.values.empty());
}

TEST(Bind, ValuesParseAtDeclaredType) {
  auto tp = checkProgram(resolveNames(parseSource("@parameter\neps : Rat\n\n@parameter\nflag : Bool\n\n"
                                                  "@dataset\nv : Tensor Rat [2]\n")));
  cli::Bindings b;
  ScratchDir d("bind-param");
  writeFileAtomic(d / "v.json", R"(["1/3", 2])");
  b.parameters = {"eps=0.1", "flag=true"};
  b.datasets = {"v=" + (d / "v.json").string()};
  auto env = cli::bindResources(b, tp);
  EXPECT_EQ(env.values.at("eps").rat, Rational(1, 10));
  EXPECT_TRUE(env.values.at("flag").boolean);
  EXPECT_EQ(env.values.at("v").elems.at(0).rat, Rational(1, 3));
  EXPECT_EQ(env.parameterText.at("eps"), "0.1");

  b.parameters = {"eps=0.1", "flag=1"};
  try {
    cli::bindResources(b, tp);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.id(), "ill-typed-resource");
  }
  b.parameters = {"eps=1/0", "flag=true"};
  EXPECT_THROW(cli::bindResources(b, tp), ResourceError);
  b.parameters = {"eps=0.1"};
  b.datasets.clear();
  auto partial = cli::bindResources(b, tp, false);
  EXPECT_EQ(partial.values.size(), 1u);
  EXPECT_THROW(cli::requireAllBound(partial, tp), ResourceError);
}

TEST(Bind, DatasetShape) {
  ScratchDir d("bind-ds");
  writeFileAtomic(d / "two.json", "[1, 2]");
  auto tp = checkProgram(resolveNames(parseSource("@dataset\npts : Tensor Rat [3]\n")));
  cli::Bindings b;
  b.datasets = {"pts=" + (d / "two.json").string()};
  try {
    cli::bindResources(b, tp);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.id(), "resource-shape-mismatch");
  }
}
