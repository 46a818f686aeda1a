// SPDX-License-Identifier: Apache-2.0
#include "driver.hpp"

#include "specbridge/cache.hpp"
#include "specbridge/fsutil.hpp"
#include "specbridge/itp.hpp"
#include "specbridge/loss.hpp"
#include "specbridge/parser.hpp"
#include "specbridge/printer.hpp"
#include "specbridge/resolve.hpp"
#include "specbridge/sim.hpp"
#include "specbridge/verify.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <optional>
#include <ostream>
#include <set>

namespace specbridge::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::pair<std::string, std::string> splitBinding(const std::string& text, const char* flag) {
  auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 == text.size()) {
    throw ResourceError("invalid-binding", std::string(flag) + " expects name=value, got '" + text + "'");
  }
  return {text.substr(0, eq), text.substr(eq + 1)};
}

[[noreturn]] void illTyped(const std::string& name, const std::string& what) {
  throw ResourceError("ill-typed-resource", "resource '" + name + "': " + what);
}

Rational ratFromJson(const json& j, const std::string& name) {
  try {
    if (j.is_number_integer()) return Rational(j.dump());
    if (j.is_number_float()) return rationalFromDecimalDouble(j.get<double>());
    if (j.is_string()) return parseRational(j.get<std::string>());
  } catch (const std::invalid_argument& e) {
    illTyped(name, e.what());
  }
  illTyped(name, "expected a rational, got " + j.dump());
}

const Decl* findDecl(const TypedProgram& tp, const std::string& name) {
  for (const auto& d : tp.program.decls) {
    if (d.name == name) return &d;
  }
  return nullptr;
}

TypedProgram loadProgram(const std::string& file) {
  return checkProgram(resolveNames(parseSource(readFile(file))));
}

void requireProperty(const TypedProgram& tp, const std::string& property) {
  const Decl* d = findDecl(tp, property);
  if (!d || d->kind != DeclKind::Property) {
    throw Error("unknown-property", "'" + property + "' is not an @property of the specification");
  }
}

std::string shortestDouble(double v) {
  std::ostringstream ss;
  ss.precision(17);
  ss << v;
  return ss.str();
}

} // namespace

GroundValue valueAtType(const json& j, const TypePtr& type, const std::string& name) {
  switch (type->node) {
  case TypeNode::Rat:
    return GroundValue::ofRat(ratFromJson(j, name));
  case TypeNode::Nat: {
    Rational r = ratFromJson(j, name);
    if (!isInteger(r) || r < 0) illTyped(name, "expected a natural number, got " + j.dump());
    return GroundValue::ofRat(r);
  }
  case TypeNode::Bool:
    if (!j.is_boolean()) illTyped(name, "expected true or false, got " + j.dump());
    return GroundValue::ofBool(j.get<bool>());
  case TypeNode::Tensor: {
    const TypePtr& dim = type->args[1];
    if (dim->node != TypeNode::NatLit) illTyped(name, "tensor dimension is not a literal");
    if (!j.is_array()) illTyped(name, "expected an array, got " + j.dump());
    if (j.size() != dim->value) {
      throw ResourceError("resource-shape-mismatch", "resource '" + name + "' is declared with dimension " +
                                                         std::to_string(dim->value) + " but has " +
                                                         std::to_string(j.size()) + " elements");
    }
    std::vector<GroundValue> elems;
    for (const auto& e : j) elems.push_back(valueAtType(e, type->args[0], name));
    return GroundValue::ofVec(std::move(elems));
  }
  default:
    illTyped(name, "values of type " + print(type) + " cannot be supplied externally");
  }
}

void requireAllBound(const ResourceEnv& env, const TypedProgram& tp) {
  for (const auto& d : tp.program.decls) {
    bool bound = env.networks.count(d.name) || env.values.count(d.name);
    bool external = d.kind == DeclKind::Network || d.kind == DeclKind::Dataset || d.kind == DeclKind::Parameter;
    if (external && !bound) {
      std::string flag = d.kind == DeclKind::Network ? "--network" : d.kind == DeclKind::Dataset ? "--dataset" : "--parameter";
      throw ResourceError("unbound-resource",
                          declKindName(d.kind) + " '" + d.name + "' is not bound; pass " + flag + " " + d.name + "=...");
    }
  }
}

ResourceEnv bindResources(const Bindings& bindings, const TypedProgram& tp, bool requireAll) {
  ResourceEnv env;
  std::set<std::string> seen;
  auto claim = [&](const std::string& flag, const std::string& text, DeclKind kind) {
    auto [name, value] = splitBinding(text, flag.c_str());
    const Decl* d = findDecl(tp, name);
    if (!d || d->kind != kind) {
      throw ResourceError("extra-resource", flag + " " + name + ": the specification declares no " +
                                                declKindName(kind) + " named '" + name + "'");
    }
    if (!seen.insert(name).second) throw ResourceError("invalid-binding", "'" + name + "' is bound twice");
    return std::pair{name, value};
  };

  for (const auto& text : bindings.networks) {
    auto [name, path] = claim("--network", text, DeclKind::Network);
    Network net = loadNetwork(path);
    NetworkShape shape = shapeOf(tp, name);
    checkNetworkShape(net, shape.inputDim, shape.outputDim, name);
    env.networks.emplace(name, std::move(net));
    env.networkPaths.emplace(name, path);
  }
  for (const auto& text : bindings.datasets) {
    auto [name, path] = claim("--dataset", text, DeclKind::Dataset);
    json j;
    try {
      j = json::parse(readFile(path));
    } catch (const json::parse_error& e) {
      throw ResourceError("ill-typed-resource", "dataset '" + name + "': " + path + " is not JSON: " + e.what());
    }
    env.values.emplace(name, valueAtType(j, tp.declTypes[tp.indexOf(name)], name));
    env.datasetPaths.emplace(name, path);
  }
  for (const auto& text : bindings.parameters) {
    auto [name, value] = claim("--parameter", text, DeclKind::Parameter);
    const TypePtr& type = tp.declTypes[tp.indexOf(name)];
    json j;
    if (type->node == TypeNode::Rat || type->node == TypeNode::Nat) {
      j = value;
    } else {
      try {
        j = json::parse(value);
      } catch (const json::parse_error&) {
        illTyped(name, "cannot read '" + value + "' as " + print(type));
      }
    }
    env.values.emplace(name, valueAtType(j, type, name));
    env.parameterText.emplace(name, value);
  }

  if (requireAll) requireAllBound(env, tp);
  return env;
}

json errorJson(const Error& e) {
  json j{{"error", e.id()}, {"message", e.detail()}};
  if (e.pos().line > 0) {
    j["line"] = e.pos().line;
    j["column"] = e.pos().column;
  }
  if (const auto* te = dynamic_cast<const TypeError*>(&e)) {
    if (!te->expected().empty()) j["expected"] = te->expected();
    if (!te->actual().empty()) j["actual"] = te->actual();
  }
  return j;
}

namespace {

/// Exit codes.
constexpr int kOk = 0;
constexpr int kNegative = 1;
constexpr int kFailure = 2;

int statusExit(PropertyStatus::Kind k) {
  switch (k) {
  case PropertyStatus::Kind::Verified: return kOk;
  case PropertyStatus::Kind::Falsified: return kNegative;
  case PropertyStatus::Kind::Error: return kFailure;
  }
  return kFailure;
}

struct Options {
  std::string file;
  std::string property;
  Bindings bindings;
  std::string cacheDir;
  std::string output;
  std::string target;
  bool dumpAst = false;
  std::string dumpNormalForm;
  bool dumpElimination = false;
  // loss
  std::string logic = "dl2";
  std::size_t samples = 10;
  std::uint64_t seed = 0;
  double sigma = 1.0;
  double xi = 1.0;
  std::string fallback;
  std::string lossProgram;
  bool gradient = false;
  // verify
  std::size_t patternBudget = 24;
  std::string slack = "0";
  // export
  bool allowUnverified = false;
  std::string style;
  std::string moduleName;
  // simulate
  std::string network;
  std::size_t steps = 100;
  std::size_t runs = 1000;
  std::string windShiftBound = "1";
  std::string sensorErrorBound = "1/4";
  long resolution = 64;
  bool summary = false;
};

void addBindings(CLI::App* cmd, Options& o, bool withDatasets = true) {
  cmd->add_option("--network", o.bindings.networks, "Bind a @network: name=path.json")->take_all();
  if (withDatasets) {
    cmd->add_option("--dataset", o.bindings.datasets, "Bind a @dataset: name=path.json")->take_all();
    cmd->add_option("--parameter", o.bindings.parameters, "Bind a @parameter: name=value")->take_all();
  }
}

void emit(std::ostream& out, const json& j) { out << j.dump(2) << "\n"; }

void writeOutput(const Options& o, std::ostream& out, const std::string& text) {
  if (o.output.empty() || o.output == "-") {
    out << text;
  } else {
    writeFileAtomic(o.output, text);
  }
}

Rational parseFlagRational(const std::string& text, const std::string& flag) {
  try {
    return parseRational(text);
  } catch (const std::invalid_argument& e) {
    throw Error("usage", flag + ": " + e.what());
  }
}

// --- parse / check ---

int cmdParse(const Options& o, std::ostream& out) {
  Program p = parseSource(readFile(o.file));
  if (o.dumpAst) {
    emit(out, toJson(p));
    return kOk;
  }
  json decls = json::array();
  for (const auto& d : p.decls) decls.push_back({{"name", d.name}, {"kind", declKindName(d.kind)}});
  emit(out, {{"file", o.file}, {"declarations", decls}});
  return kOk;
}

int cmdCheck(const Options& o, std::ostream& out) {
  TypedProgram tp = loadProgram(o.file);
  if (!o.dumpNormalForm.empty()) {
    requireProperty(tp, o.dumpNormalForm);
    ResourceEnv env = bindResources(o.bindings, tp, false);
    ExprPtr nf = normaliseProperty(tp, o.dumpNormalForm, {env.values});
    emit(out, {{"property", o.dumpNormalForm}, {"normalForm", print(nf)}, {"ast", toJson(nf)}});
    return kOk;
  }
  json decls = json::array();
  for (std::size_t i = 0; i < tp.program.decls.size(); ++i) {
    const Decl& d = tp.program.decls[i];
    json entry{{"name", d.name}, {"kind", declKindName(d.kind)}};
    entry["type"] = tp.declTypes[i] ? json(print(tp.declTypes[i])) : json(nullptr);
    decls.push_back(entry);
  }
  emit(out, {{"file", o.file}, {"ok", true}, {"declarations", decls}});
  return kOk;
}

// --- loss ---

LossOptions lossOptions(const Options& o, const ResourceEnv& env) {
  LossOptions lo;
  lo.logic = Logic::parse(o.logic);
  lo.samples = o.samples;
  lo.seed = o.seed;
  lo.sigma = o.sigma;
  lo.xi = o.xi;
  lo.normalise.resources = env.values;
  if (!o.fallback.empty()) {
    auto comma = o.fallback.find(',');
    if (comma == std::string::npos) throw Error("usage", "--fallback-domain expects lo,hi");
    Rational lo_ = parseFlagRational(o.fallback.substr(0, comma), "--fallback-domain");
    Rational hi = parseFlagRational(o.fallback.substr(comma + 1), "--fallback-domain");
    if (hi < lo_) throw Error("usage", "--fallback-domain: empty interval");
    lo.fallback = Interval{lo_, hi};
  }
  return lo;
}

int cmdCompileLoss(const Options& o, std::ostream& out) {
  TypedProgram tp = loadProgram(o.file);
  requireProperty(tp, o.property);
  ResourceEnv env = bindResources(o.bindings, tp, false);
  LossProgram lp = compileLoss(tp, o.property, lossOptions(o, env));
  writeOutput(o, out, toJson(lp).dump(2) + "\n");
  return kOk;
}

int cmdLossEval(const Options& o, std::ostream& out) {
  LossProgram lp;
  LossResources res;
  if (!o.lossProgram.empty()) {
    try {
      lp = lossProgramFromJson(json::parse(readFile(o.lossProgram)));
    } catch (const json::exception& e) {
      throw Error("malformed-loss-program", o.lossProgram + ": " + e.what());
    }
    if (!o.bindings.datasets.empty() || !o.bindings.parameters.empty()) {
      // Values for a standalone loss program are typed by its resource slots.
      for (const auto& text : o.bindings.parameters) {
        auto [name, value] = splitBinding(text, "--parameter");
        res.values[name] = GroundValue::ofRat(parseFlagRational(value, "--parameter " + name));
      }
      for (const auto& text : o.bindings.datasets) {
        auto [name, path] = splitBinding(text, "--dataset");
        json j = json::parse(readFile(path));
        res.values[name] = valueAtType(j, types::tensor(types::rat(), {j.size()}), name);
      }
    }
    for (const auto& text : o.bindings.networks) {
      auto [name, path] = splitBinding(text, "--network");
      res.networks.emplace(name, loadNetwork(path));
    }
    for (const auto& slot : lp.networks) {
      auto it = res.networks.find(slot.name);
      if (it == res.networks.end()) {
        throw ResourceError("unbound-resource", "network '" + slot.name + "' is not bound; pass --network " +
                                                    slot.name + "=...");
      }
      checkNetworkShape(it->second, slot.inputDim, slot.outputDim, slot.name);
    }
    for (const auto& [name, net] : res.networks) {
      bool declared = std::any_of(lp.networks.begin(), lp.networks.end(), [&](const NetworkSlot& s) { return s.name == name; });
      if (!declared) throw ResourceError("extra-resource", "the loss program has no network named '" + name + "'");
    }
  } else {
    TypedProgram tp = loadProgram(o.file);
    requireProperty(tp, o.property);
    ResourceEnv env = bindResources(o.bindings, tp, true);
    lp = compileLoss(tp, o.property, lossOptions(o, env));
    res.networks = env.networks;
    res.values = env.values;
  }
  json j{{"property", lp.property}, {"logic", lp.logic.name()}, {"samples", o.samples}, {"seed", o.seed}};
  if (o.gradient) {
    LossGradient g = gradLoss(lp, res, o.seed, o.samples);
    j["loss"] = g.value;
    j["gradient"] = g.wrt;
  } else {
    j["loss"] = evalLoss(lp, res, o.seed, o.samples);
  }
  if (!std::isfinite(j["loss"].get<double>())) throw Error("non-finite-loss", "loss evaluated to " + shortestDouble(j["loss"]));
  emit(out, j);
  return kOk;
}

// --- queries / verify ---

CacheInputs cacheInputs(const std::string& specPath, const ResourceEnv& env) {
  CacheInputs in;
  in.specPath = specPath;
  for (const auto& [name, path] : env.networkPaths) in.networks[name] = path;
  for (const auto& [name, path] : env.datasetPaths) in.datasets[name] = path;
  in.parameters = env.parameterText;
  return in;
}

CompileOptions compileOptions(const ResourceEnv& env, const EliminationTrace* trace) {
  CompileOptions co;
  co.normalise.resources = env.values;
  co.trace = trace;
  return co;
}

EliminationTrace stderrTrace(std::ostream& err) {
  EliminationTrace t;
  t.onStep = [&err](const std::string& stage, Var v, const std::vector<LinearConstraint>& cs) {
    json j{{"stage", stage}, {"variable", embeddingVarName(v)}, {"constraints", json::array()}};
    for (const auto& c : cs) j["constraints"].push_back(toString(c, embeddingVarName));
    err << j.dump() << "\n";
  };
  return t;
}

json compiledJson(const CompiledQueries& cq, const fs::path& dir) {
  return {{"property", cq.property},
          {"cacheDir", fs::weakly_canonical(dir).generic_string()},
          {"queries", cq.queries.size()},
          {"negated", cq.negated},
          {"tree", treeJson(cq)}};
}

Assignment assignmentFromNames(const std::map<std::string, Rational>& named) {
  Assignment a;
  for (const auto& [name, value] : named) {
    std::size_t index = std::stoul(name.substr(1));
    a[name[0] == 'x' ? inputVar(index) : outputVar(index)] = value;
  }
  return a;
}

/// Solves the leaves the verdict still needs, persisting each result.
PropertyStatus solveIntoCache(const fs::path& dir, const TypedProgram& tp, const CompiledQueries& cq,
                              const ResourceEnv& env, const SolverOptions& so) {
  CacheManifest m = readManifest(dir);
  std::vector<LeafResult> results(cq.queries.size());
  for (const auto& r : m.results) {
    auto& slot = results.at(static_cast<std::size_t>(r.query - 1));
    slot.kind = r.kind;
    slot.witness = assignmentFromNames(r.embedding);
  }
  auto solve = [&](std::size_t leaf) {
    const Query& q = cq.queries[leaf];
    SolveResult s = solveQuery(q, env.networks, so);
    LeafResult lr{s.sat ? LeafResult::Kind::Sat : LeafResult::Kind::Unsat, s.witness};
    recordResult(dir, makeRecord(q, lr));
    return lr;
  };
  return deriveStatus(tp, cq, results, env.networks, solve);
}

int cmdCompileQueries(const Options& o, std::ostream& out, std::ostream& err) {
  if (o.cacheDir.empty()) throw Error("usage", "--cache-dir is required for --target queries");
  TypedProgram tp = loadProgram(o.file);
  requireProperty(tp, o.property);
  ResourceEnv env = bindResources(o.bindings, tp, false);
  EliminationTrace trace = stderrTrace(err);
  CompiledQueries cq = compileQueries(tp, o.property, compileOptions(env, o.dumpElimination ? &trace : nullptr));
  requireAllBound(env, tp);
  writeCache(o.cacheDir, cq, cacheInputs(o.file, env), parseFlagRational(o.slack, "--slack"));
  emit(out, compiledJson(cq, o.cacheDir));
  return kOk;
}

json verdictJson(const PropertyStatus& s, const std::string& property, const std::string& cacheDir) {
  json j = toJson(s);
  j["property"] = property;
  if (!cacheDir.empty()) j["cacheDir"] = fs::weakly_canonical(cacheDir).generic_string();
  return j;
}

int cmdVerify(const Options& o, std::ostream& out) {
  SolverOptions so;
  so.patternBudget = o.patternBudget;

  if (o.file.empty()) {
    // Resume from a cache: everything is re-bound from its manifest.
    if (o.cacheDir.empty()) throw Error("usage", "verify needs <file> <property> or --cache-dir");
    CacheCheck check = checkCache(o.cacheDir);
    if (check.kind == CacheCheck::Kind::Corrupt) throw Error("corrupt-cache", check.reason);
    if (check.kind == CacheCheck::Kind::Stale) {
      std::string names;
      for (const auto& c : check.changed) names += (names.empty() ? "" : ", ") + c;
      throw Error("stale-cache", "cache is stale (changed: " + names + "); re-run compile or verify with the spec");
    }
    CacheManifest m = readManifest(o.cacheDir);
    std::string spec = resolveResource(o.cacheDir, m.spec).string();
    TypedProgram tp = loadProgram(spec);
    Bindings b;
    for (const auto& r : m.resources) {
      std::string binding = r.name + "=" + resolveResource(o.cacheDir, r).string();
      (r.role == "network" ? b.networks : b.datasets).push_back(binding);
    }
    for (const auto& p : m.parameters) b.parameters.push_back(p.name + "=" + p.value);
    ResourceEnv env = bindResources(b, tp, true);
    CompiledQueries cq = compileQueries(tp, m.property, compileOptions(env, nullptr));
    if (treeJson(cq) != json::parse(readFile(fs::path(o.cacheDir) / m.tree.file))) {
      throw Error("cache-mismatch", "the specification no longer compiles to the cached queries");
    }
    PropertyStatus s = solveIntoCache(o.cacheDir, tp, cq, env, so);
    emit(out, verdictJson(s, m.property, o.cacheDir));
    return statusExit(s.kind);
  }

  if (o.property.empty()) throw Error("usage", "verify <file> needs a <property>");
  TypedProgram tp = loadProgram(o.file);
  requireProperty(tp, o.property);
  // Compile errors are reported before missing bindings.
  ResourceEnv env = bindResources(o.bindings, tp, false);
  CompiledQueries cq = compileQueries(tp, o.property, compileOptions(env, nullptr));
  requireAllBound(env, tp);
  PropertyStatus s;
  if (o.cacheDir.empty()) {
    std::vector<LeafResult> results;
    auto solve = [&](std::size_t leaf) {
      SolveResult r = solveQuery(cq.queries[leaf], env.networks, so);
      return LeafResult{r.sat ? LeafResult::Kind::Sat : LeafResult::Kind::Unsat, r.witness};
    };
    s = deriveStatus(tp, cq, results, env.networks, solve);
  } else {
    writeCache(o.cacheDir, cq, cacheInputs(o.file, env), parseFlagRational(o.slack, "--slack"));
    s = solveIntoCache(o.cacheDir, tp, cq, env, so);
  }
  emit(out, verdictJson(s, o.property, o.cacheDir));
  return statusExit(s.kind);
}

int cmdCheckCache(const Options& o, std::ostream& out) {
  CacheCheck c = checkCache(o.cacheDir);
  emit(out, toJson(c));
  switch (c.kind) {
  case CacheCheck::Kind::Valid: return kOk;
  case CacheCheck::Kind::Stale: return kNegative;
  case CacheCheck::Kind::Corrupt: return kFailure;
  }
  return kFailure;
}

// --- export ---

int cmdExport(const Options& o, std::ostream& out) {
  if (o.cacheDir.empty()) throw Error("usage", "--cache-dir is required for --target itp");
  Program source = parseSource(readFile(o.file));
  TypedProgram tp = checkProgram(resolveNames(source));
  requireProperty(tp, o.property);
  ExportOptions eo;
  eo.allowUnverified = o.allowUnverified;
  eo.moduleName = o.moduleName;
  if (!o.style.empty()) {
    try {
      eo.style = itpStyleFromJson(json::parse(readFile(o.style)));
    } catch (const json::parse_error& e) {
      throw Error("invalid-style", o.style + ": " + e.what());
    }
  }
  writeOutput(o, out, exportInterface(source, o.property, o.cacheDir, eo));
  return kOk;
}

// --- simulate ---

int cmdSimulate(const Options& o, std::ostream& out) {
  sim::Controller controller = sim::networkController(loadNetwork(o.network));
  sim::MonteCarloOptions mc;
  mc.runs = o.runs;
  mc.steps = o.steps;
  mc.seed = o.seed;
  mc.resolution = o.resolution;
  mc.bounds.windShift = parseFlagRational(o.windShiftBound, "--wind-shift-bound");
  mc.bounds.sensorError = parseFlagRational(o.sensorErrorBound, "--sensor-error-bound");
  if (mc.bounds.windShift < 0 || mc.bounds.sensorError < 0) throw Error("usage", "bounds must be non-negative");
  if (mc.resolution <= 0) throw Error("usage", "--resolution must be positive");
  auto report = sim::monteCarlo(controller, mc);
  json j = toJson(report, !o.summary);
  j["steps"] = o.steps;
  j["seed"] = o.seed;
  emit(out, j);
  return report.onRoadRuns == report.runs.size() ? kOk : kNegative;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Specification compiler for neural-network properties", "specbridge"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "specbridge 0.1.0");

  auto* parse = app.add_subcommand("parse", "Parse a specification; --dump-ast prints the AST as JSON");
  parse->add_option("file", o.file, "Specification file")->required();
  parse->add_flag("--dump-ast", o.dumpAst, "Print the full AST");

  auto* check = app.add_subcommand("check", "Scope- and type-check a specification");
  check->add_option("file", o.file, "Specification file")->required();
  check->add_option("--dump-normal-form", o.dumpNormalForm, "Print the normal form of this property");
  addBindings(check, o);

  auto* compile = app.add_subcommand("compile", "Compile a property to a loss program, verifier queries or ITP source");
  compile->add_option("--target", o.target, "loss | queries | itp")
      ->required()
      ->check(CLI::IsMember({"loss", "queries", "itp"}));
  compile->add_option("file", o.file, "Specification file")->required();
  compile->add_option("property", o.property, "Property name")->required();
  addBindings(compile, o);
  compile->add_option("--cache-dir", o.cacheDir, "Cache directory (queries, itp)");
  compile->add_option("-o,--output", o.output, "Output file (loss, itp); stdout by default");
  compile->add_option("--logic", o.logic, "dl2 | godel | lukasiewicz | product | yager[:p]")->capture_default_str();
  compile->add_option("--samples", o.samples, "Samples per quantifier")->capture_default_str();
  compile->add_option("--seed", o.seed, "Sampler seed")->capture_default_str();
  compile->add_option("--sigma", o.sigma, "Fuzzy atom scale")->capture_default_str();
  compile->add_option("--xi", o.xi, "DL2 strict-inequality penalty")->capture_default_str();
  compile->add_option("--fallback-domain", o.fallback, "lo,hi for quantified components without bounds");
  compile->add_option("--slack", o.slack, "Tightening of strict inequalities in rendered queries")->capture_default_str();
  compile->add_flag("--dump-elimination", o.dumpElimination, "Print each elimination stage to stderr (queries)");
  compile->add_flag("--allow-unverified", o.allowUnverified, "Export an unchecked postulate (itp)");
  compile->add_option("--style", o.style, "Rendering table JSON (itp)");
  compile->add_option("--module", o.moduleName, "Module name (itp)");

  auto* verify = app.add_subcommand("verify", "Verify a property, or resume the cache given by --cache-dir");
  verify->add_option("file", o.file, "Specification file");
  verify->add_option("property", o.property, "Property name");
  addBindings(verify, o);
  verify->add_option("--cache-dir", o.cacheDir, "Cache directory");
  verify->add_option("--pattern-budget", o.patternBudget, "Maximum ReLU units enumerated per query")->capture_default_str();
  verify->add_option("--slack", o.slack, "Tightening of strict inequalities in rendered queries")->capture_default_str();

  auto* checkCacheCmd = app.add_subcommand("check-cache", "Re-hash a cache: exit 0 Valid, 1 Stale, 2 Corrupt");
  checkCacheCmd->add_option("--cache-dir", o.cacheDir, "Cache directory")->required();

  auto* simulate = app.add_subcommand("simulate", "Monte-Carlo runs of the wind-controller model");
  simulate->add_option("--network", o.network, "Controller network (2 inputs, 1 output)")->required();
  simulate->add_option("--steps", o.steps, "Observations per run")->capture_default_str();
  simulate->add_option("--runs", o.runs, "Number of runs")->capture_default_str();
  simulate->add_option("--seed", o.seed, "Seed")->capture_default_str();
  simulate->add_option("--wind-shift-bound", o.windShiftBound, "Bound on |windShift|")->capture_default_str();
  simulate->add_option("--sensor-error-bound", o.sensorErrorBound, "Bound on |sensorError|")->capture_default_str();
  simulate->add_option("--resolution", o.resolution, "Observations are multiples of bound/resolution")
      ->capture_default_str();
  simulate->add_flag("--summary", o.summary, "Omit per-run results");

  auto* lossEval = app.add_subcommand("loss-eval", "Evaluate a property's loss for bound networks");
  lossEval->add_option("file", o.file, "Specification file");
  lossEval->add_option("property", o.property, "Property name");
  lossEval->add_option("--loss-program", o.lossProgram, "Evaluate an exported loss program instead");
  addBindings(lossEval, o);
  lossEval->add_option("--logic", o.logic, "dl2 | godel | lukasiewicz | product | yager[:p]")->capture_default_str();
  lossEval->add_option("--samples", o.samples, "Samples per quantifier")->capture_default_str();
  lossEval->add_option("--seed", o.seed, "Sampler seed")->capture_default_str();
  lossEval->add_option("--sigma", o.sigma, "Fuzzy atom scale")->capture_default_str();
  lossEval->add_option("--xi", o.xi, "DL2 strict-inequality penalty")->capture_default_str();
  lossEval->add_option("--fallback-domain", o.fallback, "lo,hi for quantified components without bounds");
  lossEval->add_flag("--gradient", o.gradient, "Also print d loss / d weight per network");

  auto* exportCmd = app.add_subcommand("export", "Render a verified property for a proof assistant");
  exportCmd->add_option("--target", o.target, "itp")->required()->check(CLI::IsMember({"itp"}));
  exportCmd->add_option("file", o.file, "Specification file")->required();
  exportCmd->add_option("property", o.property, "Property name")->required();
  exportCmd->add_option("--cache-dir", o.cacheDir, "Cache backing the property")->required();
  exportCmd->add_option("-o,--output", o.output, "Output file; stdout by default");
  exportCmd->add_flag("--allow-unverified", o.allowUnverified, "Export an unchecked postulate");
  exportCmd->add_option("--style", o.style, "Rendering table JSON");
  exportCmd->add_option("--module", o.moduleName, "Module name");

  std::vector<std::string> argv{"specbridge"};
  argv.insert(argv.end(), args.begin(), args.end());
  std::vector<char*> cargv;
  for (auto& a : argv) cargv.push_back(a.data());

  try {
    app.parse(static_cast<int>(cargv.size()), cargv.data());
  } catch (const CLI::CallForHelp&) {
    CLI::App* target = &app;
    for (CLI::App* sub : app.get_subcommands()) target = sub;
    out << target->help();
    return kOk;
  } catch (const CLI::CallForVersion& e) {
    out << e.what() << "\n";
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << json{{"error", "usage"}, {"message", e.what()}}.dump() << "\n";
    return kFailure;
  }

  try {
    if (*parse) return cmdParse(o, out);
    if (*check) return cmdCheck(o, out);
    if (*compile) {
      if (o.target == "loss") return cmdCompileLoss(o, out);
      if (o.target == "queries") return cmdCompileQueries(o, out, err);
      return cmdExport(o, out);
    }
    if (*verify) return cmdVerify(o, out);
    if (*checkCacheCmd) return cmdCheckCache(o, out);
    if (*simulate) return cmdSimulate(o, out);
    if (*lossEval) {
      if (o.lossProgram.empty() && (o.file.empty() || o.property.empty())) {
        throw Error("usage", "loss-eval needs <file> <property> or --loss-program");
      }
      return cmdLossEval(o, out);
    }
    if (*exportCmd) return cmdExport(o, out);
  } catch (const Error& e) {
    err << errorJson(e).dump() << "\n";
    return e.id() == "stale-cache" ? kNegative : kFailure;
  } catch (const std::exception& e) {
    err << json{{"error", "internal"}, {"message", e.what()}}.dump() << "\n";
    return kFailure;
  }
  return kFailure;
}

} // namespace specbridge::cli
