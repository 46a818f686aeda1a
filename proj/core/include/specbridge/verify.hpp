// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "specbridge/nbe.hpp"
#include "specbridge/network.hpp"
#include "specbridge/qelim.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace specbridge {

/// Variables of one network application inside a query: inputs are
/// x<inputOffset> .. x<inputOffset+inputDim-1>, outputs likewise with y.
struct NetworkBlock {
  std::string network;
  std::size_t inputOffset = 0;
  std::size_t inputDim = 0;
  std::size_t outputOffset = 0;
  std::size_t outputDim = 0;
};

/// A quantified problem-space variable; its flattened components occupy
/// internal variables firstVar .. firstVar + size - 1.
struct ProblemVar {
  std::string name;
  std::vector<std::uint64_t> dims; // empty for a scalar
  Var firstVar = 0;
  std::size_t size() const;
};

/// Internal variable numbering shared by every query.
Var inputVar(std::size_t i);
Var outputVar(std::size_t j);
bool isInputVar(Var v);
bool isOutputVar(Var v);
std::size_t varIndex(Var v);
std::string embeddingVarName(Var v);

struct Query {
  int id = 0; // 1-based, matches query<id>.txt
  std::vector<LinearConstraint> constraints; // over network variables only
  std::vector<NetworkBlock> blocks;
  std::vector<ProblemVar> problemVars;
  /// Leaf constraints before elimination, over problem and network variables.
  std::vector<LinearConstraint> original;
  ReconstructionMap recon;
};

struct QueryTree {
  enum class Kind { And, Or, Leaf };
  Kind kind = Kind::Leaf;
  std::vector<QueryTree> children;
  std::size_t leaf = 0; // index into CompiledQueries::queries
};

struct CompiledQueries {
  std::string property;
  /// True when the tree encodes the negated property (a SAT leaf is a
  /// counterexample); false for purely existential properties.
  bool negated = true;
  ExprPtr normalForm;
  QueryTree root;
  std::vector<Query> queries;
};

struct CompileOptions {
  NormaliseOptions normalise;
  /// Upper bound on disjuncts produced by DNF conversion.
  std::size_t maxLeaves = 4096;
  const EliminationTrace* trace = nullptr;
};

/// normalise -> negate -> prenex/DNF -> per-leaf elimination of problem variables.
/// Throws CompileError with ids alternating-quantifiers, nonlinear-embedding,
/// unsupported-atom, unbound-resource or query-explosion.
CompiledQueries compileQueries(const TypedProgram& tp, const std::string& property, const CompileOptions& options = {});

/// Marabou-style text for one leaf (see docs/formats.md). Strict
/// inequalities are tightened by `slack`.
std::string renderQuery(const Query& q, const Rational& slack = 0);
nlohmann::json treeJson(const CompiledQueries& cq);

/// Writes query<k>.txt and tree.json into dir; returns the written file names.
std::vector<std::string> emitQueryFiles(const CompiledQueries& cq, const std::filesystem::path& dir,
                                        const Rational& slack = 0);

struct SolveResult {
  bool sat = false;
  Assignment witness; // network variables only
  std::size_t patternsExplored = 0;
};

struct SolverOptions {
  std::size_t patternBudget = 24;
};

/// Complete decision by enumerating activation patterns with feasibility
/// pruning; every block must have its network bound.
SolveResult solveQuery(const Query& q, const std::map<std::string, Network>& networks,
                       const SolverOptions& options = {});

/// Number of solveQuery calls made by this process (for call-count checks).
std::size_t solverInvocations();

struct LeafResult {
  enum class Kind { Unsolved, Sat, Unsat };
  Kind kind = Kind::Unsolved;
  Assignment witness;
};

std::string leafResultName(LeafResult::Kind k);

struct PropertyStatus {
  enum class Kind { Verified, Falsified, Error };
  Kind kind = Kind::Error;
  std::string reason;
  /// Problem-space assignment by quantified variable name.
  std::map<std::string, GroundValue> witness;
  /// Embedding-space assignment by variable name (x0, y0, ...).
  std::map<std::string, Rational> embedding;
};

std::string statusName(PropertyStatus::Kind k);
nlohmann::json toJson(const PropertyStatus& s);
nlohmann::json toJson(const GroundValue& g);

/// Short-circuit evaluation of the tree: Or stops at the first SAT child,
/// And at the first UNSAT one. `solve` is called only for leaves whose
/// result is needed and not already in `results`; `results` is updated.
/// Returns whether the tree is satisfiable, or nullopt if a needed leaf
/// is unsolved and `solve` is empty.
std::optional<bool> evaluateTree(const QueryTree& tree, std::vector<LeafResult>& results,
                                 const std::function<LeafResult(std::size_t)>& solve,
                                 std::vector<std::size_t>* satLeaves = nullptr);

/// Replays the reconstruction map of a SAT leaf and checks that the lifted
/// point reproduces the embedding assignment exactly.
std::map<std::string, GroundValue> liftCounterexample(const Query& q, const Assignment& embedding);

/// Verdict for a fully evaluated tree, with witnesses lifted and re-checked
/// against the original property using exact evaluation of the networks.
PropertyStatus deriveStatus(const TypedProgram& tp, const CompiledQueries& cq, std::vector<LeafResult>& results,
                            const std::map<std::string, Network>& networks,
                            const std::function<LeafResult(std::size_t)>& solve);

/// compileQueries + solve + deriveStatus.
PropertyStatus verifyProperty(const TypedProgram& tp, const std::string& property,
                              const std::map<std::string, Network>& networks, const CompileOptions& compile = {},
                              const SolverOptions& solver = {});

} // namespace specbridge
