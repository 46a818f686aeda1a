// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "specbridge/nbe.hpp"
#include "specbridge/network.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace specbridge {

enum class LogicKind { DL2, Godel, Lukasiewicz, Product, Yager };

struct Logic {
  LogicKind kind = LogicKind::DL2;
  double p = 2.0; // Yager only, > 0

  /// dl2, godel, lukasiewicz, product, yager or yager:<p>.
  static Logic parse(const std::string& text);
  std::string name() const;
  /// True for the fuzzy logics, whose internal terms are truth values.
  bool fuzzy() const { return kind != LogicKind::DL2; }
};

using Interval = std::pair<Rational, Rational>;

/// Sampling region of one quantified variable, one interval per flattened component.
struct Domain {
  std::vector<std::uint64_t> dims; // empty for a scalar
  std::vector<Interval> box;
};

struct DomainExtraction {
  Domain domain;
  ExprPtr residual;
  /// Components whose bounds came from the fallback interval.
  std::vector<std::size_t> fallbackComponents;
};

/// Reads per-component bounds of the variable bound at `level` off a normal
/// form body: top-level conjuncts are absorbed and dropped, negated bounds
/// in a top-level disjunction (the antecedent of an implication) are
/// absorbed and kept. Throws CompileError("unbounded-domain") when a
/// component has no bound and there is no fallback.
DomainExtraction extractDomain(const ExprPtr& body, int level, const std::vector<std::uint64_t>& dims,
                               const std::optional<Interval>& fallback, const std::string& varName = "x");

struct LossNode;
using LossNodePtr = std::shared_ptr<const LossNode>;

struct LossNode {
  enum class Op {
    Const,
    Var,      // component `index` of sampled variable `var`
    Resource, // component `index` of an unbound parameter or dataset
    NetworkApply,
    Add,
    Sub,
    Mul,
    Div,
    Max,
    Min,
    Pow,
    Indicator, // 1 if args[0] == args[1], else 0
    SampleForall,
    SampleExists,
  };
  enum class Aggregate { Mean, Min, And, Or };

  Op op = Op::Const;
  Rational value;                 // Const
  int var = -1;                   // Var, Sample*
  std::size_t index = 0;          // Var, Resource, NetworkApply output
  std::string name;               // Resource, NetworkApply, Sample* binder
  std::vector<LossNodePtr> args;  // operands; network inputs; [body] for Sample*
  int id = -1;                    // Sample*: sampler stream
  Domain domain;                  // Sample*
  Aggregate aggregate = Aggregate::Mean;
};

std::string opName(LossNode::Op op);
std::string aggregateName(LossNode::Aggregate a);

struct NetworkSlot {
  std::string name;
  std::size_t inputDim = 0;
  std::size_t outputDim = 0;
};

struct ResourceSlot {
  std::string name;
  DeclKind kind = DeclKind::Parameter;
  std::vector<std::uint64_t> dims;
};

struct LossProgram {
  std::string property;
  Logic logic;
  double sigma = 1.0;
  double xi = 1.0;
  std::size_t samples = 10;
  std::uint64_t seed = 0;
  std::vector<NetworkSlot> networks;
  std::vector<ResourceSlot> resources;
  LossNodePtr root;
};

struct LossOptions {
  Logic logic;
  double sigma = 1.0; // fuzzy atom scale
  double xi = 1.0;    // DL2 strict-inequality penalty
  std::optional<Interval> fallback;
  bool extractDomains = true;
  std::size_t samples = 10;
  std::uint64_t seed = 0;
  NormaliseOptions normalise;
};

/// Translation of the property's normal form into a loss term ("how
/// false": 0 when satisfied). Throws CompileError.
LossProgram compileLoss(const TypedProgram& tp, const std::string& property, const LossOptions& options = {});

/// Translation of a closed Boolean expression in negation normal form (Not
/// and Implies are pushed inward first). The result is a loss for DL2 and a
/// truth value for the fuzzy logics; no root flip.
LossNodePtr translateFormula(const TypedProgram& tp, const ExprPtr& e, const LossOptions& options);

nlohmann::json toJson(const LossProgram& lp);
LossProgram lossProgramFromJson(const nlohmann::json& j);

/// Counter-based uniform draw in [0, 1) keyed by (seed, stream, sample, component).
double sampleUnit(std::uint64_t seed, std::uint64_t stream, std::uint64_t sample, std::uint64_t component);

struct LossResources {
  std::map<std::string, Network> networks;
  std::map<std::string, GroundValue> values;
};

struct EvalStats {
  /// Smallest |a - b| seen at a Max/Min/Indicator and smallest |pre| at a
  /// ReLU: how close the evaluation came to a non-differentiable point.
  double kinkMargin = std::numeric_limits<double>::infinity();
  std::size_t networkCalls = 0;
};

/// Loss value with floating-point arithmetic.
double evalLoss(const LossProgram& lp, const LossResources& resources, std::uint64_t seed, std::size_t samples,
                EvalStats* stats = nullptr);

/// Evaluates a term with some sampled variables fixed (by variable id).
double evalNode(const LossProgram& lp, const LossNodePtr& node, const LossResources& resources,
                const std::map<int, std::vector<double>>& bound, std::uint64_t seed, std::size_t samples,
                EvalStats* stats = nullptr);

struct LossGradient {
  double value = 0;
  /// d loss / d parameter, per network in Network::parameters() order.
  std::map<std::string, std::vector<double>> wrt;
};

/// Forward-mode (dual number) derivative with respect to every network weight.
LossGradient gradLoss(const LossProgram& lp, const LossResources& resources, std::uint64_t seed, std::size_t samples,
                      EvalStats* stats = nullptr);

} // namespace specbridge
