// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "specbridge/qelim.hpp"

#include <nlohmann/json.hpp>

#include <string>
#include <vector>

namespace specbridge {

enum class Activation { Identity, ReLU };

std::string activationName(Activation a);

/// Dense layer: out = act(W * in + b), W has one row per output unit.
/// Exact weights drive verification; the double copies drive the loss path.
struct Layer {
  std::vector<std::vector<Rational>> weights;
  std::vector<Rational> bias;
  Activation activation = Activation::Identity;
  std::vector<std::vector<double>> weightsF;
  std::vector<double> biasF;

  std::size_t inputDim() const { return weights.empty() ? 0 : weights[0].size(); }
  std::size_t outputDim() const { return weights.size(); }
};

struct Network {
  std::vector<Layer> layers;

  std::size_t inputDim() const { return layers.empty() ? 0 : layers.front().inputDim(); }
  std::size_t outputDim() const { return layers.empty() ? 0 : layers.back().outputDim(); }
  std::size_t reluCount() const;
  /// Weights then bias, layer by layer, row-major.
  std::size_t parameterCount() const;
  std::vector<double> parameters() const;
  /// Overwrites both the float and the exact weights.
  void setParameters(const std::vector<double>& flat);
};

/// Parses the documented JSON format (see docs/formats.md).
Network parseNetwork(const nlohmann::json& j);
Network loadNetwork(const std::string& path);
nlohmann::json toJson(const Network& net);

std::vector<Rational> evalNetwork(const Network& net, const std::vector<Rational>& input);
std::vector<double> evalNetwork(const Network& net, const std::vector<double>& input);

/// One flag per ReLU unit in layer order; true means active.
using ActivationPattern = std::vector<bool>;

/// The pattern realised at `input`; a pre-activation of exactly zero counts as active.
ActivationPattern patternAt(const Network& net, const std::vector<Rational>& input);

/// On the region described by `guard`, the network computes A * x + c.
struct AffineRestriction {
  std::vector<LinearExpr> outputs; // output j as an affine form over the input variables
  std::vector<LinearConstraint> guard;
};

/// Affine piece selected by `pattern`, over input variables `inputVars`.
AffineRestriction affineRestriction(const Network& net, const ActivationPattern& pattern,
                                    const std::vector<Var>& inputVars);

/// Checks that the network maps Tensor Rat [m] to Tensor Rat [n].
void checkNetworkShape(const Network& net, std::size_t m, std::size_t n, const std::string& name);

} // namespace specbridge
