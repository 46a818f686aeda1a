// SPDX-License-Identifier: Apache-2.0
#include "specbridge/network.hpp"

#include "specbridge/diagnostics.hpp"

#include <fstream>
#include <sstream>

namespace specbridge {

std::string activationName(Activation a) { return a == Activation::ReLU ? "relu" : "id"; }

std::size_t Network::reluCount() const {
  std::size_t n = 0;
  for (const auto& l : layers) {
    if (l.activation == Activation::ReLU) n += l.outputDim();
  }
  return n;
}

std::size_t Network::parameterCount() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.outputDim() * l.inputDim() + l.outputDim();
  return n;
}

std::vector<double> Network::parameters() const {
  std::vector<double> out;
  out.reserve(parameterCount());
  for (const auto& l : layers) {
    for (const auto& row : l.weightsF) out.insert(out.end(), row.begin(), row.end());
    out.insert(out.end(), l.biasF.begin(), l.biasF.end());
  }
  return out;
}

void Network::setParameters(const std::vector<double>& flat) {
  if (flat.size() != parameterCount()) {
    throw ResourceError("network-dimension-mismatch", "expected " + std::to_string(parameterCount()) +
                                                          " parameters but got " + std::to_string(flat.size()));
  }
  std::size_t k = 0;
  for (auto& l : layers) {
    for (std::size_t i = 0; i < l.outputDim(); ++i) {
      for (std::size_t j = 0; j < l.inputDim(); ++j) {
        l.weightsF[i][j] = flat[k];
        l.weights[i][j] = rationalFromDouble(flat[k]);
        ++k;
      }
    }
    for (std::size_t i = 0; i < l.outputDim(); ++i) {
      l.biasF[i] = flat[k];
      l.bias[i] = rationalFromDouble(flat[k]);
      ++k;
    }
  }
}

namespace {

[[noreturn]] void malformed(const std::string& why) {
  throw ResourceError("malformed-network", "malformed network file: " + why);
}

Rational number(const nlohmann::json& j, const std::string& where) {
  if (j.is_string()) {
    try {
      return parseRational(j.get<std::string>());
    } catch (const std::invalid_argument&) {
      malformed(where + " is not a decimal number: " + j.get<std::string>());
    }
  }
  if (j.is_number_integer()) return Rational(j.get<long>());
  if (j.is_number()) return rationalFromDecimalDouble(j.get<double>());
  malformed(where + " must be a number or a decimal string");
}

} // namespace

Network parseNetwork(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("layers") || !j["layers"].is_array()) malformed("expected an object with 'layers'");
  if (j.contains("format") && j["format"] != "specbridge-network/1") {
    malformed("unsupported format " + j["format"].dump());
  }
  Network net;
  std::size_t previous = 0;
  for (std::size_t li = 0; li < j["layers"].size(); ++li) {
    const auto& lj = j["layers"][li];
    std::string where = "layer " + std::to_string(li);
    if (!lj.is_object() || !lj.contains("W") || !lj.contains("b")) malformed(where + " needs 'W' and 'b'");
    Layer layer;
    std::string act = lj.value("act", "id");
    if (act == "id" || act == "identity" || act == "linear") {
      layer.activation = Activation::Identity;
    } else if (act == "relu") {
      layer.activation = Activation::ReLU;
    } else {
      throw ResourceError("unknown-activation", where + ": unknown activation '" + act + "'");
    }
    if (!lj["W"].is_array() || lj["W"].empty()) malformed(where + " 'W' must be a non-empty matrix");
    for (const auto& row : lj["W"]) {
      if (!row.is_array() || row.empty()) malformed(where + " 'W' rows must be non-empty arrays");
      std::vector<Rational> r;
      for (const auto& x : row) r.push_back(number(x, where + " weight"));
      if (!layer.weights.empty() && r.size() != layer.weights[0].size()) {
        throw ResourceError("network-dimension-mismatch", where + ": ragged weight matrix");
      }
      layer.weights.push_back(std::move(r));
    }
    if (!lj["b"].is_array()) malformed(where + " 'b' must be an array");
    for (const auto& x : lj["b"]) layer.bias.push_back(number(x, where + " bias"));
    if (layer.bias.size() != layer.weights.size()) {
      throw ResourceError("network-dimension-mismatch", where + ": W has " + std::to_string(layer.weights.size()) +
                                                            " rows but b has length " +
                                                            std::to_string(layer.bias.size()));
    }
    if (li > 0 && layer.inputDim() != previous) {
      throw ResourceError("network-dimension-mismatch", where + " expects " + std::to_string(layer.inputDim()) +
                                                            " inputs but the previous layer has " +
                                                            std::to_string(previous) + " outputs");
    }
    previous = layer.outputDim();
    for (const auto& row : layer.weights) {
      std::vector<double> rf;
      for (const auto& x : row) rf.push_back(toDouble(x));
      layer.weightsF.push_back(std::move(rf));
    }
    for (const auto& x : layer.bias) layer.biasF.push_back(toDouble(x));
    net.layers.push_back(std::move(layer));
  }
  if (net.layers.empty()) malformed("a network needs at least one layer");
  return net;
}

Network loadNetwork(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ResourceError("missing-resource", "cannot open network file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(ss.str());
  } catch (const nlohmann::json::parse_error& e) {
    malformed(path + ": " + e.what());
  }
  return parseNetwork(j);
}

nlohmann::json toJson(const Network& net) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : net.layers) {
    nlohmann::json w = nlohmann::json::array();
    for (const auto& row : l.weights) {
      nlohmann::json r = nlohmann::json::array();
      for (const auto& x : row) {
        std::string d = toDecimalString(x);
        r.push_back(d.empty() ? toFractionString(x) : d);
      }
      w.push_back(r);
    }
    nlohmann::json b = nlohmann::json::array();
    for (const auto& x : l.bias) {
      std::string d = toDecimalString(x);
      b.push_back(d.empty() ? toFractionString(x) : d);
    }
    layers.push_back({{"W", w}, {"b", b}, {"act", activationName(l.activation)}});
  }
  return {{"format", "specbridge-network/1"}, {"layers", layers}};
}

namespace {

template <typename T, typename WFn, typename BFn>
std::vector<T> forward(const Network& net, std::vector<T> x, WFn weight, BFn bias) {
  if (x.size() != net.inputDim()) {
    throw ResourceError("network-input-mismatch", "network expects " + std::to_string(net.inputDim()) +
                                                      " inputs but got " + std::to_string(x.size()));
  }
  for (const auto& l : net.layers) {
    std::vector<T> y(l.outputDim());
    for (std::size_t i = 0; i < l.outputDim(); ++i) {
      T acc = bias(l, i);
      for (std::size_t j = 0; j < l.inputDim(); ++j) acc += weight(l, i, j) * x[j];
      if (l.activation == Activation::ReLU && acc < 0) acc = 0;
      y[i] = acc;
    }
    x = std::move(y);
  }
  return x;
}

} // namespace

std::vector<Rational> evalNetwork(const Network& net, const std::vector<Rational>& input) {
  return forward<Rational>(
      net, input, [](const Layer& l, std::size_t i, std::size_t j) { return l.weights[i][j]; },
      [](const Layer& l, std::size_t i) { return l.bias[i]; });
}

std::vector<double> evalNetwork(const Network& net, const std::vector<double>& input) {
  return forward<double>(
      net, input, [](const Layer& l, std::size_t i, std::size_t j) { return l.weightsF[i][j]; },
      [](const Layer& l, std::size_t i) { return l.biasF[i]; });
}

ActivationPattern patternAt(const Network& net, const std::vector<Rational>& input) {
  ActivationPattern pattern;
  std::vector<Rational> x = input;
  for (const auto& l : net.layers) {
    std::vector<Rational> y(l.outputDim());
    for (std::size_t i = 0; i < l.outputDim(); ++i) {
      Rational acc = l.bias[i];
      for (std::size_t j = 0; j < l.inputDim(); ++j) acc += l.weights[i][j] * x[j];
      if (l.activation == Activation::ReLU) {
        pattern.push_back(acc >= 0);
        if (acc < 0) acc = 0;
      }
      y[i] = acc;
    }
    x = std::move(y);
  }
  return pattern;
}

AffineRestriction affineRestriction(const Network& net, const ActivationPattern& pattern,
                                    const std::vector<Var>& inputVars) {
  if (pattern.size() != net.reluCount()) {
    throw Error("internal-network", "activation pattern has " + std::to_string(pattern.size()) + " flags for " +
                                        std::to_string(net.reluCount()) + " ReLU units");
  }
  if (inputVars.size() != net.inputDim()) throw Error("internal-network", "wrong number of input variables");
  AffineRestriction out;
  std::vector<LinearExpr> x;
  for (Var v : inputVars) x.push_back(LinearExpr::ofVar(v));
  std::size_t unit = 0;
  for (const auto& l : net.layers) {
    std::vector<LinearExpr> y(l.outputDim());
    for (std::size_t i = 0; i < l.outputDim(); ++i) {
      LinearExpr pre = LinearExpr::ofConstant(l.bias[i]);
      for (std::size_t j = 0; j < l.inputDim(); ++j) pre += x[j] * l.weights[i][j];
      if (l.activation == Activation::ReLU) {
        bool active = pattern[unit++];
        LinearConstraint g;
        g.rel = Relation::Le;
        g.lhs = active ? pre * Rational(-1) : pre;
        out.guard.push_back(g);
        y[i] = active ? pre : LinearExpr{};
      } else {
        y[i] = pre;
      }
    }
    x = std::move(y);
  }
  out.outputs = std::move(x);
  return out;
}

void checkNetworkShape(const Network& net, std::size_t m, std::size_t n, const std::string& name) {
  if (net.inputDim() != m || net.outputDim() != n) {
    throw ResourceError("resource-shape-mismatch", "network '" + name + "' is declared " + std::to_string(m) + " -> " +
                                                       std::to_string(n) + " but the file implements " +
                                                       std::to_string(net.inputDim()) + " -> " +
                                                       std::to_string(net.outputDim()));
  }
}

} // namespace specbridge
