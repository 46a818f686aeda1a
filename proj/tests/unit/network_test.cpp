// SPDX-License-Identifier: Apache-2.0
#include "specbridge/network.hpp"

#include "../support/fixtures.hpp"
#include "../support/random.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace specbridge;
using namespace specbridge::testing;

namespace {

std::string loadErrorId(const char* text) {
  try {
    parseNetwork(nlohmann::json::parse(text));
  } catch (const Error& e) {
    return e.id();
  }
  return "<no error>";
}

Network randomRelu(std::mt19937_64& rng, std::vector<std::size_t> dims) {
  nlohmann::json layers = nlohmann::json::array();
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    nlohmann::json w = nlohmann::json::array();
    nlohmann::json b = nlohmann::json::array();
    for (std::size_t i = 0; i < dims[l + 1]; ++i) {
      nlohmann::json row = nlohmann::json::array();
      for (std::size_t j = 0; j < dims[l]; ++j) row.push_back(toFractionString(randomRational(rng, -2, 2, 8)));
      w.push_back(row);
      b.push_back(toFractionString(randomRational(rng, -1, 1, 8)));
    }
    layers.push_back({{"W", w}, {"b", b}, {"act", l + 2 == dims.size() ? "id" : "relu"}});
  }
  return parseNetwork({{"layers", layers}});
}

} // namespace

TEST(Network, IdentityNetwork) {
  Network net = parseNetwork(nlohmann::json::parse(R"({"layers":[{"W":[[1]], "b":[0], "act":"id"}]})"));
  EXPECT_EQ(net.inputDim(), 1u);
  EXPECT_EQ(net.outputDim(), 1u);
  EXPECT_EQ(evalNetwork(net, std::vector<Rational>{7}), std::vector<Rational>{7});
}

TEST(Network, GoodControllerFixture) {
  Network net = loadNetwork(fixturePath("specs/networks/good.json"));
  EXPECT_EQ(net.inputDim(), 2u);
  EXPECT_EQ(net.outputDim(), 1u);
  auto y = evalNetwork(net, std::vector<Rational>{Rational(1, 2), Rational(1, 2)});
  EXPECT_EQ(y, std::vector<Rational>{0});
  // Through e(v) = (v + 4) / 8 the network computes -2x + y.
  std::mt19937_64 rng(3);
  for (int i = 0; i < 50; ++i) {
    Rational px = randomRational(rng, -4, 4), py = randomRational(rng, -4, 4);
    auto out = evalNetwork(net, std::vector<Rational>{(px + 4) / 8, (py + 4) / 8});
    EXPECT_EQ(out[0], -2 * px + py);
  }
}

TEST(Network, ReluClampsNegative) {
  Network net = parseNetwork(nlohmann::json::parse(R"({"layers":[{"W":[["1"]], "b":["-1"], "act":"relu"}]})"));
  EXPECT_EQ(evalNetwork(net, std::vector<Rational>{Rational(1, 2)}), std::vector<Rational>{0});
}

TEST(Network, LoadErrors) {
  EXPECT_EQ(loadErrorId(R"({"layers":[{"W":[[1,2],[3,4]], "b":[0,0,0]}]})"), "network-dimension-mismatch");
  EXPECT_EQ(loadErrorId(R"({"layers":[{"W":[[1,2]], "b":[0]}, {"W":[[1,2]], "b":[0]}]})"),
            "network-dimension-mismatch");
  EXPECT_EQ(loadErrorId(R"({"layers":[{"W":[[1]], "b":[0], "act":"tanh"}]})"), "unknown-activation");
  EXPECT_EQ(loadErrorId(R"({"layers":[{"W":[["one"]], "b":[0]}]})"), "malformed-network");
  EXPECT_EQ(loadErrorId(R"({"layer":[]})"), "malformed-network");
  EXPECT_EQ(loadErrorId(R"({"layers":[]})"), "malformed-network");
  try {
    loadNetwork("/nonexistent/net.json");
    FAIL();
  } catch (const ResourceError& e) {
    EXPECT_EQ(e.id(), "missing-resource");
  }
}

TEST(Network, JsonRoundTrip) {
  std::mt19937_64 rng(1);
  Network net = randomRelu(rng, {2, 3, 1});
  Network back = parseNetwork(toJson(net));
  for (int i = 0; i < 20; ++i) {
    std::vector<Rational> x = {randomRational(rng, -3, 3), randomRational(rng, -3, 3)};
    EXPECT_EQ(evalNetwork(net, x), evalNetwork(back, x));
  }
}

TEST(Network, InputLengthMismatch) {
  Network net = loadNetwork(fixturePath("specs/networks/good.json"));
  EXPECT_THROW(evalNetwork(net, std::vector<Rational>{1}), ResourceError);
}

TEST(Network, ExactAndFloatAgree) {
  std::mt19937_64 rng(11);
  for (int n = 0; n < 20; ++n) {
    Network net = randomRelu(rng, {2, 4, 4, 1});
    for (int i = 0; i < 20; ++i) {
      std::vector<Rational> x = {randomRational(rng, -3, 3), randomRational(rng, -3, 3)};
      std::vector<double> xf = {toDouble(x[0]), toDouble(x[1])};
      EXPECT_NEAR(toDouble(evalNetwork(net, x)[0]), evalNetwork(net, xf)[0], 1e-6);
    }
  }
}

TEST(AffineRestriction, NoRelu) {
  Network net = loadNetwork(fixturePath("specs/networks/good.json"));
  auto r = affineRestriction(net, {}, {0, 1});
  EXPECT_TRUE(r.guard.empty());
  ASSERT_EQ(r.outputs.size(), 1u);
  EXPECT_EQ(r.outputs[0].coeff(0), -16);
  EXPECT_EQ(r.outputs[0].coeff(1), 8);
  EXPECT_EQ(r.outputs[0].constant, 4);
}

TEST(AffineRestriction, SingleActiveUnit) {
  Network net = parseNetwork(nlohmann::json::parse(R"({"layers":[{"W":[[1]], "b":[0], "act":"relu"}]})"));
  auto r = affineRestriction(net, {true}, {0});
  EXPECT_EQ(r.outputs[0], LinearExpr::ofVar(0));
  ASSERT_EQ(r.guard.size(), 1u);
  EXPECT_TRUE(r.guard[0].holds({{0, 0}}));
  EXPECT_TRUE(r.guard[0].holds({{0, 1}}));
  EXPECT_FALSE(r.guard[0].holds({{0, -1}}));
}

TEST(AffineRestriction, MatchesForwardPassAtRealisedPattern) {
  std::mt19937_64 rng(21);
  Network net = randomRelu(rng, {2, 2, 1});
  for (int i = 0; i < 100; ++i) {
    std::vector<Rational> x = {randomRational(rng, -3, 3), randomRational(rng, -3, 3)};
    auto pattern = patternAt(net, x);
    auto r = affineRestriction(net, pattern, {0, 1});
    Assignment a{{0, x[0]}, {1, x[1]}};
    for (const auto& g : r.guard) EXPECT_TRUE(g.holds(a));
    EXPECT_EQ(r.outputs[0].evaluate(a), evalNetwork(net, x)[0]);
  }
}

TEST(AffineRestriction, PatternsCoverEachPointExactlyOnceUpToTies) {
  std::mt19937_64 rng(8);
  Network net = randomRelu(rng, {2, 3, 1});
  for (int i = 0; i < 50; ++i) {
    std::vector<Rational> x = {randomRational(rng, -3, 3), randomRational(rng, -3, 3)};
    Assignment a{{0, x[0]}, {1, x[1]}};
    int strictlyInside = 0;
    for (unsigned bits = 0; bits < 8; ++bits) {
      ActivationPattern p = {bool(bits & 1), bool(bits & 2), bool(bits & 4)};
      auto r = affineRestriction(net, p, {0, 1});
      bool inside = std::all_of(r.guard.begin(), r.guard.end(), [&](const LinearConstraint& g) { return g.holds(a); });
      if (inside && p == patternAt(net, x)) ++strictlyInside;
    }
    EXPECT_EQ(strictlyInside, 1);
  }
}
