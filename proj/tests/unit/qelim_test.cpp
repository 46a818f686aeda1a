// SPDX-License-Identifier: Apache-2.0
#include "specbridge/qelim.hpp"

#include "../support/random.hpp"
#include "../support/systems.hpp"

#include <gtest/gtest.h>

using namespace specbridge;
using namespace specbridge::testing;

namespace {

const Var X = 0, Y = 1, A = 2;

LinearExpr v(Var id, long c = 1) { return LinearExpr::ofVar(id, Rational(c)); }
LinearExpr k(Rational c) { return LinearExpr::ofConstant(std::move(c)); }

std::string name(Var id) { return std::string(1, "xya"[id]); }

} // namespace

TEST(LinearExpr, Arithmetic) {
  LinearExpr e = v(X, 2) + v(Y) - v(X, 2) + k(3);
  EXPECT_FALSE(e.mentions(X));
  EXPECT_EQ(e.coeff(Y), 1);
  EXPECT_EQ(toString(e, name), "y + 3");
  EXPECT_EQ(e.substitute(Y, v(X) * Rational(1, 2)).coeff(X), Rational(1, 2));
}

TEST(LinearConstraint, Normalisation) {
  auto c = LinearConstraint::make(v(X, -4), Relation::Le, k(2)).normalised();
  EXPECT_EQ(c.lhs.coeff(X), -1);
  EXPECT_EQ(c.lhs.constant, Rational(-1, 2));
  auto eq = LinearConstraint::make(v(X, -4) + v(Y, 2), Relation::Eq, k(0)).normalised();
  EXPECT_EQ(eq.lhs.coeff(X), 1);
  EXPECT_EQ(eq.lhs.coeff(Y), Rational(-1, 2));
}

TEST(Gaussian, SolvesEmbeddingEquation) {
  // a = (x + 4) / 8, solved for x.
  auto eq = LinearConstraint::make(v(A), Relation::Eq, (v(X) + k(4)) * Rational(1, 8));
  GaussianResult r = gaussianEliminate({eq}, {X});
  ASSERT_EQ(r.substitution.steps.size(), 1u);
  const LinearExpr& sol = r.substitution.steps[0].solution;
  EXPECT_EQ(sol.coeff(A), 8);
  EXPECT_EQ(sol.constant, -4);
  EXPECT_TRUE(r.residual.empty());
  // Substituting back yields the zero expression.
  EXPECT_TRUE(eq.lhs.substitute(X, sol).isConstant());
  EXPECT_EQ(eq.lhs.substitute(X, sol).constant, 0);
}

TEST(Gaussian, SymmetricSystem) {
  auto e1 = LinearConstraint::make(v(X) + v(Y), Relation::Eq, k(2));
  auto e2 = LinearConstraint::make(v(X) - v(Y), Relation::Eq, k(0));
  GaussianResult r = gaussianEliminate({e1, e2}, {X, Y});
  EXPECT_FALSE(r.infeasible);
  Assignment a;
  r.substitution.replay(a);
  EXPECT_EQ(a[X], 1);
  EXPECT_EQ(a[Y], 1);
}

TEST(Gaussian, Inconsistent) {
  LinearConstraint c;
  c.lhs = k(-1); // 0*x - 1 = 0
  c.rel = Relation::Eq;
  GaussianResult r = gaussianEliminate({c}, {X});
  EXPECT_TRUE(r.infeasible);
  EXPECT_EQ(r.unsolved, std::vector<Var>{X});
}

TEST(FourierMotzkin, OneLowerOneUpper) {
  auto out = fourierMotzkin({LinearConstraint::make(v(Y), Relation::Le, v(X)),
                             LinearConstraint::make(k(0), Relation::Le, v(Y))},
                            Y);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(toString(out[0], name), "-x <= 0");
}

TEST(FourierMotzkin, ProjectionMatchesGrid) {
  std::vector<LinearConstraint> sys = {LinearConstraint::make(v(X) + v(Y), Relation::Le, k(3)),
                                       LinearConstraint::make(v(Y, -1), Relation::Le, k(0)),
                                       LinearConstraint::make(k(1), Relation::Le, v(X))};
  auto out = fourierMotzkin(sys, Y);
  EXPECT_EQ(out.size(), 2u);
  for (const auto& c : out) EXPECT_FALSE(c.lhs.mentions(Y));
  // x is in the projection iff some y on a fine grid satisfies the system.
  for (int xi = -20; xi <= 60; ++xi) {
    Rational x(xi, 10);
    bool projected = std::all_of(out.begin(), out.end(), [&](const LinearConstraint& c) { return c.holds({{X, x}}); });
    bool witnessed = false;
    for (int yi = -10; yi <= 60 && !witnessed; ++yi) {
      Assignment a{{X, x}, {Y, Rational(yi, 10)}};
      witnessed = std::all_of(sys.begin(), sys.end(), [&](const LinearConstraint& c) { return c.holds(a); });
    }
    EXPECT_EQ(projected, witnessed) << x.get_str();
  }
}

TEST(FourierMotzkin, StrictSelfContradiction) {
  // y < y: as a single row it is 0 < 0 after canonicalisation.
  auto c = LinearConstraint::make(v(Y), Relation::Lt, v(Y));
  auto out = fourierMotzkin({c}, Y);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_TRUE(out[0].isConstant());
  EXPECT_FALSE(out[0].constantTruth());
  // Strictness propagates through a combination: y < x and x <= y.
  auto out2 = fourierMotzkin({LinearConstraint::make(v(Y), Relation::Lt, v(X)),
                              LinearConstraint::make(v(X), Relation::Le, v(Y))},
                             Y);
  ASSERT_EQ(out2.size(), 1u);
  EXPECT_EQ(out2[0].rel, Relation::Lt);
  EXPECT_FALSE(out2[0].constantTruth());
}

TEST(Eliminate, Empty) {
  auto r = eliminateVariables({}, {});
  EXPECT_TRUE(r.reduced.empty());
  EXPECT_TRUE(r.recon.steps.empty());
  EXPECT_FALSE(r.infeasible);
}

TEST(Eliminate, GaussianBeforeFourierMotzkin) {
  // x = 8a - 4 with -3.25 <= x <= 3.25 keeps only bounds on a.
  std::vector<LinearConstraint> sys = {
      LinearConstraint::make(v(X), Relation::Eq, v(A, 8) - k(4)),
      LinearConstraint::make(k(Rational(-13, 4)), Relation::Le, v(X)),
      LinearConstraint::make(v(X), Relation::Le, k(Rational(13, 4))),
  };
  auto r = eliminateVariables(sys, {A});
  ASSERT_EQ(r.recon.steps.size(), 1u);
  EXPECT_EQ(r.recon.steps[0].kind, ReconstructionStep::Kind::Solved);
  ASSERT_EQ(r.reduced.size(), 2u);
  Assignment at{{A, Rational(29, 32)}};
  r.recon.replay(at);
  EXPECT_EQ(at[X], Rational(13, 4));
  for (const auto& c : r.reduced) EXPECT_TRUE(c.holds({{A, Rational(3, 32)}}));
  for (const auto& c : sys) EXPECT_TRUE(c.holds(at));
}

TEST(Eliminate, ReconstructionUsesMidpointAndUnitOffsets) {
  // 1 <= y <= 3 → y = 2; y >= 5 only → y = 6; y <= -2 only → y = -3; free → 0.
  ReconstructionMap m;
  auto bounded = [](std::vector<LinearConstraint> bounds) {
    ReconstructionStep s;
    s.kind = ReconstructionStep::Kind::Bounded;
    s.var = Y;
    s.bounds = std::move(bounds);
    return s;
  };
  Assignment a;
  m.steps = {bounded({LinearConstraint::make(k(1), Relation::Le, v(Y)), LinearConstraint::make(v(Y), Relation::Le, k(3))})};
  m.replay(a);
  EXPECT_EQ(a[Y], 2);
  m.steps = {bounded({LinearConstraint::make(k(5), Relation::Le, v(Y))})};
  m.replay(a);
  EXPECT_EQ(a[Y], 6);
  m.steps = {bounded({LinearConstraint::make(v(Y), Relation::Lt, k(-2))})};
  m.replay(a);
  EXPECT_EQ(a[Y], -3);
  m.steps = {bounded({})};
  m.replay(a);
  EXPECT_EQ(a[Y], 0);
}

TEST(Eliminate, PlantedSystemsDecideCorrectly) {
  std::mt19937_64 rng(99);
  for (int i = 0; i < 200; ++i) {
    PlantedSystem s = i % 2 ? plantedInfeasible(rng) : plantedFeasible(rng);
    auto solution = solveLinear(s.constraints);
    EXPECT_EQ(solution.has_value(), s.feasible) << "system " << i;
    if (solution) {
      for (const auto& c : s.constraints) EXPECT_TRUE(c.holds(*solution));
    }
  }
}

TEST(Eliminate, ProjectionExtends) {
  std::mt19937_64 rng(5);
  int extended = 0;
  for (int i = 0; i < 100; ++i) {
    PlantedSystem s = plantedFeasible(rng);
    auto r = eliminateVariables(s.constraints, {0});
    ASSERT_FALSE(r.infeasible);
    for (int trial = 0; trial < 100; ++trial) {
      Assignment a{{0, trial == 0 ? s.planted[0] : randomRational(rng, -8, 8, 4)}};
      bool inProjection = std::all_of(r.reduced.begin(), r.reduced.end(), [&](const LinearConstraint& c) { return c.holds(a); });
      if (!inProjection) continue;
      r.recon.replay(a);
      for (const auto& c : s.constraints) ASSERT_TRUE(c.holds(a)) << "system " << i;
      ++extended;
    }
  }
  EXPECT_GT(extended, 100);
}

TEST(Eliminate, TraceReportsStages) {
  std::vector<std::string> stages;
  EliminationTrace trace;
  trace.onStep = [&](const std::string& stage, Var, const std::vector<LinearConstraint>&) { stages.push_back(stage); };
  eliminateVariables({LinearConstraint::make(v(X), Relation::Eq, v(Y)), LinearConstraint::make(v(Y), Relation::Le, v(A))},
                     {A}, &trace);
  EXPECT_EQ(stages, (std::vector<std::string>{"gaussian", "fourier-motzkin"}));
}
