// SPDX-License-Identifier: Apache-2.0
#include "specbridge/parser.hpp"
#include "specbridge/printer.hpp"
#include "specbridge/resolve.hpp"
#include "specbridge/typecheck.hpp"

#include "../support/fixtures.hpp"

#include <gtest/gtest.h>

using namespace specbridge;
using specbridge::testing::readFixture;

namespace {

TypedProgram checkSource(const std::string& src) { return checkProgram(resolveNames(parseSource(src))); }

std::string typeErrorId(const std::string& src) {
  try {
    checkSource(src);
  } catch (const TypeError& e) {
    return e.id();
  }
  return "<no error>";
}

bool containsNode(const ExprPtr& e, ExprNode n) {
  if (e->node == n) return true;
  for (const auto& c : e->children) {
    if (containsNode(c, n)) return true;
  }
  return false;
}

} // namespace

TEST(Kinds, Basic) {
  Program empty;
  EXPECT_EQ(inferKind(empty, parseType("Tensor Rat [2]")), Kind::Type);
  EXPECT_EQ(inferKind(empty, parseType("Rat -> Bool")), Kind::Type);
  EXPECT_EQ(inferKind(empty, parseType("3")), Kind::Nat);
  try {
    inferKind(empty, parseType("Tensor Rat [Bool]"));
    FAIL();
  } catch (const TypeError& e) {
    EXPECT_EQ(e.id(), "kind-mismatch");
    EXPECT_EQ(e.expected(), "Nat");
    EXPECT_EQ(e.actual(), "Type");
  }
}

TEST(Check, ControllerTypechecks) {
  TypedProgram tp = checkSource(readFixture("specs/controller.vcl"));
  std::size_t safe = tp.indexOf("safe");
  EXPECT_EQ(tp.declTypes[safe]->node, TypeNode::Bool);
  EXPECT_EQ(tp.program.decls[safe].kind, DeclKind::Property);
  // The tensor-building forall in `normalise` has become a Foreach over Index 2.
  const ExprPtr& norm = tp.decl("normalise").body;
  ASSERT_EQ(norm->node, ExprNode::Lambda);
  ASSERT_EQ(norm->children[0]->node, ExprNode::Foreach);
  EXPECT_EQ(print(norm->children[0]->binderType), "Index 2");
  // Every node carries a type.
  std::function<void(const ExprPtr&)> typed = [&](const ExprPtr& e) {
    EXPECT_NE(e->type, nullptr) << nodeName(e->node);
    for (const auto& c : e->children) typed(c);
  };
  for (const auto& d : tp.program.decls) {
    if (d.body) typed(d.body);
  }
}

TEST(Check, OriginalSafeOutputSignatureIsRejected) {
  // With `Output -> Bool` the body indexes position 1 of a one-element vector
  // and passes it to `normalise`, which expects an Input.
  std::string src = readFixture("specs/controller.vcl");
  auto at = src.find("safeOutput : Input -> Bool");
  ASSERT_NE(at, std::string::npos);
  src.replace(at, std::string("safeOutput : Input -> Bool").size(), "safeOutput : Output -> Bool");
  EXPECT_EQ(typeErrorId(src), "type-mismatch");
}

TEST(Check, IndexOutOfBounds) {
  try {
    checkSource("f : Tensor Rat [2] -> Rat\nf x = x ! 2");
    FAIL();
  } catch (const TypeError& e) {
    EXPECT_EQ(e.id(), "index-out-of-bounds");
    EXPECT_NE(std::string(e.what()).find("2 >= 2"), std::string::npos);
  }
  EXPECT_EQ(typeErrorId("type V = Tensor Rat [1]\nk = 1\nf : V -> Rat\nf x = x ! k"), "index-out-of-bounds");
  EXPECT_EQ(typeErrorId("f : Tensor Rat [2] -> Rat\nf x = x ! 1"), "<no error>");
}

TEST(Check, PropertyMustBeBool) {
  EXPECT_EQ(typeErrorId("@property\np : Rat\np = 1"), "property-not-bool");
  EXPECT_EQ(typeErrorId("@property\np : Tensor Bool [2]\np = [true, false]"), "property-not-bool");
}

TEST(Check, Mismatches) {
  EXPECT_EQ(typeErrorId("f : Rat -> Bool\nf x = x + 1"), "type-mismatch");
  EXPECT_EQ(typeErrorId("f : Tensor Rat [2] -> Tensor Rat [3]\nf x = x"), "type-mismatch");
  EXPECT_EQ(typeErrorId("p : Bool\np = 1 and true"), "type-mismatch");
  EXPECT_EQ(typeErrorId("v : Tensor Rat [2]\nv = [1, 2, 3]"), "type-mismatch");
  try {
    checkSource("f : Rat -> Bool\nf x = x + 1");
  } catch (const TypeError& e) {
    EXPECT_EQ(e.expected(), "Bool");
    EXPECT_EQ(e.actual(), "Rat");
    EXPECT_EQ(e.pos().line, 2);
  }
}

TEST(Check, DeclarationForms) {
  EXPECT_EQ(typeErrorId("@network\nf : Rat -> Rat"), "unsupported-network-type");
  EXPECT_EQ(typeErrorId("@network\nf : Tensor Rat [2, 2] -> Tensor Rat [1]"), "unsupported-network-type");
  EXPECT_EQ(typeErrorId("@network\nf : Tensor Rat [2] -> Tensor Rat [1] -> Tensor Rat [1]"),
            "unsupported-network-type");
  EXPECT_EQ(typeErrorId("@dataset\nd : Tensor Rat [3, 2]"), "<no error>");
  EXPECT_EQ(typeErrorId("@dataset\nd : Bool"), "unsupported-type");
  EXPECT_EQ(typeErrorId("@parameter\ne : Rat"), "<no error>");
  EXPECT_EQ(typeErrorId("@parameter\ne : Tensor Rat [2]"), "unsupported-type");
}

TEST(Check, ShapeOf) {
  TypedProgram tp = checkSource(readFixture("specs/controller.vcl"));
  auto s = shapeOf(tp, "controller");
  EXPECT_EQ(s.inputDim, 2u);
  EXPECT_EQ(s.outputDim, 1u);
  TypedProgram tp2 = checkSource("@network\ng : Tensor Rat [5] -> Tensor Rat [3]");
  EXPECT_EQ(shapeOf(tp2, "g").inputDim, 5u);
  EXPECT_EQ(shapeOf(tp2, "g").outputDim, 3u);
}

TEST(Check, ShapePolymorphismIsMonomorphised) {
  TypedProgram tp = checkSource(
      "first : forall n . Tensor Rat [n] -> Rat\nfirst v = fold (\\a b -> a + b) 0 v\n"
      "t : Rat\nt = first [1, 2, 3]");
  const ExprPtr& body = tp.decl("t").body;
  ASSERT_EQ(body->node, ExprNode::App);
  ASSERT_EQ(body->children[0]->typeArgs.size(), 1u);
  EXPECT_EQ(print(body->children[0]->typeArgs[0]), "3");
}

TEST(Check, SynonymsExpand) {
  TypedProgram tp = checkSource("type V n = Tensor Rat [n]\nf : V 2 -> Rat\nf x = x ! 1");
  EXPECT_EQ(print(tp.declTypes[1]), "Tensor Rat [2] -> Rat");
  EXPECT_EQ(typeErrorId("type V n = Tensor Rat [n]\nf : V Rat -> Rat\nf x = 0"), "kind-mismatch");
}

TEST(Check, LiteralsAdoptContext) {
  TypedProgram tp = checkSource("f : Tensor Rat [2] -> Bool\nf x = x ! 0 <= 3");
  const ExprPtr& cmp = tp.decl("f").body->children[0];
  EXPECT_EQ(print(cmp->children[0]->children[1]->type), "Index 2");
  EXPECT_EQ(print(cmp->children[1]->type), "Rat");
}

TEST(Check, ExpressionAgainstProgram) {
  TypedProgram tp = checkSource(readFixture("specs/controller.vcl"));
  Program& p = tp.program;
  auto e = resolveExpression(p, parseExpression("safeInput [0, 0]"));
  auto checked = checkExpression(tp, e, types::boolean());
  EXPECT_EQ(checked->type->node, TypeNode::Bool);
  EXPECT_FALSE(containsNode(checked, ExprNode::Forall));
}
