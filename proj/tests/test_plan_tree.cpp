#include <algorithm>
#include <string>

#include "doctest.h"
#include "fixtures.hpp"
#include "oracle.hpp"
#include "planrec/plan_tree.hpp"

using namespace planrec;

namespace {

const PlanLibrary& running() {
  static const PlanLibrary lib = fixtures::library(fixtures::kRunningExample);
  return lib;
}

std::vector<std::string> frontier_symbols(const PlanLibrary& lib, const Plan& p,
                                          const std::vector<NodePath>& paths) {
  std::vector<std::string> out;
  for (const auto& path : paths) out.push_back(lib.name(node_at(p, path).symbol()));
  return out;
}

}  // namespace

TEST_CASE("node caches") {
  const auto& lib = running();
  const Plan p = parse_plan(lib, "X(A(a@1) B? C(c@4))");
  CHECK_FALSE(p->complete());
  CHECK(p->has_content());
  CHECK(p->min_ts() == 1);
  CHECK(p->max_ts() == 4);
  CHECK(p->open_count() == 1);
  CHECK(p->realized_count() == 2);
  CHECK(p->depth() == 2);
  CHECK(p->child(0).complete());
  CHECK_FALSE(p->child(1).has_content());

  const Plan leaf = parse_plan(lib, "B?");
  CHECK(leaf->is_open());
  CHECK(leaf->depth() == 0);
  CHECK_FALSE(leaf->complete());
}

TEST_CASE("expanded rejects shape mismatches") {
  const auto& lib = running();
  const OpenNodes open(lib);
  const ProductionRule& x = lib.rule(*lib.find_rule(lib.id_of("X"), std::vector{lib.id_of("A"), lib.id_of("B"),
                                                                                 lib.id_of("C")}));
  CHECK_THROWS_AS(PlanNode::expanded(x, {open[lib.id_of("A")]}), std::invalid_argument);
  CHECK_THROWS_AS(PlanNode::expanded(x, {open[lib.id_of("A")], open[lib.id_of("C")], open[lib.id_of("B")]}),
                  std::invalid_argument);
  CHECK_NOTHROW(PlanNode::expanded(x, {open[lib.id_of("A")], open[lib.id_of("B")], open[lib.id_of("C")]}));
}

TEST_CASE("enabled_frontier") {
  const auto& lib = running();
  SUBCASE("A realized, B and C open") {
    const Plan p = parse_plan(lib, "X(A(a@1) B? C?)");
    CHECK(frontier_symbols(lib, p, enabled_frontier(lib, p)) == std::vector<std::string>{"B", "C"});
  }
  SUBCASE("A and B open, C realized") {
    const Plan p = parse_plan(lib, "X(A? B? C(c@1))");
    CHECK(frontier_symbols(lib, p, enabled_frontier(lib, p)) == std::vector<std::string>{"A"});
  }
  SUBCASE("complete plan") {
    const Plan p = parse_plan(lib, "X(A(a@1) B(b@3) C(c@2))");
    CHECK(enabled_frontier(lib, p).empty());
    CHECK(open_frontier(p).empty());
  }
  SUBCASE("predecessor above the node") {
    const PlanLibrary g = fixtures::library(fixtures::kSmallGrammars[2]);
    const Plan p = parse_plan(g, "G(P(a@1 B?) Q(B? c?))");
    // Q's B sits under position 2 of G, whose predecessor P is incomplete.
    CHECK(frontier_symbols(g, p, enabled_frontier(g, p)) == std::vector<std::string>{"B"});
    CHECK(enabled_frontier(g, p)[0] == NodePath{0, 1});
  }
}

TEST_CASE("fuse") {
  const auto& lib = running();
  SUBCASE("completes X") {
    const Plan p = parse_plan(lib, "X(A(a@1) B? C(c@2))");
    const Plan b = parse_plan(lib, "B(b@3)");
    const auto r = fuse(lib, p, NodePath{1}, b.root);
    REQUIRE(r);
    CHECK(serialize_plan(lib, *r.plan) == "X(A(a@1) B(b@3) C(c@2))");
    CHECK((*r.plan)->complete());
    // Inputs are untouched and the call is repeatable.
    CHECK(serialize_plan(lib, p) == "X(A(a@1) B? C(c@2))");
    const auto again = fuse(lib, p, NodePath{1}, b.root);
    REQUIRE(again);
    CHECK(*again.plan == *r.plan);
    // The untouched siblings are shared, not copied.
    CHECK(r.plan->root->children()[0] == p.root->children()[0]);
  }
  SUBCASE("symbol mismatch") {
    const Plan p = parse_plan(lib, "X(A(a@1) B? C?)");
    const auto r = fuse(lib, p, NodePath{1}, parse_plan(lib, "C(c@2)").root);
    CHECK_FALSE(r);
    CHECK(r.error == FuseError::SymbolMismatch);
  }
  SUBCASE("not an open node") {
    const Plan p = parse_plan(lib, "X(A(a@1) B? C?)");
    const auto r = fuse(lib, p, NodePath{0}, parse_plan(lib, "A(a@2)").root);
    CHECK_FALSE(r);
    CHECK(r.error == FuseError::NotOpenFrontier);
  }
  SUBCASE("temporal violation") {
    const Plan p = parse_plan(lib, "X(A? B? C?)");
    const auto r = fuse(lib, p, NodePath{1}, parse_plan(lib, "B(b@1)").root);
    CHECK_FALSE(r);
    CHECK(r.error == FuseError::TemporalViolation);
  }
  SUBCASE("path outside the tree") {
    const Plan p = parse_plan(lib, "X(A? B? C?)");
    CHECK_THROWS_AS(node_at(p, NodePath{5}), std::out_of_range);
    CHECK_THROWS_AS(node_at(p, NodePath{0, 0}), std::out_of_range);
  }
}

TEST_CASE("check_temporal_consistency") {
  const auto& lib = running();
  CHECK(check_temporal_consistency(lib, parse_plan(lib, "X(A(a@1) B? C?)")));
  CHECK(check_temporal_consistency(lib, parse_plan(lib, "X(A? B? C(c@1))")));
  CHECK(check_temporal_consistency(lib, parse_plan(lib, "X(A(a@1) B(b@3) C(c@2))")));
  CHECK(check_temporal_consistency(lib, parse_plan(lib, "X?")));

  const Plan bad = parse_plan(lib, "X(A? B(b@1) C?)");
  CHECK_FALSE(check_temporal_consistency(lib, bad));
  CHECK_FALSE(bad->consistent());

  const Plan late = parse_plan(lib, "X(A(a@2) B(b@1) C?)");
  CHECK_FALSE(check_temporal_consistency(lib, late));
  CHECK_FALSE(late->consistent());
}

TEST_CASE("canonical form") {
  const auto& lib = running();
  SUBCASE("complete X") {
    Hypothesis h;
    h.plans.push_back(parse_plan(lib, "X(A(a@1) B(b@3) C(c@2))"));
    CHECK(canonical_form(lib, h) == "X(A(a@1) B(b@3) C(c@2))");
  }
  SUBCASE("plan order does not matter") {
    Hypothesis h1, h2;
    h1.plans = {parse_plan(lib, "A(a@1)"), parse_plan(lib, "C(c@2)")};
    h2.plans = {parse_plan(lib, "C(c@2)"), parse_plan(lib, "A(a@1)")};
    CHECK(canonical_form(lib, h1) == canonical_form(lib, h2));
    CHECK(canonical_form(lib, h1) == "A(a@1);C(c@2)");
    CHECK(h1.same_structure(normalized(h2)));
    CHECK(h1.hash() == normalized(h2).hash());
  }
  SUBCASE("rule choices are distinguished") {
    const PlanLibrary g = fixtures::library(fixtures::kSmallGrammars[1]);
    Hypothesis h1, h2;
    h1.plans = {parse_plan(g, "X(A(b@1) B?)")};
    h2.plans = {parse_plan(g, "X(A? B(b@1))")};
    CHECK(canonical_form(g, h1) != canonical_form(g, h2));
  }
  SUBCASE("round-trip") {
    const std::string text = "X(A(a@1) B? C?);X(A? B? C(c@2))";
    const Hypothesis h = parse_hypothesis(lib, text);
    CHECK(h.plans.size() == 2);
    CHECK(canonical_form(lib, h) == text);
    CHECK(h.observation_count() == 2);
    CHECK(h.open_count() == 4);
    CHECK(h.max_depth() == 2);
  }
}

TEST_CASE("parse_plan errors") {
  const auto& lib = running();
  CHECK_THROWS_AS(parse_plan(lib, "X(A? B?)"), LibraryError);
  CHECK_THROWS_AS(parse_plan(lib, "X(A? B? C?"), LibraryError);
  CHECK_THROWS_AS(parse_plan(lib, "Q?"), LibraryError);
  CHECK_THROWS_AS(parse_plan(lib, "a@0"), LibraryError);
  CHECK_THROWS_AS(parse_plan(lib, "X(A? B? C?) trailing"), LibraryError);
}

TEST_CASE("rule_product and collector") {
  const PlanLibrary g = fixtures::library(fixtures::kSmallGrammars[6]);
  const Hypothesis h = parse_hypothesis(g, "X(a@1 b@2 Z(c@3))");
  CHECK(rule_product(h) == doctest::Approx(0.75 * 0.5));
  CHECK(h.weight == rule_product(h));

  HypothesisCollector c;
  CHECK(c.insert(h));
  CHECK_FALSE(c.insert(parse_hypothesis(g, "X(a@1 b@2 Z(c@3))")));
  CHECK(c.insert(parse_hypothesis(g, "X(a@1 b@2 Z?)")));
  CHECK(c.size() == 2);
}

TEST_CASE("caches agree with recomputation") {
  const PlanLibrary g = fixtures::library(fixtures::kSmallGrammars[2]);
  for (const char* text : {"G(P(a@1 B(b@2)) Q(c@3))", "G(P(a@2 B(b@1)) Q(B(b@3) c@4))", "G(P? Q(c@1))",
                           "G(P(a@1 B?) Q?)", "P(a@3 B(b@1))"}) {
    const Plan p = parse_plan(g, text);
    const oracle::Node n = oracle::from_engine(g, *p);
    CHECK(p->complete() == oracle::complete(n));
    CHECK(p->min_ts() == static_cast<Timestamp>(oracle::min_ts(n)));
    CHECK(p->max_ts() == static_cast<Timestamp>(oracle::max_ts(n)));
    CHECK(p->consistent() == oracle::consistent(g, n));
    CHECK(check_temporal_consistency(g, p) == oracle::consistent(g, n));
    CHECK(serialize_plan(g, p) == oracle::serialize(g, n));
  }
}
