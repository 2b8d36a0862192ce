#include <map>
#include <set>
#include <string>

#include "doctest.h"
#include "fixtures.hpp"
#include "oracle.hpp"
#include "planrec/phatt.hpp"

using namespace planrec;

namespace {

const PlanLibrary& running() {
  static const PlanLibrary lib = fixtures::library(fixtures::kRunningExample);
  return lib;
}

std::set<std::string> plan_texts(const PlanLibrary& lib, const std::vector<Plan>& ps) {
  std::set<std::string> out;
  for (const auto& p : ps) out.insert(serialize_plan(lib, p));
  return out;
}

}  // namespace

TEST_CASE("effective max depth") {
  const auto& lib = running();
  CHECK(effective_max_depth(lib, PhattConfig{}) == 4);
  PhattConfig cfg;
  cfg.max_depth = 7;
  CHECK(effective_max_depth(lib, cfg) == 7);
}

TEST_CASE("leftmost_trees") {
  const auto& lib = running();
  const std::vector<SymbolId> roots{lib.id_of("X")};
  SUBCASE("a from X") {
    const auto trees = leftmost_trees(lib, PlanNode::realized(lib.id_of("a"), 1), roots, 3);
    CHECK(plan_texts(lib, trees) == std::set<std::string>{"X(A(a@1) B? C?)"});
  }
  SUBCASE("b cannot start X") {
    CHECK(leftmost_trees(lib, PlanNode::realized(lib.id_of("b"), 1), roots, 3).empty());
  }
  SUBCASE("c can start X") {
    const auto trees = leftmost_trees(lib, PlanNode::realized(lib.id_of("c"), 1), roots, 3);
    CHECK(plan_texts(lib, trees) == std::set<std::string>{"X(A? B? C(c@1))"});
  }
  SUBCASE("depth bound") {
    CHECK(leftmost_trees(lib, PlanNode::realized(lib.id_of("a"), 1), roots, 1).empty());
  }
  SUBCASE("terminal root is the leaf itself") {
    const std::vector<SymbolId> a{lib.id_of("a")};
    const auto trees = leftmost_trees(lib, PlanNode::realized(lib.id_of("a"), 1), a, 3);
    CHECK(plan_texts(lib, trees) == std::set<std::string>{"a@1"});
  }
  SUBCASE("not derivable") {
    const std::vector<SymbolId> b{lib.id_of("B")};
    CHECK(leftmost_trees(lib, PlanNode::realized(lib.id_of("a"), 1), b, 3).empty());
  }
}

TEST_CASE("leftmost tree chain probabilities") {
  const PlanLibrary g = fixtures::library(fixtures::kSmallGrammars[6]);
  LeftmostTreeIndex index(g, 4);
  std::multiset<double> probs;
  for (const auto& c : index.chains(g.id_of("X"), g.id_of("c"))) probs.insert(c.prob);
  // Z is unordered in both X rules, and c may start either Z rule.
  CHECK(probs == std::multiset<double>{0.75 * 0.5, 0.75 * 0.5, 0.25 * 0.5, 0.25 * 0.5});
  probs.clear();
  // a at the front of Z -> a c waits for c, so only X -> a b Z starts with a.
  for (const auto& c : index.chains(g.id_of("X"), g.id_of("a"))) probs.insert(c.prob);
  CHECK(probs == std::multiset<double>{0.75});
}

TEST_CASE("phatt on the running example") {
  const auto& lib = running();
  SUBCASE("a") {
    const auto run = phatt_recognize(lib, fixtures::seq(lib, "a"), PhattConfig{});
    CHECK(fixtures::canonical_set(lib, run.final.hypotheses) == std::set<std::string>{"X(A(a@1) B? C?)"});
  }
  SUBCASE("a c") {
    const auto run = phatt_recognize(lib, fixtures::seq(lib, "a c"), PhattConfig{});
    CHECK(fixtures::canonical_set(lib, run.final.hypotheses) ==
          std::set<std::string>{"X(A(a@1) B? C(c@2))", "X(A(a@1) B? C?);X(A? B? C(c@2))"});
    REQUIRE(run.metrics.size() == 2);
    CHECK(run.metrics[1].hypotheses == 2);
  }
  SUBCASE("a c b") {
    const auto run = phatt_recognize(lib, fixtures::seq(lib, "a c b"), PhattConfig{});
    CHECK(fixtures::canonical_set(lib, run.final.hypotheses) ==
          std::set<std::string>{"X(A(a@1) B(b@3) C(c@2))", "X(A(a@1) B(b@3) C?);X(A? B? C(c@2))"});
    for (const auto& h : run.final.hypotheses) CHECK(h.weight == 1.0);
  }
  SUBCASE("b first fails") {
    try {
      phatt_recognize(lib, fixtures::seq(lib, "b"), PhattConfig{});
      FAIL("expected RecognitionFailure");
    } catch (const RecognitionFailure& e) {
      CHECK(e.step() == 1);
    }
  }
  SUBCASE("nonterminal observation") {
    PhattRecognizer r(lib, PhattConfig{});
    CHECK_THROWS_AS(r.step(HypothesisSet::initial(), lib.id_of("A")), std::invalid_argument);
  }
}

TEST_CASE("hypothesis probability") {
  const auto& lib = running();
  CHECK(hypothesis_probability(parse_hypothesis(lib, "X(A(a@1) B(b@3) C(c@2))"), lib, PhattConfig{}) == 1.0);

  const PlanLibrary g = parse_library(R"(terminals: a b c d
nonterminals: X Y A B C
goals: X Y
rule: X -> A B C | (1,2) | 0.4
rule: X -> A C | | 0.6
rule: Y -> A | | 0.4
rule: Y -> B | | 0.6
rule: A -> a | | 1.0
rule: B -> b | | 1.0
rule: C -> c | | 1.0
)");
  PhattConfig explicit_prior;
  explicit_prior.goal_prior = {{g.id_of("X"), 0.5}, {g.id_of("Y"), 0.5}};
  const Hypothesis one = parse_hypothesis(g, "X(A(a@1) B? C?)");
  CHECK(hypothesis_probability(one, g, PhattConfig{}) == doctest::Approx(0.4 * 0.5));
  CHECK(rule_product(one) == doctest::Approx(0.4));

  const Hypothesis two = parse_hypothesis(g, "X(A(a@1) B? C?);Y(A(a@2))");
  CHECK(hypothesis_probability(two, g, explicit_prior) == doctest::Approx(0.04));
  CHECK(goal_rooted_weight(g, explicit_prior, two) == hypothesis_probability(two, g, explicit_prior));

  // Non-goal roots carry no prior.
  CHECK(hypothesis_probability(parse_hypothesis(g, "A(a@1)"), g, explicit_prior) == 1.0);
}

TEST_CASE("prior validation") {
  const auto& lib = running();
  PhattConfig cfg;
  cfg.goal_prior = {{lib.id_of("A"), 1.0}};
  CHECK_THROWS_AS(validate_config(lib, cfg), std::invalid_argument);
  cfg.goal_prior = {{lib.id_of("X"), 0.5}};
  CHECK_THROWS_AS(validate_config(lib, cfg), std::invalid_argument);
  cfg.goal_prior = {{lib.id_of("X"), 1.0}};
  CHECK_NOTHROW(validate_config(lib, cfg));
}

TEST_CASE("phatt matches the forest oracle") {
  for (auto text : fixtures::kSmallGrammars) {
    const PlanLibrary lib = parse_library(text);
    const std::size_t depth = effective_max_depth(lib, PhattConfig{});
    for (const auto& full : oracle::agent_sequences(lib)) {
      for (std::size_t n = 1; n <= std::min<std::size_t>(full.size(), 4); ++n) {
        const std::vector<SymbolId> obs(full.begin(), full.begin() + static_cast<std::ptrdiff_t>(n));
        const auto expected = oracle::goal_forests(lib, obs, depth);
        std::map<std::string, double> want(expected.begin(), expected.end());
        std::map<std::string, double> got;
        try {
          const auto run = phatt_recognize(lib, obs, PhattConfig{});
          for (const auto& h : run.final.hypotheses) got[canonical_form(lib, h)] = h.weight;
        } catch (const RecognitionFailure&) {
        }
        REQUIRE(got.size() == want.size());
        for (const auto& [k, w] : want) {
          REQUIRE(got.count(k) == 1);
          CHECK(got[k] == doctest::Approx(w));
        }
      }
    }
  }
}
