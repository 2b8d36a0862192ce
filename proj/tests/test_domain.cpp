#include <algorithm>
#include <map>
#include <set>
#include <string>

#include "doctest.h"
#include "fixtures.hpp"
#include "planrec/domain.hpp"
#include "planrec/phatt.hpp"
#include "planrec/slim.hpp"

using namespace planrec;

namespace {

std::string joined(const PlanLibrary& lib, const std::vector<SymbolId>& seq) {
  std::string s;
  for (SymbolId id : seq) {
    if (!s.empty()) s += ' ';
    s += lib.name(id);
  }
  return s;
}

}  // namespace

TEST_CASE("rng matches the published mt19937_64 reference") {
  Rng rng(5489);
  std::uint64_t x = 0;
  for (int i = 0; i < 10000; ++i) x = rng.next();
  CHECK(x == 9981545732273789042ull);
}

TEST_CASE("rng ranges") {
  Rng rng(1);
  std::vector<int> hits(3, 0);
  for (int i = 0; i < 3000; ++i) {
    const auto v = rng.below(3);
    REQUIRE(v < 3);
    ++hits[v];
    const double u = rng.unit();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
  }
  for (int h : hits) CHECK(h > 800);
}

TEST_CASE("default profile") {
  const PlanLibrary lib = generate_domain(DomainParams{});
  const DomainStats stats = library_stats(lib);
  REQUIRE(stats.plan_leaf_count);
  CHECK(*stats.plan_leaf_count == 9);
  CHECK(lib.goals().size() == 5);
  CHECK(lib.max_or_branching() == 2);
  CHECK(lib.longest_derivation_depth() == 3);
  for (const Symbol& s : lib.symbols()) {
    if (s.terminal()) continue;
    const auto rules = lib.rules_for(s.id);
    if (rules.size() == 2) {
      for (RuleId r : rules) {
        CHECK(lib.rule(r).prob == 0.5);
        CHECK(lib.rule(r).rhs.size() == 1);
      }
    } else {
      REQUIRE(rules.size() == 1);
      const ProductionRule& r = lib.rule(rules[0]);
      CHECK(r.rhs.size() == 3);
      CHECK(r.constraints.size() == 2);  // total order at ordered_fraction 1
    }
  }
}

TEST_CASE("generation is deterministic in the seed") {
  DomainParams p;
  p.ordered_fraction = 0.5;
  p.share_subtrees = true;
  CHECK(serialize_library(generate_domain(p)) == serialize_library(generate_domain(p)));
  DomainParams q = p;
  q.seed = p.seed + 1;
  CHECK(serialize_library(generate_domain(p)) != serialize_library(generate_domain(q)));
}

TEST_CASE("ordered fraction zero leaves AND rules unordered") {
  DomainParams p;
  p.ordered_fraction = 0.0;
  const PlanLibrary lib = generate_domain(p);
  for (const auto& r : lib.rules()) CHECK(r.constraints.empty());
}

TEST_CASE("shared subtrees reduce complex actions") {
  DomainParams p;
  const auto plain = library_stats(generate_domain(p));
  p.share_subtrees = true;
  const auto shared = library_stats(generate_domain(p));
  CHECK(shared.complex_actions < plain.complex_actions);
  CHECK(shared.plan_leaf_count == plain.plan_leaf_count);
}

TEST_CASE("invalid params") {
  DomainParams p;
  p.and_branch = 1;
  CHECK_THROWS_AS(validate_params(p), std::invalid_argument);
  p = DomainParams{};
  p.ordered_fraction = 1.5;
  CHECK_THROWS_AS(validate_params(p), std::invalid_argument);
  p = DomainParams{};
  p.goals = 0;
  CHECK_THROWS_AS(generate_domain(p), std::invalid_argument);
  p = DomainParams{};
  p.depth = 0;
  CHECK_THROWS_AS(validate_params(p), std::invalid_argument);
}

TEST_CASE("library stats") {
  SUBCASE("running example") {
    const auto s = library_stats(fixtures::library(fixtures::kRunningExample));
    CHECK(s.complex_actions == 4);
    CHECK(s.rules == 4);
    CHECK(s.plan_leaf_count == std::optional<std::size_t>{3});
  }
  SUBCASE("single rule") {
    const auto s = library_stats(parse_library("terminals: a\nnonterminals: G\ngoals: G\nrule: G -> a | | 1\n"));
    CHECK(s.complex_actions == 1);
    CHECK(s.rules == 1);
    CHECK(s.plan_leaf_count == std::optional<std::size_t>{1});
  }
  SUBCASE("irregular") {
    const auto s = library_stats(fixtures::library(fixtures::kSmallGrammars[6]));
    CHECK_FALSE(s.plan_leaf_count);
  }
}

TEST_CASE("simulation on the running example") {
  const PlanLibrary lib = fixtures::library(fixtures::kRunningExample);
  std::set<std::string> seen;
  for (std::uint64_t seed = 0; seed < 200; ++seed) seen.insert(joined(lib, simulate_agent(lib, seed)));
  CHECK(seen == std::set<std::string>{"a c b", "a b c", "c a b"});
  CHECK(simulate_agent(lib, 42) == simulate_agent(lib, 42));
}

TEST_CASE("fully ordered library has one sequence") {
  const PlanLibrary lib = parse_library(R"(terminals: a b c
nonterminals: G
goals: G
rule: G -> a b c | (1,2),(2,3) | 1
)");
  for (std::uint64_t seed = 0; seed < 20; ++seed) CHECK(joined(lib, simulate_agent(lib, seed)) == "a b c");
}

TEST_CASE("simulated sequences are recognized by both engines") {
  for (double f : {0.0, 0.5, 1.0}) {
    DomainParams p;
    p.ordered_fraction = f;
    p.terminals = 20;
    const PlanLibrary lib = generate_domain(p);
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      const auto seq = simulate_agent(lib, seed);
      CHECK(seq.size() == 9);
      const auto prefix = std::vector<SymbolId>(seq.begin(), seq.begin() + 6);
      CHECK_NOTHROW(phatt_recognize(lib, prefix, PhattConfig{}));
      CHECK_NOTHROW(slim_recognize(lib, seq, SlimConfig{}));
    }
  }
}

TEST_CASE("simulated sequences respect the sampled plan's order") {
  // Each AND rule is totally ordered with distinct terminals per goal, so a
  // valid sequence lists each AND node's leaves left to right.
  DomainParams p;
  p.goals = 1;
  p.terminals = 1000;
  p.seed = 3;
  const PlanLibrary lib = generate_domain(p);
  const SymbolId goal = lib.goals()[0];
  const ProductionRule& top = lib.rule(lib.rules_for(goal)[0]);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto seq = simulate_agent(lib, seed);
    REQUIRE(seq.size() == 9);
    // The three children of the goal complete one after another.
    for (std::size_t block = 0; block < 3; ++block) {
      const SymbolId or_node = top.rhs[block];
      std::set<SymbolId> allowed;
      for (RuleId r : lib.rules_for(or_node)) {
        const SymbolId and_node = lib.rule(r).rhs[0];
        for (SymbolId t : lib.rule(lib.rules_for(and_node)[0]).rhs) allowed.insert(t);
      }
      for (std::size_t i = 0; i < 3; ++i) CHECK(allowed.count(seq[block * 3 + i]) == 1);
    }
  }
}
