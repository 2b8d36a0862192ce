#pragma once

#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "planrec/grammar.hpp"
#include "planrec/harness.hpp"
#include "planrec/plan_tree.hpp"

namespace fixtures {

inline constexpr std::string_view kRunningExample = R"(terminals: a b c
nonterminals: X A B C
goals: X
rule: A -> a | | 1.0
rule: B -> b | | 1.0
rule: C -> c | | 1.0
rule: X -> A B C | (1,2) | 1.0
)";

// Small grammars for exhaustive comparisons. Each has at most six rules.
inline const std::vector<std::string_view> kSmallGrammars = {
    kRunningExample,
    // Unordered rule with an ambiguous terminal.
    R"(terminals: a b
nonterminals: X A B
goals: X
rule: X -> A B | | 1.0
rule: A -> a | | 0.5
rule: A -> b | | 0.5
rule: B -> b | | 1.0
)",
    // Two-level hierarchy with ordering at both levels.
    R"(terminals: a b c
nonterminals: G P Q B
goals: G
rule: G -> P Q | (1,2) | 1.0
rule: P -> a B | | 1.0
rule: B -> b | | 1.0
rule: Q -> c | | 0.5
rule: Q -> B c | (1,2) | 0.5
)",
    // Two goals over shared parts.
    R"(terminals: a b
nonterminals: X Y A B
goals: X Y
rule: X -> A B | (1,2) | 1.0
rule: Y -> B A | | 1.0
rule: A -> a | | 1.0
rule: B -> b | | 1.0
)",
    // A terminal whose ordering predecessor is a nonterminal subtree.
    R"(terminals: c d b
nonterminals: P A C
goals: P
rule: P -> A b | (1,2) | 1.0
rule: A -> C | | 1.0
rule: C -> c d | | 1.0
)",
    // A later observation sits above earlier ones.
    R"(terminals: a b c
nonterminals: X Y B C
goals: X
rule: X -> a Y | | 1.0
rule: Y -> B C | | 1.0
rule: B -> b | | 1.0
rule: C -> c | | 1.0
)",
    // Terminal siblings under one rule, partially ordered.
    R"(terminals: a b c
nonterminals: X Z
goals: X
rule: X -> a b Z | (1,2) | 0.75
rule: X -> b Z | | 0.25
rule: Z -> c | | 0.5
rule: Z -> a c | (2,1) | 0.5
)",
};

inline planrec::PlanLibrary library(std::string_view text) { return planrec::parse_library(text); }

inline std::vector<planrec::SymbolId> seq(const planrec::PlanLibrary& lib, std::string_view text) {
  return planrec::parse_observations(lib, text);
}

inline std::set<std::string> canonical_set(const planrec::PlanLibrary& lib,
                                           const std::vector<planrec::Hypothesis>& hs) {
  std::set<std::string> out;
  for (const auto& h : hs) out.insert(planrec::canonical_form(lib, h));
  return out;
}

}  // namespace fixtures
