#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "planrec/grammar.hpp"

namespace planrec {

/// Seeded source of randomness for generation and simulation. The engine is
/// std::mt19937_64, whose output sequence is fixed by the C++ standard; the
/// range reductions below are written out so that results do not depend on
/// the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  // Uniform in [0, n) by rejection sampling. n must be positive.
  std::uint64_t below(std::uint64_t n);
  // Uniform in [0, 1) with 53 random bits.
  double unit();

 private:
  std::mt19937_64 engine_;
};

struct DomainParams {
  std::size_t goals = 5;
  std::size_t and_branch = 3;
  std::size_t or_branch = 2;
  // Levels below and including each goal: AND at odd levels, OR at even.
  std::size_t depth = 3;
  std::size_t terminals = 100;
  double ordered_fraction = 1.0;
  std::uint64_t seed = 7;
  // Reuse an existing nonterminal of the same level instead of creating one,
  // with probability share_probability.
  bool share_subtrees = false;
  double share_probability = 0.5;
};

// Throws std::invalid_argument naming the offending field.
void validate_params(const DomainParams& params);

/// AND/OR library: goals are AND nodes with one rule of and_branch children;
/// OR nodes have or_branch single-child rules of equal probability; the
/// children of the last level are terminals drawn with replacement from the
/// pool t000, t001, ...
PlanLibrary generate_domain(const DomainParams& params);

/// Samples one plan for a uniformly chosen goal, taking OR choices by rule
/// probability, and emits its terminals by repeatedly realizing a uniformly
/// chosen enabled leaf.
std::vector<SymbolId> simulate_agent(const PlanLibrary& lib, std::uint64_t seed);

struct DomainStats {
  std::size_t complex_actions = 0;
  std::size_t rules = 0;
  // Terminal leaves of a complete goal plan; absent unless every complete
  // plan of every goal has the same count.
  std::optional<std::size_t> plan_leaf_count;
};

DomainStats library_stats(const PlanLibrary& lib);

}  // namespace planrec
