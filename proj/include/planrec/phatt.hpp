#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "planrec/grammar.hpp"
#include "planrec/plan_tree.hpp"
#include "planrec/recognition.hpp"

namespace planrec {

struct PhattConfig {
  // Bound on the depth of generated leftmost trees. 0 selects the library
  // default of twice the longest derivation depth.
  std::size_t max_depth = 0;
  // Prior per goal. Empty means uniform over the library's goals.
  std::unordered_map<SymbolId, double> goal_prior;
};

// Throws std::invalid_argument for priors on non-goals or not summing to 1.
void validate_config(const PlanLibrary& lib, const PhattConfig& cfg);
std::size_t effective_max_depth(const PlanLibrary& lib, const PhattConfig& cfg);
double goal_prior(const PlanLibrary& lib, const PhattConfig& cfg, SymbolId goal);

/// Path from a root symbol down to a designated leaf: at each step the rule
/// used and the RHS position the path continues through. Every position on
/// the path has no ordering predecessor in its rule.
struct ChainShape {
  struct Step {
    RuleId rule;
    std::uint8_t position;
  };
  SymbolId root;
  std::vector<Step> steps;  // empty: the root is the leaf itself
  double prob = 1.0;        // product of the step rules' probabilities
};

/// Memoized enumeration of leftmost-tree shapes between symbol pairs, bounded
/// by a maximum depth. Not thread-safe; use one index per thread.
class LeftmostTreeIndex {
 public:
  LeftmostTreeIndex(const PlanLibrary& lib, std::size_t max_depth);

  const std::vector<ChainShape>& chains(SymbolId from, SymbolId to);
  // Builds the tree for `shape`, installing `leaf` at the designated leaf.
  NodePtr instantiate(const ChainShape& shape, NodePtr leaf) const;

  const PlanLibrary& library() const { return lib_; }
  std::size_t max_depth() const { return max_depth_; }

 private:
  const std::vector<ChainShape>& chains_within(SymbolId from, SymbolId to, std::size_t budget);

  const PlanLibrary& lib_;
  std::size_t max_depth_;
  OpenNodes open_;
  std::unordered_map<std::uint64_t, std::vector<ChainShape>> memo_;
};

/// All leftmost trees of depth <= max_depth rooted at one of `roots` whose
/// designated leaf is `leaf` (a realized observation, or any subtree when
/// grafting whole plans).
std::vector<Plan> leftmost_trees(const PlanLibrary& lib, NodePtr leaf, std::span<const SymbolId> roots,
                                 std::size_t max_depth);

/// The PHATT baseline: every hypothesis is a set of goal-rooted plans, and
/// each observation either starts a new goal plan or extends an enabled
/// open-frontier node of an existing plan through a leftmost tree.
class PhattRecognizer {
 public:
  PhattRecognizer(const PlanLibrary& lib, PhattConfig cfg);

  // Throws std::invalid_argument if `obs` is not a terminal and
  // RecognitionFailure if no hypothesis survives.
  HypothesisSet step(const HypothesisSet& prev, SymbolId obs, CombinationCounter* counter = nullptr);

  const PhattConfig& config() const { return cfg_; }

 private:
  const PlanLibrary& lib_;
  PhattConfig cfg_;
  LeftmostTreeIndex index_;
};

HypothesisSet phatt_step(const PlanLibrary& lib, const HypothesisSet& prev, SymbolId obs,
                         const PhattConfig& cfg, CombinationCounter* counter = nullptr);

struct PhattRun {
  HypothesisSet final;
  std::vector<StepMetrics> metrics;
};

PhattRun phatt_recognize(const PlanLibrary& lib, std::span<const SymbolId> observations,
                         const PhattConfig& cfg);

/// Rule product of every plan times the prior of each goal root, multiplied
/// in plan order so equal structures always get bit-identical weights.
double goal_rooted_weight(const PlanLibrary& lib, const PhattConfig& cfg, const Hypothesis& h);

/// Product of rule probabilities over a fresh traversal of every plan, times
/// the prior of each plan's root when that root is a goal.
double hypothesis_probability(const Hypothesis& h, const PlanLibrary& lib, const PhattConfig& cfg);

}  // namespace planrec
