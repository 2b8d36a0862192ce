#pragma once

#include <cstddef>
#include <cstdint>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "planrec/grammar.hpp"
#include "planrec/phatt.hpp"
#include "planrec/plan_tree.hpp"
#include "planrec/recognition.hpp"

namespace planrec {

/// Depth-1 leftmost tree: one rule, every child a leaf, one designated
/// attachment child. For a terminal symbol the attachment is the realized
/// observation; for a nonterminal it is an open leaf marking where an
/// existing plan may be grafted.
struct Fragment {
  Plan plan;
  std::uint8_t attachment = 0;
  Timestamp creation_ts = 0;
};

/// Terminal `sym`: one fragment per rule occurrence whose position has no
/// ordering predecessor. Nonterminal `sym`: one per occurrence, with
/// ordering checked later when content is grafted. With `prune`, fragments
/// whose root cannot be derived from a goal are dropped.
std::vector<Fragment> create_fragments(const PlanLibrary& lib, SymbolId sym, Timestamp ts,
                                       bool prune = true);

// Local hypotheses carry no goal priors: weight is the bare rule product.
using LocalHypothesis = Hypothesis;

/// Options shared by the bottom-up and top-down phases.
struct SlimConfig {
  PhattConfig phatt;
  // How many of the most probable local hypotheses to compile into
  // goal-rooted ones. nullopt compiles all of them.
  std::optional<std::size_t> k = 0;
  bool prune = true;
  bool dedup = true;
};

// The bottom-up combinators. Each appends to `out` and counts one attempt
// per validity check.
void combine_directly(const PlanLibrary& lib, const LocalHypothesis& h, SymbolId obs, Timestamp ts,
                      HypothesisCollector& out, CombinationCounter* counter = nullptr);
void combine_as_child(const PlanLibrary& lib, const LocalHypothesis& h, const Fragment& f,
                      HypothesisCollector& out, CombinationCounter* counter = nullptr);
void combine_as_sibling(const PlanLibrary& lib, const LocalHypothesis& h, const Fragment& f,
                        HypothesisCollector& out, CombinationCounter* counter = nullptr,
                        bool prune = true);
LocalHypothesis combine_independently(const LocalHypothesis& h, const Fragment& f,
                                      CombinationCounter* counter = nullptr);

/// True if some occurrence of terminal `obs` sits at a position whose
/// ordering predecessors include a nonterminal. No fragment exists there, and
/// the predecessors' content may still be spread over several plans.
bool needs_deferral(const PlanLibrary& lib, SymbolId obs, bool prune = true);
// Appends the bare realized observation as a plan of its own, to be placed
// by top-down compilation once its predecessors are assembled.
LocalHypothesis defer_observation(const LocalHypothesis& h, SymbolId obs, Timestamp ts,
                                  CombinationCounter* counter = nullptr);

// Convenience forms returning the produced hypotheses.
std::vector<LocalHypothesis> combine_directly(const PlanLibrary& lib, const LocalHypothesis& h,
                                              SymbolId obs, Timestamp ts);
std::vector<LocalHypothesis> combine_as_child(const PlanLibrary& lib, const LocalHypothesis& h,
                                              const Fragment& f);
std::vector<LocalHypothesis> combine_as_sibling(const PlanLibrary& lib, const LocalHypothesis& h,
                                                const Fragment& f, bool prune = true);

/// One bottom-up step: direct realization, then for every fragment of the
/// observation the child, sibling and independent combinations, plus
/// defer_observation when needs_deferral holds. Duplicates are merged.
/// Throws RecognitionFailure(ts) when nothing survives.
HypothesisSet slim_bottom_up_step(const PlanLibrary& lib, const HypothesisSet& prev, SymbolId obs,
                                  const SlimConfig& cfg, CombinationCounter* counter = nullptr);

/// Highest weight first; ties broken by ascending canonical form.
std::vector<Hypothesis> k_best(const PlanLibrary& lib, std::span<const Hypothesis> hs,
                               std::optional<std::size_t> k);

/// Goal-rooted hypotheses already emitted by top-down compilation, keyed by
/// structure. Canonical form is injective on structure, so membership here
/// is membership of the canonical form. Safe to share between threads.
class DedupStore {
 public:
  // True if `h` was not yet present. `h` must be normalized.
  bool insert(const Hypothesis& h);
  bool contains(const Hypothesis& h) const;
  std::size_t size() const;

 private:
  mutable std::mutex mutex_;
  std::unordered_multimap<std::uint64_t, Hypothesis> seen_;
};

/// Compiles one local hypothesis into goal-rooted hypotheses. Plans are fed
/// in creation order (ascending min_ts), each one either
///   - starting a new goal plan through a leftmost tree ending in its root,
///   - grafted into an open node through a leftmost tree, or
///   - unified with an existing expanded node of the same rule.
/// Results already in `dedup` are dropped; new ones are recorded there.
std::vector<Hypothesis> top_down(const PlanLibrary& lib, const LocalHypothesis& local,
                                 const SlimConfig& cfg, DedupStore* dedup = nullptr,
                                 CombinationCounter* counter = nullptr);

struct SlimRun {
  HypothesisSet local;
  std::vector<Hypothesis> goal_rooted;
  std::vector<StepMetrics> metrics;     // bottom-up, one per observation
  std::uint64_t topdown_us = 0;
  std::uint64_t topdown_combinations = 0;
};

class SlimRecognizer {
 public:
  SlimRecognizer(const PlanLibrary& lib, SlimConfig cfg);

  HypothesisSet step(const HypothesisSet& prev, SymbolId obs, CombinationCounter* counter = nullptr);
  // Top-down compilation of k_best(local, k) with a shared dedup store.
  std::vector<Hypothesis> compile(const HypothesisSet& local, std::optional<std::size_t> k,
                                  CombinationCounter* counter = nullptr) const;

  const SlimConfig& config() const { return cfg_; }

 private:
  const PlanLibrary& lib_;
  SlimConfig cfg_;
};

/// Bottom-up over the whole sequence, then top-down for the k best.
SlimRun slim_recognize(const PlanLibrary& lib, std::span<const SymbolId> observations,
                       const SlimConfig& cfg);

}  // namespace planrec
