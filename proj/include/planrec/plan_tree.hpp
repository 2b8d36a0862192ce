#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "planrec/grammar.hpp"

namespace planrec {

enum class NodeState : std::uint8_t { Open, Realized, Expanded };

class PlanNode;
using NodePtr = std::shared_ptr<const PlanNode>;

/// One node of a (possibly incomplete) derivation tree.
///
/// Nodes are immutable and freely shared between plans and hypotheses; every
/// edit produces new nodes along the edited path only. Summary fields are
/// computed once at construction:
///   - complete:   no open node anywhere below (and including) this node
///   - min_ts / max_ts: extreme realized timestamps below, 0 if none
///   - consistent: every Expanded node below honors its rule's ordering
///     constraints (see check_temporal_consistency)
///   - weight:     product of the rule probabilities of Expanded nodes below
class PlanNode {
 public:
  static NodePtr open(SymbolId symbol);
  static NodePtr realized(SymbolId symbol, Timestamp ts);
  // Throws std::invalid_argument if `children` do not match `rule.rhs`.
  static NodePtr expanded(const ProductionRule& rule, std::vector<NodePtr> children);

  SymbolId symbol() const { return symbol_; }
  NodeState state() const { return state_; }
  bool is_open() const { return state_ == NodeState::Open; }
  bool is_realized() const { return state_ == NodeState::Realized; }
  bool is_expanded() const { return state_ == NodeState::Expanded; }
  // Realized leaves only.
  Timestamp timestamp() const { return min_ts_; }
  // Expanded nodes only.
  RuleId rule() const { return rule_; }
  std::span<const NodePtr> children() const { return children_; }
  const PlanNode& child(std::size_t i) const { return *children_[i]; }

  bool complete() const { return complete_; }
  bool has_content() const { return min_ts_ != 0; }
  Timestamp min_ts() const { return min_ts_; }
  Timestamp max_ts() const { return max_ts_; }
  bool consistent() const { return consistent_; }
  double weight() const { return weight_; }
  std::uint32_t open_count() const { return open_count_; }
  std::uint32_t realized_count() const { return realized_count_; }
  std::uint32_t depth() const { return depth_; }
  std::uint64_t hash() const { return hash_; }

  PlanNode(const PlanNode&) = delete;
  PlanNode& operator=(const PlanNode&) = delete;

 private:
  PlanNode() = default;

  SymbolId symbol_;
  NodeState state_ = NodeState::Open;
  RuleId rule_;
  std::vector<NodePtr> children_;
  bool complete_ = false;
  bool consistent_ = true;
  Timestamp min_ts_ = 0;
  Timestamp max_ts_ = 0;
  double weight_ = 1.0;
  std::uint32_t open_count_ = 0;
  std::uint32_t realized_count_ = 0;
  std::uint32_t depth_ = 0;
  std::uint64_t hash_ = 0;
};

bool structurally_equal(const PlanNode& a, const PlanNode& b);

// One shared open leaf per symbol, so that building many trees over the same
// library does not allocate a fresh leaf for every open position.
class OpenNodes {
 public:
  explicit OpenNodes(const PlanLibrary& lib);
  const NodePtr& operator[](SymbolId id) const { return nodes_[id.value]; }

 private:
  std::vector<NodePtr> nodes_;
};

/// Child indices from the root down to a node.
using NodePath = std::vector<std::uint8_t>;

struct Plan {
  NodePtr root;

  const PlanNode& operator*() const { return *root; }
  const PlanNode* operator->() const { return root.get(); }
  bool operator==(const Plan& other) const { return structurally_equal(*root, *other.root); }
};

// Both throw std::out_of_range for paths leaving the tree.
const PlanNode& node_at(const Plan& plan, const NodePath& path);
const NodePtr& subtree_at(const Plan& plan, const NodePath& path);

// Copies the ancestors of `path` and installs `sub` there. No validity checks
// beyond child/rule shape; callers test the result's consistent() flag.
Plan replace_at(const PlanLibrary& lib, const Plan& plan, const NodePath& path, NodePtr sub);

// All open-frontier nodes, depth-first, left to right.
std::vector<NodePath> open_frontier(const Plan& plan);

/// Open-frontier nodes that may receive the next observation: every
/// ordering predecessor, at every ancestor rule, of the branch leading to the
/// node is complete.
std::vector<NodePath> enabled_frontier(const PlanLibrary& lib, const Plan& plan);

enum class FuseError { SymbolMismatch, NotOpenFrontier, TemporalViolation };

std::string_view to_string(FuseError error);

struct FuseResult {
  std::optional<Plan> plan;
  FuseError error = FuseError::SymbolMismatch;  // meaningful only when !plan

  explicit operator bool() const { return plan.has_value(); }
};

/// Replaces the open node at `path` with `sub`. Rejections are ordinary
/// outcomes ("cannot combine here"), not errors.
FuseResult fuse(const PlanLibrary& lib, const Plan& plan, const NodePath& path, NodePtr sub);

/// Recomputes temporal consistency from scratch, without using cached
/// fields: for every Expanded node and every (i, j) in its rule's constraint
/// closure, if child j has a realized leaf then child i is complete and all
/// of child i's timestamps precede all of child j's.
bool check_temporal_consistency(const PlanLibrary& lib, const Plan& plan);

/// A set of plans jointly explaining a prefix of the observations. Plans are
/// kept sorted by min_ts; each plan holds at least one realized leaf, so
/// this order is total.
struct Hypothesis {
  std::vector<Plan> plans;
  double weight = 1.0;

  std::uint64_t hash() const;
  bool same_structure(const Hypothesis& other) const;
  std::uint32_t open_count() const;
  std::uint32_t max_depth() const;
  std::uint32_t observation_count() const;
};

// Returns h with plans re-sorted by min_ts.
Hypothesis normalized(Hypothesis h);

// `name?`, `name@t`, or `name(child child ...)`.
std::string serialize_plan(const PlanLibrary& lib, const PlanNode& node);
inline std::string serialize_plan(const PlanLibrary& lib, const Plan& plan) {
  return serialize_plan(lib, *plan.root);
}

// Plans in (min_ts, text) order joined by ';'.
std::string canonical_form(const PlanLibrary& lib, const Hypothesis& h);

// Inverse of serialize_plan. Expanded nodes resolve to the unique rule with
// the given head and child symbols. Throws LibraryError(Syntax) on bad input.
Plan parse_plan(const PlanLibrary& lib, std::string_view text);
// Inverse of canonical_form (weight recomputed as the bare rule product).
Hypothesis parse_hypothesis(const PlanLibrary& lib, std::string_view text);

// Product of rule probabilities over every Expanded node of every plan.
double rule_product(const Hypothesis& h);

/// Insertion-ordered set of hypotheses keyed by structure. Re-adding an
/// existing structure is a no-op; the duplicate's weight must agree.
class HypothesisCollector {
 public:
  bool insert(Hypothesis h);
  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }
  const std::vector<Hypothesis>& items() const { return items_; }
  std::vector<Hypothesis> release() { return std::move(items_); }

 private:
  std::vector<Hypothesis> items_;
  std::unordered_multimap<std::uint64_t, std::uint32_t> index_;
};

}  // namespace planrec
