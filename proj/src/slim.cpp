#include "planrec/slim.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>
#include <stdexcept>

namespace planrec {

namespace {

bool admissible_root(const PlanLibrary& lib, SymbolId sym, bool prune) {
  return !prune || lib.reachable(sym);
}

void require_terminal(const PlanLibrary& lib, SymbolId obs) {
  if (obs.value >= lib.symbol_count() || !lib.is_terminal(obs)) {
    throw std::invalid_argument("observation must be a terminal symbol");
  }
}

LocalHypothesis with_plan_replaced(const LocalHypothesis& h, std::size_t index, Plan plan) {
  LocalHypothesis next;
  next.plans = h.plans;
  next.plans[index] = std::move(plan);
  next = normalized(std::move(next));
  next.weight = rule_product(next);
  return next;
}

LocalHypothesis with_plan_added(const LocalHypothesis& h, Plan plan) {
  LocalHypothesis next;
  next.plans = h.plans;
  next.plans.push_back(std::move(plan));
  next = normalized(std::move(next));
  next.weight = rule_product(next);
  return next;
}

void tick(CombinationCounter* counter) {
  if (counter) counter->attempt();
}

}  // namespace

// ---------------------------------------------------------------------------
// Fragments

std::vector<Fragment> create_fragments(const PlanLibrary& lib, SymbolId sym, Timestamp ts, bool prune) {
  const bool terminal = lib.is_terminal(sym);
  if (terminal && ts == 0) throw std::invalid_argument("terminal fragments need a timestamp");
  NodePtr attachment = terminal ? PlanNode::realized(sym, ts) : PlanNode::open(sym);
  std::vector<Fragment> out;
  for (const RuleOccurrence& occ : lib.rules_containing(sym)) {
    const ProductionRule& rule = lib.rule(occ.rule);
    if (terminal && rule.has_predecessor(occ.position)) continue;
    if (!admissible_root(lib, rule.lhs, prune)) continue;
    std::vector<NodePtr> children;
    children.reserve(rule.rhs.size());
    for (std::size_t k = 0; k < rule.rhs.size(); ++k) {
      children.push_back(k == occ.position ? attachment : PlanNode::open(rule.rhs[k]));
    }
    out.push_back(Fragment{Plan{PlanNode::expanded(rule, std::move(children))}, occ.position, ts});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Combinators

void combine_directly(const PlanLibrary& lib, const LocalHypothesis& h, SymbolId obs, Timestamp ts,
                      HypothesisCollector& out, CombinationCounter* counter) {
  NodePtr leaf;
  for (std::size_t pi = 0; pi < h.plans.size(); ++pi) {
    const Plan& plan = h.plans[pi];
    for (const NodePath& path : enabled_frontier(lib, plan)) {
      if (node_at(plan, path).symbol() != obs) continue;
      tick(counter);
      if (!leaf) leaf = PlanNode::realized(obs, ts);
      FuseResult fused = fuse(lib, plan, path, leaf);
      if (fused) out.insert(with_plan_replaced(h, pi, std::move(*fused.plan)));
    }
  }
}

void combine_as_child(const PlanLibrary& lib, const LocalHypothesis& h, const Fragment& f,
                      HypothesisCollector& out, CombinationCounter* counter) {
  const SymbolId root = f.plan->symbol();
  for (std::size_t pi = 0; pi < h.plans.size(); ++pi) {
    const Plan& plan = h.plans[pi];
    for (const NodePath& path : enabled_frontier(lib, plan)) {
      if (node_at(plan, path).symbol() != root) continue;
      tick(counter);
      FuseResult fused = fuse(lib, plan, path, f.plan.root);
      if (fused) out.insert(with_plan_replaced(h, pi, std::move(*fused.plan)));
    }
  }
}

void combine_as_sibling(const PlanLibrary& lib, const LocalHypothesis& h, const Fragment& f,
                        HypothesisCollector& out, CombinationCounter* counter, bool prune) {
  const NodePtr& newest = f.plan.root;
  const auto occurrences = lib.rules_containing(newest->symbol());
  for (std::size_t pi = 0; pi < h.plans.size(); ++pi) {
    const NodePtr& p = h.plans[pi].root;
    for (const RuleOccurrence& occ : occurrences) {
      const ProductionRule& rule = lib.rule(occ.rule);
      if (!admissible_root(lib, rule.lhs, prune)) continue;
      for (std::size_t i = 0; i < rule.rhs.size(); ++i) {
        if (i == occ.position || rule.rhs[i] != p->symbol()) continue;
        tick(counter);
        std::vector<NodePtr> children;
        children.reserve(rule.rhs.size());
        for (std::size_t k = 0; k < rule.rhs.size(); ++k) {
          if (k == i) {
            children.push_back(p);
          } else if (k == occ.position) {
            children.push_back(newest);
          } else {
            children.push_back(PlanNode::open(rule.rhs[k]));
          }
        }
        NodePtr parent = PlanNode::expanded(rule, std::move(children));
        if (!parent->consistent()) continue;
        out.insert(with_plan_replaced(h, pi, Plan{std::move(parent)}));
      }
    }
  }
}

LocalHypothesis combine_independently(const LocalHypothesis& h, const Fragment& f,
                                      CombinationCounter* counter) {
  tick(counter);
  return with_plan_added(h, f.plan);
}

bool needs_deferral(const PlanLibrary& lib, SymbolId obs, bool prune) {
  for (const RuleOccurrence& occ : lib.rules_containing(obs)) {
    const ProductionRule& rule = lib.rule(occ.rule);
    if (!admissible_root(lib, rule.lhs, prune)) continue;
    std::uint64_t preds = rule.predecessors[occ.position];
    while (preds != 0) {
      const int i = __builtin_ctzll(preds);
      preds &= preds - 1;
      if (!lib.is_terminal(rule.rhs[static_cast<std::size_t>(i)])) return true;
    }
  }
  return false;
}

LocalHypothesis defer_observation(const LocalHypothesis& h, SymbolId obs, Timestamp ts,
                                  CombinationCounter* counter) {
  tick(counter);
  return with_plan_added(h, Plan{PlanNode::realized(obs, ts)});
}

std::vector<LocalHypothesis> combine_directly(const PlanLibrary& lib, const LocalHypothesis& h,
                                              SymbolId obs, Timestamp ts) {
  HypothesisCollector out;
  combine_directly(lib, h, obs, ts, out);
  return out.release();
}

std::vector<LocalHypothesis> combine_as_child(const PlanLibrary& lib, const LocalHypothesis& h,
                                              const Fragment& f) {
  HypothesisCollector out;
  combine_as_child(lib, h, f, out);
  return out.release();
}

std::vector<LocalHypothesis> combine_as_sibling(const PlanLibrary& lib, const LocalHypothesis& h,
                                                const Fragment& f, bool prune) {
  HypothesisCollector out;
  combine_as_sibling(lib, h, f, out, nullptr, prune);
  return out.release();
}

// ---------------------------------------------------------------------------
// Bottom-up step

HypothesisSet slim_bottom_up_step(const PlanLibrary& lib, const HypothesisSet& prev, SymbolId obs,
                                  const SlimConfig& cfg, CombinationCounter* counter) {
  require_terminal(lib, obs);
  const Timestamp ts = static_cast<Timestamp>(prev.step + 1);
  const std::vector<Fragment> fragments = create_fragments(lib, obs, ts, cfg.prune);
  const bool defer = needs_deferral(lib, obs, cfg.prune);

  HypothesisCollector out;
  for (const LocalHypothesis& h : prev.hypotheses) {
    combine_directly(lib, h, obs, ts, out, counter);
    for (const Fragment& f : fragments) {
      combine_as_child(lib, h, f, out, counter);
      combine_as_sibling(lib, h, f, out, counter, cfg.prune);
      out.insert(combine_independently(h, f, counter));
    }
    if (defer) out.insert(defer_observation(h, obs, ts, counter));
  }
  if (out.empty()) throw RecognitionFailure(ts);
  return HypothesisSet{ts, out.release()};
}

std::vector<Hypothesis> k_best(const PlanLibrary& lib, std::span<const Hypothesis> hs,
                               std::optional<std::size_t> k) {
  const std::size_t take = std::min(hs.size(), k.value_or(hs.size()));
  if (take == 0) return {};
  std::vector<std::string> keys;
  keys.reserve(hs.size());
  for (const auto& h : hs) keys.push_back(canonical_form(lib, h));
  std::vector<std::size_t> order(hs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto better = [&](std::size_t a, std::size_t b) {
    if (hs[a].weight != hs[b].weight) return hs[a].weight > hs[b].weight;
    return keys[a] < keys[b];
  };
  if (take < hs.size()) {
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(),
                      better);
  } else {
    std::sort(order.begin(), order.end(), better);
  }
  std::vector<Hypothesis> out;
  out.reserve(take);
  for (std::size_t i = 0; i < take; ++i) out.push_back(hs[order[i]]);
  return out;
}

// ---------------------------------------------------------------------------
// Top-down compilation

bool DedupStore::insert(const Hypothesis& h) {
  const std::uint64_t key = h.hash();
  std::lock_guard lock(mutex_);
  auto [lo, hi] = seen_.equal_range(key);
  for (auto it = lo; it != hi; ++it) {
    if (it->second.same_structure(h)) return false;
  }
  seen_.emplace(key, h);
  return true;
}

bool DedupStore::contains(const Hypothesis& h) const {
  const std::uint64_t key = h.hash();
  std::lock_guard lock(mutex_);
  auto [lo, hi] = seen_.equal_range(key);
  for (auto it = lo; it != hi; ++it) {
    if (it->second.same_structure(h)) return true;
  }
  return false;
}

std::size_t DedupStore::size() const {
  std::lock_guard lock(mutex_);
  return seen_.size();
}

namespace {

// Overlays two partial trees for the same node. Open nodes give way to
// anything; expanded nodes must agree on the rule; two leaves never merge.
NodePtr unify(const PlanLibrary& lib, const NodePtr& a, const NodePtr& b) {
  if (a->is_open()) return b;
  if (b->is_open()) return a;
  if (!a->is_expanded() || !b->is_expanded() || a->rule() != b->rule()) return nullptr;
  const auto ac = a->children();
  const auto bc = b->children();
  std::vector<NodePtr> children;
  children.reserve(ac.size());
  for (std::size_t i = 0; i < ac.size(); ++i) {
    NodePtr merged = unify(lib, ac[i], bc[i]);
    if (!merged) return nullptr;
    children.push_back(std::move(merged));
  }
  return PlanNode::expanded(lib.rule(a->rule()), std::move(children));
}

void collect_paths(const PlanNode& node, NodePath& path, std::vector<NodePath>& open,
                   std::vector<NodePath>& expanded, RuleId rule, bool want_expanded) {
  if (node.is_open()) {
    open.push_back(path);
    return;
  }
  if (!node.is_expanded()) return;
  if (want_expanded && node.rule() == rule) expanded.push_back(path);
  const auto children = node.children();
  for (std::size_t i = 0; i < children.size(); ++i) {
    path.push_back(static_cast<std::uint8_t>(i));
    collect_paths(*children[i], path, open, expanded, rule, want_expanded);
    path.pop_back();
  }
}

std::vector<Hypothesis> compile_one(const PlanLibrary& lib, const LocalHypothesis& local,
                                    const SlimConfig& cfg, LeftmostTreeIndex& index,
                                    DedupStore* dedup, CombinationCounter* counter) {
  const LocalHypothesis ordered = normalized(local);
  std::vector<Hypothesis> states(1);

  for (const Plan& q : ordered.plans) {
    const SymbolId root = q->symbol();
    const bool mergeable = q->is_expanded();
    HypothesisCollector next;
    auto emit = [&](const Hypothesis& base, std::optional<std::size_t> replace, Plan plan) {
      Hypothesis h;
      h.plans = base.plans;
      if (replace) {
        h.plans[*replace] = std::move(plan);
      } else {
        h.plans.push_back(std::move(plan));
      }
      h = normalized(std::move(h));
      h.weight = goal_rooted_weight(lib, cfg.phatt, h);
      next.insert(std::move(h));
    };

    for (const Hypothesis& state : states) {
      // A new goal plan whose leftmost path ends at q's root.
      for (SymbolId goal : lib.goals()) {
        if (goal_prior(lib, cfg.phatt, goal) <= 0.0) continue;
        for (const ChainShape& shape : index.chains(goal, root)) {
          tick(counter);
          NodePtr tree = index.instantiate(shape, q.root);
          if (tree->consistent()) emit(state, std::nullopt, Plan{std::move(tree)});
        }
      }
      for (std::size_t pi = 0; pi < state.plans.size(); ++pi) {
        const Plan& plan = state.plans[pi];
        std::vector<NodePath> open;
        std::vector<NodePath> same_rule;
        NodePath scratch;
        collect_paths(*plan.root, scratch, open, same_rule, mergeable ? q->rule() : RuleId{},
                      mergeable);
        // Grafted below an open node through a leftmost path.
        for (const NodePath& path : open) {
          for (const ChainShape& shape : index.chains(node_at(plan, path).symbol(), root)) {
            tick(counter);
            Plan grafted = replace_at(lib, plan, path, index.instantiate(shape, q.root));
            if (grafted->consistent()) emit(state, pi, std::move(grafted));
          }
        }
        // Overlaid on a node an earlier plan already expanded with the same rule.
        for (const NodePath& path : same_rule) {
          tick(counter);
          NodePtr merged = unify(lib, subtree_at(plan, path), q.root);
          if (!merged) continue;
          Plan joined = replace_at(lib, plan, path, std::move(merged));
          if (joined->consistent()) emit(state, pi, std::move(joined));
        }
      }
    }
    states = next.release();
    if (states.empty()) break;
  }

  if (!dedup) return states;
  std::vector<Hypothesis> fresh;
  for (auto& h : states) {
    if (dedup->insert(h)) fresh.push_back(std::move(h));
  }
  return fresh;
}

}  // namespace

std::vector<Hypothesis> top_down(const PlanLibrary& lib, const LocalHypothesis& local,
                                 const SlimConfig& cfg, DedupStore* dedup,
                                 CombinationCounter* counter) {
  validate_config(lib, cfg.phatt);
  LeftmostTreeIndex index(lib, effective_max_depth(lib, cfg.phatt));
  return compile_one(lib, local, cfg, index, dedup, counter);
}

// ---------------------------------------------------------------------------
// Driver

SlimRecognizer::SlimRecognizer(const PlanLibrary& lib, SlimConfig cfg)
    : lib_(lib), cfg_(std::move(cfg)) {
  validate_config(lib_, cfg_.phatt);
}

HypothesisSet SlimRecognizer::step(const HypothesisSet& prev, SymbolId obs,
                                   CombinationCounter* counter) {
  return slim_bottom_up_step(lib_, prev, obs, cfg_, counter);
}

std::vector<Hypothesis> SlimRecognizer::compile(const HypothesisSet& local,
                                                std::optional<std::size_t> k,
                                                CombinationCounter* counter) const {
  const std::vector<Hypothesis> chosen = k_best(lib_, local.hypotheses, k);
  if (chosen.empty()) return {};
  LeftmostTreeIndex index(lib_, effective_max_depth(lib_, cfg_.phatt));
  DedupStore store;
  std::vector<Hypothesis> all;
  for (const auto& h : chosen) {
    auto compiled = compile_one(lib_, h, cfg_, index, cfg_.dedup ? &store : nullptr, counter);
    std::move(compiled.begin(), compiled.end(), std::back_inserter(all));
  }
  return all;
}

SlimRun slim_recognize(const PlanLibrary& lib, std::span<const SymbolId> observations,
                       const SlimConfig& cfg) {
  SlimRecognizer recognizer(lib, cfg);
  SlimRun run;
  run.local = HypothesisSet::initial();
  for (SymbolId obs : observations) {
    CombinationCounter counter;
    auto start = std::chrono::steady_clock::now();
    HypothesisSet next = recognizer.step(run.local, obs, &counter);
    auto elapsed = std::chrono::duration_cast<std::chrono::microseconds>(
        std::chrono::steady_clock::now() - start);
    run.metrics.push_back(measure(next.step, next.hypotheses, counter.count(),
                                  static_cast<std::uint64_t>(elapsed.count())));
    run.local = std::move(next);
  }
  if (observations.empty()) return run;

  CombinationCounter counter;
  auto start = std::chrono::steady_clock::now();
  run.goal_rooted = recognizer.compile(run.local, cfg.k, &counter);
  run.topdown_us = static_cast<std::uint64_t>(std::chrono::duration_cast<std::chrono::microseconds>(
                                                  std::chrono::steady_clock::now() - start)
                                                  .count());
  run.topdown_combinations = counter.count();
  return run;
}

}  // namespace planrec
