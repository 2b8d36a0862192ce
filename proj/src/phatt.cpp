#include "planrec/phatt.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>
#include <string>

namespace planrec {

// ---------------------------------------------------------------------------
// Configuration

void validate_config(const PlanLibrary& lib, const PhattConfig& cfg) {
  if (cfg.goal_prior.empty()) return;
  double sum = 0.0;
  for (const auto& [goal, p] : cfg.goal_prior) {
    if (goal.value >= lib.symbol_count() || !lib.is_goal(goal)) {
      throw std::invalid_argument("goal prior given for a non-goal symbol");
    }
    if (!(p > 0.0)) throw std::invalid_argument("goal priors must be positive");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("goal priors must sum to 1");
}

std::size_t effective_max_depth(const PlanLibrary& lib, const PhattConfig& cfg) {
  if (cfg.max_depth != 0) return cfg.max_depth;
  return std::max<std::size_t>(1, 2 * lib.longest_derivation_depth());
}

double goal_prior(const PlanLibrary& lib, const PhattConfig& cfg, SymbolId goal) {
  if (cfg.goal_prior.empty()) return 1.0 / static_cast<double>(lib.goals().size());
  auto it = cfg.goal_prior.find(goal);
  return it == cfg.goal_prior.end() ? 0.0 : it->second;
}

// ---------------------------------------------------------------------------
// Leftmost trees

LeftmostTreeIndex::LeftmostTreeIndex(const PlanLibrary& lib, std::size_t max_depth)
    : lib_(lib), max_depth_(max_depth), open_(lib) {
  if (max_depth_ > 255) throw std::invalid_argument("max depth above 255");
}

const std::vector<ChainShape>& LeftmostTreeIndex::chains(SymbolId from, SymbolId to) {
  return chains_within(from, to, max_depth_);
}

const std::vector<ChainShape>& LeftmostTreeIndex::chains_within(SymbolId from, SymbolId to,
                                                                std::size_t budget) {
  const std::uint64_t key = (std::uint64_t{from.value} << 32) | (std::uint64_t{to.value} << 8) | budget;
  if (auto it = memo_.find(key); it != memo_.end()) return it->second;

  std::vector<ChainShape> out;
  if (from == to) out.push_back(ChainShape{from, {}, 1.0});
  if (budget > 0 && !lib_.is_terminal(from)) {
    for (RuleId r : lib_.rules_for(from)) {
      const ProductionRule& rule = lib_.rule(r);
      for (std::size_t pos = 0; pos < rule.rhs.size(); ++pos) {
        if (rule.has_predecessor(pos)) continue;
        // Element references in unordered_map survive rehashing.
        const auto& below = chains_within(rule.rhs[pos], to, budget - 1);
        for (const auto& sub : below) {
          ChainShape shape{from, {}, rule.prob * sub.prob};
          shape.steps.reserve(sub.steps.size() + 1);
          shape.steps.push_back({r, static_cast<std::uint8_t>(pos)});
          shape.steps.insert(shape.steps.end(), sub.steps.begin(), sub.steps.end());
          out.push_back(std::move(shape));
        }
      }
    }
  }
  return memo_.emplace(key, std::move(out)).first->second;
}

NodePtr LeftmostTreeIndex::instantiate(const ChainShape& shape, NodePtr leaf) const {
  NodePtr node = std::move(leaf);
  for (auto it = shape.steps.rbegin(); it != shape.steps.rend(); ++it) {
    const ProductionRule& rule = lib_.rule(it->rule);
    std::vector<NodePtr> children;
    children.reserve(rule.rhs.size());
    for (std::size_t k = 0; k < rule.rhs.size(); ++k) {
      children.push_back(k == it->position ? node : open_[rule.rhs[k]]);
    }
    node = PlanNode::expanded(rule, std::move(children));
  }
  return node;
}

std::vector<Plan> leftmost_trees(const PlanLibrary& lib, NodePtr leaf, std::span<const SymbolId> roots,
                                 std::size_t max_depth) {
  LeftmostTreeIndex index(lib, max_depth);
  std::vector<Plan> out;
  for (SymbolId root : roots) {
    for (const auto& shape : index.chains(root, leaf->symbol())) {
      out.push_back(Plan{index.instantiate(shape, leaf)});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Incremental step

PhattRecognizer::PhattRecognizer(const PlanLibrary& lib, PhattConfig cfg)
    : lib_(lib), cfg_(std::move(cfg)), index_(lib, effective_max_depth(lib, cfg_)) {
  validate_config(lib_, cfg_);
}

HypothesisSet PhattRecognizer::step(const HypothesisSet& prev, SymbolId obs,
                                    CombinationCounter* counter) {
  if (obs.value >= lib_.symbol_count() || !lib_.is_terminal(obs)) {
    throw std::invalid_argument("observation must be a terminal symbol");
  }
  CombinationCounter scratch;
  CombinationCounter& count = counter ? *counter : scratch;
  const Timestamp ts = static_cast<Timestamp>(prev.step + 1);
  NodePtr leaf = PlanNode::realized(obs, ts);

  std::vector<NodePtr> new_plans;
  for (SymbolId goal : lib_.goals()) {
    if (goal_prior(lib_, cfg_, goal) <= 0.0) continue;
    for (const auto& shape : index_.chains(goal, obs)) {
      new_plans.push_back(index_.instantiate(shape, leaf));
    }
  }
  std::unordered_map<SymbolId, std::vector<NodePtr>> extensions;
  auto trees_from = [&](SymbolId sym) -> const std::vector<NodePtr>& {
    auto it = extensions.find(sym);
    if (it != extensions.end()) return it->second;
    std::vector<NodePtr> trees;
    for (const auto& shape : index_.chains(sym, obs)) {
      trees.push_back(index_.instantiate(shape, leaf));
    }
    return extensions.emplace(sym, std::move(trees)).first->second;
  };

  HypothesisCollector out;
  for (const Hypothesis& h : prev.hypotheses) {
    // Mode 1: the observation starts a new goal plan. Its min_ts is the
    // newest timestamp, so appending keeps plans sorted.
    for (const auto& tree : new_plans) {
      count.attempt();
      Hypothesis next = h;
      next.plans.push_back(Plan{tree});
      next.weight = goal_rooted_weight(lib_, cfg_, next);
      out.insert(std::move(next));
    }
    // Mode 2: a leftmost tree rooted at an enabled open node.
    for (std::size_t pi = 0; pi < h.plans.size(); ++pi) {
      const Plan& plan = h.plans[pi];
      for (const NodePath& path : enabled_frontier(lib_, plan)) {
        const PlanNode& open = node_at(plan, path);
        for (const auto& tree : trees_from(open.symbol())) {
          count.attempt();
          Plan extended = replace_at(lib_, plan, path, tree);
          if (!extended->consistent()) continue;
          Hypothesis next = h;
          next.plans[pi] = std::move(extended);
          next.weight = goal_rooted_weight(lib_, cfg_, next);
          out.insert(std::move(next));
        }
      }
    }
  }
  if (out.empty()) throw RecognitionFailure(ts);
  return HypothesisSet{ts, out.release()};
}

HypothesisSet phatt_step(const PlanLibrary& lib, const HypothesisSet& prev, SymbolId obs,
                         const PhattConfig& cfg, CombinationCounter* counter) {
  PhattRecognizer recognizer(lib, cfg);
  return recognizer.step(prev, obs, counter);
}

PhattRun phatt_recognize(const PlanLibrary& lib, std::span<const SymbolId> observations,
                         const PhattConfig& cfg) {
  PhattRecognizer recognizer(lib, cfg);
  PhattRun run{HypothesisSet::initial(), {}};
  for (SymbolId obs : observations) {
    CombinationCounter counter;
    auto start = std::chrono::steady_clock::now();
    HypothesisSet next = recognizer.step(run.final, obs, &counter);
    auto elapsed = std::chrono::duration_cast<std::chrono::microseconds>(
        std::chrono::steady_clock::now() - start);
    run.metrics.push_back(measure(next.step, next.hypotheses, counter.count(),
                                  static_cast<std::uint64_t>(elapsed.count())));
    run.final = std::move(next);
  }
  return run;
}

namespace {
double fresh_rule_product(const PlanLibrary& lib, const PlanNode& node) {
  if (!node.is_expanded()) return 1.0;
  double w = lib.rule(node.rule()).prob;
  for (const auto& c : node.children()) w *= fresh_rule_product(lib, *c);
  return w;
}
}  // namespace

double goal_rooted_weight(const PlanLibrary& lib, const PhattConfig& cfg, const Hypothesis& h) {
  double w = 1.0;
  for (const auto& p : h.plans) {
    w *= p->weight();
    if (lib.is_goal(p->symbol())) w *= goal_prior(lib, cfg, p->symbol());
  }
  return w;
}

double hypothesis_probability(const Hypothesis& h, const PlanLibrary& lib, const PhattConfig& cfg) {
  double w = 1.0;
  for (const auto& p : h.plans) {
    w *= fresh_rule_product(lib, *p.root);
    if (lib.is_goal(p->symbol())) w *= goal_prior(lib, cfg, p->symbol());
  }
  return w;
}

}  // namespace planrec
