#include "planrec/domain.hpp"

#include <functional>
#include <stdexcept>
#include <string>

#include "planrec/plan_tree.hpp"

namespace planrec {

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("Rng::below(0)");
  // Values under `threshold` would bias the remainder towards small results.
  const std::uint64_t threshold = (0 - n) % n;
  for (;;) {
    const std::uint64_t x = engine_();
    if (x >= threshold) return x % n;
  }
}

double Rng::unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

void validate_params(const DomainParams& p) {
  if (p.goals < 1) throw std::invalid_argument("goals must be at least 1");
  if (p.and_branch < 2) throw std::invalid_argument("and-branch must be at least 2");
  if (p.and_branch > kMaxRhsLength) throw std::invalid_argument("and-branch too large");
  if (p.or_branch < 2) throw std::invalid_argument("or-branch must be at least 2");
  if (p.depth < 1) throw std::invalid_argument("depth must be at least 1");
  if (p.terminals < 1) throw std::invalid_argument("terminals must be at least 1");
  if (!(p.ordered_fraction >= 0.0 && p.ordered_fraction <= 1.0)) {
    throw std::invalid_argument("ordered-fraction must lie in [0, 1]");
  }
  if (!(p.share_probability >= 0.0 && p.share_probability <= 1.0)) {
    throw std::invalid_argument("share probability must lie in [0, 1]");
  }
  // An OR node directly above the terminal layer needs distinct children.
  if (p.depth % 2 == 0 && p.terminals < p.or_branch) {
    throw std::invalid_argument("terminal pool smaller than or-branch");
  }
}

namespace {

std::string terminal_name(std::size_t i, std::size_t pool) {
  std::size_t width = 3;
  for (std::size_t n = pool - 1; n >= 1000; n /= 10) ++width;
  std::string digits = std::to_string(i);
  return "t" + std::string(width > digits.size() ? width - digits.size() : 0, '0') + digits;
}

class DomainBuilder {
 public:
  explicit DomainBuilder(const DomainParams& p) : p_(p), rng_(p.seed), by_level_(p.depth + 2) {}

  PlanLibrary build() {
    for (std::size_t t = 0; t < p_.terminals; ++t) {
      terminals_.push_back(terminal_name(t, p_.terminals));
      builder_.add_terminal(terminals_.back());
    }
    for (std::size_t g = 0; g < p_.goals; ++g) {
      std::string name = "G" + std::to_string(g + 1);
      builder_.add_nonterminal(name);
      builder_.add_goal(name);
      expand(name, 1);
    }
    return builder_.build();
  }

 private:
  bool is_and(std::size_t level) const { return level % 2 == 1; }

  // A symbol for `level`; `avoid` lists siblings an OR node already uses.
  std::string child(std::size_t level, const std::vector<std::string>& avoid) {
    auto used = [&](const std::string& s) {
      for (const auto& a : avoid) {
        if (a == s) return true;
      }
      return false;
    };
    if (level > p_.depth) {
      for (;;) {
        std::string t = terminals_[rng_.below(terminals_.size())];
        if (!used(t)) return t;
      }
    }
    auto& pool = by_level_[level];
    if (p_.share_subtrees && !pool.empty() && rng_.unit() < p_.share_probability) {
      std::string s = pool[rng_.below(pool.size())];
      if (!used(s)) return s;
    }
    std::string name = "N" + std::to_string(++counter_);
    builder_.add_nonterminal(name);
    pool.push_back(name);
    expand(name, level);
    return name;
  }

  void expand(const std::string& name, std::size_t level) {
    if (is_and(level)) {
      std::vector<std::string> rhs;
      for (std::size_t i = 0; i < p_.and_branch; ++i) rhs.push_back(child(level + 1, {}));
      std::vector<std::pair<std::size_t, std::size_t>> order;
      if (rng_.unit() < p_.ordered_fraction) {
        for (std::size_t i = 1; i < rhs.size(); ++i) order.emplace_back(i, i + 1);
      }
      builder_.add_rule(name, rhs, order, 1.0);
    } else {
      std::vector<std::string> chosen;
      for (std::size_t i = 0; i < p_.or_branch; ++i) chosen.push_back(child(level + 1, chosen));
      const double prob = 1.0 / static_cast<double>(p_.or_branch);
      for (const auto& c : chosen) builder_.add_rule(name, {c}, {}, prob);
    }
  }

  const DomainParams& p_;
  Rng rng_;
  LibraryBuilder builder_;
  std::vector<std::string> terminals_;
  std::vector<std::vector<std::string>> by_level_;
  std::size_t counter_ = 0;
};

}  // namespace

PlanLibrary generate_domain(const DomainParams& params) {
  validate_params(params);
  return DomainBuilder(params).build();
}

std::vector<SymbolId> simulate_agent(const PlanLibrary& lib, std::uint64_t seed) {
  Rng rng(seed);
  const auto goals = lib.goals();
  const SymbolId goal = goals[rng.below(goals.size())];

  std::function<NodePtr(SymbolId, std::size_t)> sample = [&](SymbolId sym, std::size_t depth) -> NodePtr {
    if (lib.is_terminal(sym)) return PlanNode::open(sym);
    if (depth > 4096) throw std::runtime_error("sampled plan exceeds depth 4096");
    const auto rules = lib.rules_for(sym);
    if (rules.empty()) throw std::runtime_error("nonterminal without rules: " + lib.name(sym));
    RuleId chosen = rules.back();
    if (rules.size() > 1) {
      const double u = rng.unit();
      double cumulative = 0.0;
      for (RuleId r : rules) {
        cumulative += lib.rule(r).prob;
        if (u < cumulative) {
          chosen = r;
          break;
        }
      }
    }
    const ProductionRule& rule = lib.rule(chosen);
    std::vector<NodePtr> children;
    for (SymbolId c : rule.rhs) children.push_back(sample(c, depth + 1));
    return PlanNode::expanded(rule, std::move(children));
  };

  Plan plan{sample(goal, 0)};
  std::vector<SymbolId> out;
  for (Timestamp ts = 1;; ++ts) {
    const auto enabled = enabled_frontier(lib, plan);
    if (enabled.empty()) break;
    const NodePath& path = enabled[rng.below(enabled.size())];
    const SymbolId sym = node_at(plan, path).symbol();
    plan = replace_at(lib, plan, path, PlanNode::realized(sym, ts));
    out.push_back(sym);
  }
  return out;
}

DomainStats library_stats(const PlanLibrary& lib) {
  DomainStats stats;
  for (const auto& s : lib.symbols()) {
    if (!s.terminal()) ++stats.complex_actions;
  }
  stats.rules = lib.rules().size();

  // Leaf count per symbol: a value when all of its plans agree, 0 otherwise.
  constexpr std::size_t kUnknown = static_cast<std::size_t>(-1);
  std::vector<std::size_t> memo(lib.symbol_count(), kUnknown);
  std::vector<bool> active(lib.symbol_count(), false);
  std::function<std::size_t(SymbolId)> leaves = [&](SymbolId sym) -> std::size_t {
    if (lib.is_terminal(sym)) return 1;
    if (memo[sym.value] != kUnknown) return memo[sym.value];
    if (active[sym.value]) return 0;  // recursive: no single count
    active[sym.value] = true;
    std::size_t agreed = kUnknown;
    for (RuleId r : lib.rules_for(sym)) {
      std::size_t n = 0;
      for (SymbolId c : lib.rule(r).rhs) {
        const std::size_t k = leaves(c);
        if (k == 0) {
          n = 0;
          break;
        }
        n += k;
      }
      if (n == 0 || (agreed != kUnknown && agreed != n)) {
        agreed = 0;
        break;
      }
      agreed = n;
    }
    active[sym.value] = false;
    if (agreed == kUnknown) agreed = 0;  // no rules
    memo[sym.value] = agreed;
    return agreed;
  };

  std::optional<std::size_t> common;
  for (SymbolId g : lib.goals()) {
    const std::size_t n = leaves(g);
    if (n == 0 || (common && *common != n)) return stats;
    common = n;
  }
  stats.plan_leaf_count = common;
  return stats;
}

}  // namespace planrec
