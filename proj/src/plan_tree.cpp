#include "planrec/plan_tree.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <stdexcept>

namespace planrec {

namespace {

constexpr std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t combine(std::uint64_t seed, std::uint64_t value) {
  return mix(seed ^ (value + 0x632be59bd9b4e019ULL + (seed << 6) + (seed >> 2)));
}

}  // namespace

NodePtr PlanNode::open(SymbolId symbol) {
  std::shared_ptr<PlanNode> node(new PlanNode());
  node->symbol_ = symbol;
  node->state_ = NodeState::Open;
  node->open_count_ = 1;
  node->hash_ = combine(mix(symbol.value), 1);
  return node;
}

NodePtr PlanNode::realized(SymbolId symbol, Timestamp ts) {
  if (ts == 0) throw std::invalid_argument("realized leaf needs a timestamp >= 1");
  std::shared_ptr<PlanNode> node(new PlanNode());
  node->symbol_ = symbol;
  node->state_ = NodeState::Realized;
  node->complete_ = true;
  node->min_ts_ = ts;
  node->max_ts_ = ts;
  node->realized_count_ = 1;
  node->hash_ = combine(combine(mix(symbol.value), 2), ts);
  return node;
}

NodePtr PlanNode::expanded(const ProductionRule& rule, std::vector<NodePtr> children) {
  if (children.size() != rule.rhs.size()) {
    throw std::invalid_argument("child count does not match rule");
  }
  std::shared_ptr<PlanNode> node(new PlanNode());
  node->symbol_ = rule.lhs;
  node->state_ = NodeState::Expanded;
  node->rule_ = rule.id;
  node->complete_ = true;
  node->weight_ = rule.prob;
  std::uint64_t h = combine(combine(mix(rule.lhs.value), 3), rule.id.value);
  std::uint32_t depth = 0;
  for (std::size_t k = 0; k < children.size(); ++k) {
    const PlanNode& c = *children[k];
    if (c.symbol_ != rule.rhs[k]) throw std::invalid_argument("child symbol does not match rule");
    node->complete_ = node->complete_ && c.complete_;
    node->consistent_ = node->consistent_ && c.consistent_;
    if (c.min_ts_ != 0) {
      node->min_ts_ = node->min_ts_ == 0 ? c.min_ts_ : std::min(node->min_ts_, c.min_ts_);
      node->max_ts_ = std::max(node->max_ts_, c.max_ts_);
    }
    node->weight_ *= c.weight_;
    node->open_count_ += c.open_count_;
    node->realized_count_ += c.realized_count_;
    depth = std::max(depth, c.depth_);
    h = combine(h, c.hash_);
  }
  node->depth_ = depth + 1;
  node->hash_ = h;
  if (node->consistent_) {
    for (auto [i, j] : rule.closure) {
      const PlanNode& after = *children[j];
      if (after.min_ts_ == 0) continue;
      const PlanNode& before = *children[i];
      if (!before.complete_ || before.max_ts_ >= after.min_ts_) {
        node->consistent_ = false;
        break;
      }
    }
  }
  node->children_ = std::move(children);
  return node;
}

bool structurally_equal(const PlanNode& a, const PlanNode& b) {
  if (&a == &b) return true;
  if (a.hash() != b.hash() || a.symbol() != b.symbol() || a.state() != b.state()) return false;
  switch (a.state()) {
    case NodeState::Open: return true;
    case NodeState::Realized: return a.timestamp() == b.timestamp();
    case NodeState::Expanded:
      if (a.rule() != b.rule()) return false;
      for (std::size_t k = 0; k < a.children().size(); ++k) {
        if (!structurally_equal(a.child(k), b.child(k))) return false;
      }
      return true;
  }
  return false;
}

OpenNodes::OpenNodes(const PlanLibrary& lib) {
  nodes_.reserve(lib.symbol_count());
  for (const auto& s : lib.symbols()) nodes_.push_back(PlanNode::open(s.id));
}

const NodePtr& subtree_at(const Plan& plan, const NodePath& path) {
  const NodePtr* node = &plan.root;
  for (auto k : path) {
    if (!(*node)->is_expanded() || k >= (*node)->children().size()) {
      throw std::out_of_range("node path does not exist in plan");
    }
    node = &(*node)->children()[k];
  }
  return *node;
}

const PlanNode& node_at(const Plan& plan, const NodePath& path) { return *subtree_at(plan, path); }

namespace {

NodePtr rebuild(const PlanLibrary& lib, const NodePtr& node, const NodePath& path, std::size_t at,
                NodePtr sub) {
  if (at == path.size()) return sub;
  if (!node->is_expanded() || path[at] >= node->children().size()) {
    throw std::out_of_range("node path does not exist in plan");
  }
  std::vector<NodePtr> children(node->children().begin(), node->children().end());
  children[path[at]] = rebuild(lib, children[path[at]], path, at + 1, std::move(sub));
  return PlanNode::expanded(lib.rule(node->rule()), std::move(children));
}

void collect_open(const PlanNode& node, NodePath& path, std::vector<NodePath>& out) {
  if (node.is_open()) {
    out.push_back(path);
    return;
  }
  if (!node.is_expanded() || node.open_count() == 0) return;
  for (std::size_t k = 0; k < node.children().size(); ++k) {
    path.push_back(static_cast<std::uint8_t>(k));
    collect_open(node.child(k), path, out);
    path.pop_back();
  }
}

void collect_enabled(const PlanLibrary& lib, const PlanNode& node, NodePath& path,
                     std::vector<NodePath>& out) {
  if (node.is_open()) {
    out.push_back(path);
    return;
  }
  if (!node.is_expanded() || node.open_count() == 0) return;
  const ProductionRule& rule = lib.rule(node.rule());
  for (std::size_t j = 0; j < node.children().size(); ++j) {
    const PlanNode& child = node.child(j);
    if (child.open_count() == 0) continue;
    bool enabled = true;
    for (std::uint64_t preds = rule.predecessors[j]; preds != 0; preds &= preds - 1) {
      auto i = static_cast<std::size_t>(__builtin_ctzll(preds));
      if (!node.child(i).complete()) {
        enabled = false;
        break;
      }
    }
    if (!enabled) continue;
    path.push_back(static_cast<std::uint8_t>(j));
    collect_enabled(lib, child, path, out);
    path.pop_back();
  }
}

struct Summary {
  bool complete = true;
  Timestamp lo = 0;
  Timestamp hi = 0;
  bool ok = true;
};

Summary recompute(const PlanLibrary& lib, const PlanNode& node) {
  switch (node.state()) {
    case NodeState::Open: return Summary{false, 0, 0, true};
    case NodeState::Realized: return Summary{true, node.timestamp(), node.timestamp(), true};
    case NodeState::Expanded: break;
  }
  const ProductionRule& rule = lib.rule(node.rule());
  std::vector<Summary> kids;
  Summary out;
  for (std::size_t k = 0; k < node.children().size(); ++k) {
    Summary s = recompute(lib, node.child(k));
    out.complete = out.complete && s.complete;
    out.ok = out.ok && s.ok;
    if (s.lo != 0) {
      out.lo = out.lo == 0 ? s.lo : std::min(out.lo, s.lo);
      out.hi = std::max(out.hi, s.hi);
    }
    kids.push_back(s);
  }
  for (std::size_t i = 0; i < kids.size(); ++i) {
    for (std::size_t j = 0; j < kids.size(); ++j) {
      if (!(rule.predecessors[j] >> i & 1U)) continue;
      if (kids[j].lo == 0) continue;
      if (!kids[i].complete || kids[i].hi >= kids[j].lo) out.ok = false;
    }
  }
  return out;
}

void serialize_into(const PlanLibrary& lib, const PlanNode& node, std::string& out) {
  out += lib.name(node.symbol());
  switch (node.state()) {
    case NodeState::Open: out += '?'; return;
    case NodeState::Realized:
      out += '@';
      out += std::to_string(node.timestamp());
      return;
    case NodeState::Expanded:
      out += '(';
      for (std::size_t k = 0; k < node.children().size(); ++k) {
        if (k) out += ' ';
        serialize_into(lib, node.child(k), out);
      }
      out += ')';
      return;
  }
}

class PlanParser {
 public:
  PlanParser(const PlanLibrary& lib, std::string_view text) : lib_(lib), text_(text) {}

  NodePtr node() {
    skip_space();
    std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
      ++pos_;
    }
    if (start == pos_) fail("expected symbol name");
    SymbolId sym = lib_.id_of(text_.substr(start, pos_ - start));
    if (pos_ >= text_.size()) fail("unexpected end of plan");
    char c = text_[pos_++];
    if (c == '?') return PlanNode::open(sym);
    if (c == '@') {
      Timestamp ts = 0;
      auto [ptr, ec] = std::from_chars(text_.data() + pos_, text_.data() + text_.size(), ts);
      if (ec != std::errc{} || ts == 0) fail("expected timestamp >= 1");
      pos_ = static_cast<std::size_t>(ptr - text_.data());
      if (!lib_.is_terminal(sym)) fail("realized leaf must be a terminal");
      return PlanNode::realized(sym, ts);
    }
    if (c != '(') fail("expected '?', '@' or '('");
    std::vector<NodePtr> children;
    for (;;) {
      skip_space();
      if (pos_ < text_.size() && text_[pos_] == ')') {
        ++pos_;
        break;
      }
      children.push_back(node());
    }
    std::vector<SymbolId> rhs;
    for (const auto& ch : children) rhs.push_back(ch->symbol());
    if (lib_.is_terminal(sym)) fail("terminal cannot be expanded");
    auto rule = lib_.find_rule(sym, rhs);
    if (!rule) fail("no rule matches expansion of " + lib_.name(sym));
    return PlanNode::expanded(lib_.rule(*rule), std::move(children));
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }
  bool done() {
    skip_space();
    return pos_ == text_.size();
  }

 private:
  [[noreturn]] void fail(const std::string& what) {
    throw LibraryError(LibraryErrorKind::Syntax,
                       "plan text at offset " + std::to_string(pos_) + ": " + what);
  }

  const PlanLibrary& lib_;
  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace

Plan replace_at(const PlanLibrary& lib, const Plan& plan, const NodePath& path, NodePtr sub) {
  return Plan{rebuild(lib, plan.root, path, 0, std::move(sub))};
}

std::vector<NodePath> open_frontier(const Plan& plan) {
  std::vector<NodePath> out;
  NodePath path;
  collect_open(*plan.root, path, out);
  return out;
}

std::vector<NodePath> enabled_frontier(const PlanLibrary& lib, const Plan& plan) {
  std::vector<NodePath> out;
  NodePath path;
  collect_enabled(lib, *plan.root, path, out);
  return out;
}

std::string_view to_string(FuseError error) {
  switch (error) {
    case FuseError::SymbolMismatch: return "symbol mismatch";
    case FuseError::NotOpenFrontier: return "not an open frontier node";
    case FuseError::TemporalViolation: return "temporal consistency violation";
  }
  return "fuse error";
}

FuseResult fuse(const PlanLibrary& lib, const Plan& plan, const NodePath& path, NodePtr sub) {
  const PlanNode* target = nullptr;
  try {
    target = &node_at(plan, path);
  } catch (const std::out_of_range&) {
    return FuseResult{std::nullopt, FuseError::NotOpenFrontier};
  }
  if (!target->is_open()) return FuseResult{std::nullopt, FuseError::NotOpenFrontier};
  if (target->symbol() != sub->symbol()) return FuseResult{std::nullopt, FuseError::SymbolMismatch};
  Plan result = replace_at(lib, plan, path, std::move(sub));
  if (!result->consistent()) return FuseResult{std::nullopt, FuseError::TemporalViolation};
  return FuseResult{std::move(result), FuseError::SymbolMismatch};
}

bool check_temporal_consistency(const PlanLibrary& lib, const Plan& plan) {
  return recompute(lib, *plan.root).ok;
}

// ---------------------------------------------------------------------------
// Hypothesis

std::uint64_t Hypothesis::hash() const {
  std::uint64_t h = mix(plans.size());
  for (const auto& p : plans) h = combine(h, p->hash());
  return h;
}

bool Hypothesis::same_structure(const Hypothesis& other) const {
  if (plans.size() != other.plans.size()) return false;
  for (std::size_t k = 0; k < plans.size(); ++k) {
    if (!structurally_equal(*plans[k].root, *other.plans[k].root)) return false;
  }
  return true;
}

std::uint32_t Hypothesis::open_count() const {
  std::uint32_t n = 0;
  for (const auto& p : plans) n += p->open_count();
  return n;
}

std::uint32_t Hypothesis::max_depth() const {
  std::uint32_t d = 0;
  for (const auto& p : plans) d = std::max(d, p->depth());
  return d;
}

std::uint32_t Hypothesis::observation_count() const {
  std::uint32_t n = 0;
  for (const auto& p : plans) n += p->realized_count();
  return n;
}

Hypothesis normalized(Hypothesis h) {
  std::sort(h.plans.begin(), h.plans.end(),
            [](const Plan& a, const Plan& b) { return a->min_ts() < b->min_ts(); });
  return h;
}

std::string serialize_plan(const PlanLibrary& lib, const PlanNode& node) {
  std::string out;
  serialize_into(lib, node, out);
  return out;
}

std::string canonical_form(const PlanLibrary& lib, const Hypothesis& h) {
  std::vector<std::pair<Timestamp, std::string>> parts;
  parts.reserve(h.plans.size());
  for (const auto& p : h.plans) parts.emplace_back(p->min_ts(), serialize_plan(lib, p));
  std::sort(parts.begin(), parts.end());
  std::string out;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    if (k) out += ';';
    out += parts[k].second;
  }
  return out;
}

Plan parse_plan(const PlanLibrary& lib, std::string_view text) {
  PlanParser parser(lib, text);
  NodePtr root = parser.node();
  if (!parser.done()) {
    throw LibraryError(LibraryErrorKind::Syntax, "trailing characters after plan");
  }
  return Plan{std::move(root)};
}

Hypothesis parse_hypothesis(const PlanLibrary& lib, std::string_view text) {
  Hypothesis h;
  while (!text.empty()) {
    auto semi = text.find(';');
    auto part = text.substr(0, semi);
    text.remove_prefix(semi == std::string_view::npos ? text.size() : semi + 1);
    h.plans.push_back(parse_plan(lib, part));
  }
  h = normalized(std::move(h));
  h.weight = rule_product(h);
  return h;
}

double rule_product(const Hypothesis& h) {
  double w = 1.0;
  for (const auto& p : h.plans) w *= p->weight();
  return w;
}

bool HypothesisCollector::insert(Hypothesis h) {
  std::uint64_t key = h.hash();
  auto [lo, hi] = index_.equal_range(key);
  for (auto it = lo; it != hi; ++it) {
    const Hypothesis& existing = items_[it->second];
    if (existing.same_structure(h)) {
      double scale = std::max(std::abs(existing.weight), std::abs(h.weight));
      if (std::abs(existing.weight - h.weight) > 1e-9 * scale) {
        throw std::logic_error("duplicate hypothesis reached with a different weight");
      }
      return false;
    }
  }
  index_.emplace(key, static_cast<std::uint32_t>(items_.size()));
  items_.push_back(std::move(h));
  return true;
}

}  // namespace planrec
