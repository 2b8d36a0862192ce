#include "planrec/grammar.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <map>
#include <sstream>

namespace planrec {

namespace {

constexpr double kProbabilityTolerance = 1e-9;

bool valid_symbol_name(std::string_view name) {
  if (name.empty()) return false;
  auto head = static_cast<unsigned char>(name.front());
  if (!(std::isalpha(head) || head == '_')) return false;
  return std::all_of(name.begin() + 1, name.end(), [](char c) {
    auto u = static_cast<unsigned char>(c);
    return std::isalnum(u) || u == '_';
  });
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string> split_words(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    std::size_t start = i;
    while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    if (i > start) out.emplace_back(s.substr(start, i - start));
  }
  return out;
}

// Fills rule.predecessors / rule.closure; returns false on a cycle.
bool close_constraints(ProductionRule& rule) {
  const std::size_t n = rule.rhs.size();
  rule.predecessors.assign(n, 0);
  for (auto [i, j] : rule.constraints) rule.predecessors[j] |= std::uint64_t{1} << i;
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t j = 0; j < n; ++j) {
      std::uint64_t acc = rule.predecessors[j];
      for (std::size_t i = 0; i < n; ++i) {
        if (rule.predecessors[j] >> i & 1U) acc |= rule.predecessors[i];
      }
      if (acc != rule.predecessors[j]) {
        rule.predecessors[j] = acc;
        changed = true;
      }
    }
  }
  rule.closure.clear();
  for (std::size_t j = 0; j < n; ++j) {
    if (rule.predecessors[j] >> j & 1U) return false;
    for (std::size_t i = 0; i < n; ++i) {
      if (rule.predecessors[j] >> i & 1U) {
        rule.closure.emplace_back(static_cast<std::uint8_t>(i), static_cast<std::uint8_t>(j));
      }
    }
  }
  return true;
}

std::string format_prob(double p) {
  std::ostringstream os;
  os.precision(17);
  os << p;
  return os.str();
}

}  // namespace

std::string_view to_string(LibraryErrorKind kind) {
  switch (kind) {
    case LibraryErrorKind::Syntax: return "syntax error";
    case LibraryErrorKind::DuplicateSymbol: return "duplicate symbol";
    case LibraryErrorKind::UndeclaredSymbol: return "undeclared symbol";
    case LibraryErrorKind::WrongSymbolKind: return "wrong symbol kind";
    case LibraryErrorKind::EmptyRhs: return "empty right-hand side";
    case LibraryErrorKind::RhsTooLong: return "right-hand side too long";
    case LibraryErrorKind::ConstraintOutOfRange: return "constraint index out of range";
    case LibraryErrorKind::ConstraintCycle: return "constraint cycle";
    case LibraryErrorKind::BadProbability: return "bad probability";
    case LibraryErrorKind::ProbabilitySum: return "probability sum violation";
    case LibraryErrorKind::DuplicateRule: return "duplicate rule";
    case LibraryErrorKind::EmptyGoals: return "empty goal set";
  }
  return "library error";
}

namespace {
std::string decorate(LibraryErrorKind kind, const std::string& what, std::size_t line) {
  std::string msg;
  if (line != 0) msg = "line " + std::to_string(line) + ": ";
  msg += to_string(kind);
  if (!what.empty()) msg += ": " + what;
  return msg;
}
}  // namespace

LibraryError::LibraryError(LibraryErrorKind kind, const std::string& what, std::size_t line)
    : std::runtime_error(decorate(kind, what, line)), kind_(kind), line_(line) {}

// ---------------------------------------------------------------------------
// LibraryBuilder

SymbolId LibraryBuilder::add_symbol(std::string name, SymbolKind kind) {
  if (!valid_symbol_name(name)) {
    throw LibraryError(LibraryErrorKind::Syntax, "invalid symbol name '" + name + "'");
  }
  if (by_name_.contains(name)) throw LibraryError(LibraryErrorKind::DuplicateSymbol, name);
  SymbolId id{static_cast<std::uint32_t>(symbols_.size())};
  by_name_.emplace(name, id);
  symbols_.push_back(Symbol{id, std::move(name), kind, false});
  return id;
}

SymbolId LibraryBuilder::add_terminal(std::string name) {
  return add_symbol(std::move(name), SymbolKind::Terminal);
}

SymbolId LibraryBuilder::add_nonterminal(std::string name) {
  return add_symbol(std::move(name), SymbolKind::Nonterminal);
}

void LibraryBuilder::add_goal(std::string_view name, std::size_t source_line) {
  goals_.emplace_back(std::string(name), source_line);
}

void LibraryBuilder::add_rule(std::string_view lhs, const std::vector<std::string>& rhs,
                              const std::vector<std::pair<std::size_t, std::size_t>>& constraints,
                              double prob, std::size_t source_line) {
  rules_.push_back(PendingRule{std::string(lhs), rhs, constraints, prob, source_line});
}

PlanLibrary LibraryBuilder::build() const { return build(Options{}); }

PlanLibrary LibraryBuilder::build(const Options& options) const {
  PlanLibrary lib;
  lib.symbols_ = symbols_;
  lib.by_name_ = by_name_;

  std::size_t line = 0;
  auto fail = [&line](LibraryErrorKind kind, const std::string& what) {
    throw LibraryError(kind, what, line);
  };
  auto lookup = [&](const std::string& name) {
    auto it = by_name_.find(name);
    if (it == by_name_.end()) fail(LibraryErrorKind::UndeclaredSymbol, name);
    return it->second;
  };

  for (const auto& [g, goal_line] : goals_) {
    line = goal_line;
    SymbolId id = lookup(g);
    Symbol& sym = lib.symbols_[id.value];
    if (sym.terminal()) fail(LibraryErrorKind::WrongSymbolKind, "goal '" + g + "' is a terminal");
    if (!sym.is_goal) {
      sym.is_goal = true;
      lib.goals_.push_back(id);
    }
  }
  line = 0;
  if (lib.goals_.empty()) fail(LibraryErrorKind::EmptyGoals, "");

  std::map<std::vector<std::uint32_t>, RuleId> seen;
  std::vector<std::size_t> head_line(symbols_.size(), 0);
  for (const auto& pending : rules_) {
    line = pending.line;
    ProductionRule rule;
    rule.id = RuleId{static_cast<std::uint32_t>(lib.rules_.size())};
    rule.lhs = lookup(pending.lhs);
    if (lib.symbols_[rule.lhs.value].terminal()) {
      fail(LibraryErrorKind::WrongSymbolKind,
                         "rule head '" + pending.lhs + "' is a terminal");
    }
    if (pending.rhs.empty()) fail(LibraryErrorKind::EmptyRhs, pending.lhs);
    if (pending.rhs.size() > kMaxRhsLength) {
      fail(LibraryErrorKind::RhsTooLong, pending.lhs);
    }
    for (const auto& name : pending.rhs) rule.rhs.push_back(lookup(name));
    for (auto [i, j] : pending.constraints) {
      if (i < 1 || j < 1 || i > rule.rhs.size() || j > rule.rhs.size()) {
        fail(LibraryErrorKind::ConstraintOutOfRange,
                           "(" + std::to_string(i) + "," + std::to_string(j) + ") in rule for " +
                               pending.lhs);
      }
      if (i == j) {
        fail(LibraryErrorKind::ConstraintCycle,
                           "self-constraint (" + std::to_string(i) + "," + std::to_string(j) +
                               ") in rule for " + pending.lhs);
      }
      std::pair<std::uint8_t, std::uint8_t> pair{static_cast<std::uint8_t>(i - 1),
                                                 static_cast<std::uint8_t>(j - 1)};
      if (std::find(rule.constraints.begin(), rule.constraints.end(), pair) ==
          rule.constraints.end()) {
        rule.constraints.push_back(pair);
      }
    }
    if (!close_constraints(rule)) {
      fail(LibraryErrorKind::ConstraintCycle, "in rule for " + pending.lhs);
    }
    if (!(pending.prob > 0.0 && pending.prob <= 1.0)) {
      fail(LibraryErrorKind::BadProbability,
                         format_prob(pending.prob) + " in rule for " + pending.lhs);
    }
    rule.prob = pending.prob;

    std::vector<std::uint32_t> key{rule.lhs.value};
    for (auto s : rule.rhs) key.push_back(s.value);
    if (!seen.emplace(std::move(key), rule.id).second) {
      fail(LibraryErrorKind::DuplicateRule, "second rule for " + pending.lhs +
                                                              " with the same right-hand side");
    }
    if (head_line[rule.lhs.value] == 0) head_line[rule.lhs.value] = pending.line;
    lib.rules_.push_back(std::move(rule));
  }

  lib.build_indexes();

  if (options.enforce_probabilities) {
    for (std::size_t s = 0; s < lib.symbols_.size(); ++s) {
      const auto& heads = lib.rules_by_head_[s];
      if (heads.empty()) continue;
      double sum = 0.0;
      for (RuleId r : heads) sum += lib.rules_[r.value].prob;
      if (std::abs(sum - 1.0) > kProbabilityTolerance) {
        throw LibraryError(LibraryErrorKind::ProbabilitySum,
                           "rules for " + lib.symbols_[s].name + " sum to " + format_prob(sum),
                           head_line[s]);
      }
    }
  }
  return lib;
}

// ---------------------------------------------------------------------------
// PlanLibrary

void PlanLibrary::build_indexes() {
  const std::size_t n = symbols_.size();
  rules_by_head_.assign(n, {});
  rules_containing_.assign(n, {});
  for (const auto& rule : rules_) {
    rules_by_head_[rule.lhs.value].push_back(rule.id);
    for (std::size_t pos = 0; pos < rule.rhs.size(); ++pos) {
      rules_containing_[rule.rhs[pos].value].push_back(
          RuleOccurrence{rule.id, static_cast<std::uint8_t>(pos)});
    }
  }

  max_or_branching_ = 0;
  for (const auto& heads : rules_by_head_) max_or_branching_ = std::max(max_or_branching_, heads.size());

  reachable_.assign(n, false);
  std::vector<SymbolId> stack(goals_.begin(), goals_.end());
  for (auto g : goals_) reachable_[g.value] = true;
  while (!stack.empty()) {
    SymbolId s = stack.back();
    stack.pop_back();
    for (RuleId r : rules_by_head_[s.value]) {
      for (SymbolId child : rules_[r.value].rhs) {
        if (!reachable_[child.value]) {
          reachable_[child.value] = true;
          stack.push_back(child);
        }
      }
    }
  }

  // Longest derivation depth with recursion cut on the current path.
  std::vector<bool> on_path(n, false);
  std::function<std::size_t(SymbolId)> depth = [&](SymbolId s) -> std::size_t {
    if (symbols_[s.value].terminal() || on_path[s.value]) return 0;
    on_path[s.value] = true;
    std::size_t best = 0;
    for (RuleId r : rules_by_head_[s.value]) {
      for (SymbolId child : rules_[r.value].rhs) best = std::max(best, 1 + depth(child));
    }
    on_path[s.value] = false;
    return best;
  };
  longest_depth_ = 0;
  for (std::size_t s = 0; s < n; ++s) {
    longest_depth_ = std::max(longest_depth_, depth(SymbolId{static_cast<std::uint32_t>(s)}));
  }
}

std::optional<SymbolId> PlanLibrary::find(std::string_view name) const {
  auto it = by_name_.find(std::string(name));
  if (it == by_name_.end()) return std::nullopt;
  return it->second;
}

SymbolId PlanLibrary::id_of(std::string_view name) const {
  auto id = find(name);
  if (!id) throw LibraryError(LibraryErrorKind::UndeclaredSymbol, std::string(name));
  return *id;
}

std::span<const RuleOccurrence> PlanLibrary::rules_containing(SymbolId sym) const {
  if (sym.value >= rules_containing_.size()) {
    throw std::out_of_range("unknown symbol id " + std::to_string(sym.value));
  }
  return rules_containing_[sym.value];
}

std::optional<RuleId> PlanLibrary::find_rule(SymbolId lhs, std::span<const SymbolId> rhs) const {
  for (RuleId r : rules_by_head_.at(lhs.value)) {
    const auto& rule = rules_[r.value];
    if (std::equal(rule.rhs.begin(), rule.rhs.end(), rhs.begin(), rhs.end())) return r;
  }
  return std::nullopt;
}

std::vector<SymbolId> PlanLibrary::reachable_symbols() const {
  std::vector<SymbolId> out;
  for (std::size_t s = 0; s < reachable_.size(); ++s) {
    if (reachable_[s]) out.push_back(SymbolId{static_cast<std::uint32_t>(s)});
  }
  return out;
}

std::span<const RuleOccurrence> rules_containing(const PlanLibrary& lib, SymbolId sym) {
  return lib.rules_containing(sym);
}

std::vector<SymbolId> reachable_from_goals(const PlanLibrary& lib) { return lib.reachable_symbols(); }

// ---------------------------------------------------------------------------
// Text format

namespace {

std::vector<std::pair<std::size_t, std::size_t>> parse_constraints(std::string_view field,
                                                                   std::size_t line) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  std::string compact;
  for (char c : field) {
    if (!std::isspace(static_cast<unsigned char>(c))) compact.push_back(c);
  }
  std::string_view rest = compact;
  auto read_int = [&](std::size_t& value) {
    auto [ptr, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), value);
    if (ec != std::errc{} || ptr == rest.data()) {
      throw LibraryError(LibraryErrorKind::Syntax, "expected integer in constraint list", line);
    }
    rest.remove_prefix(static_cast<std::size_t>(ptr - rest.data()));
  };
  auto expect = [&](char c) {
    if (rest.empty() || rest.front() != c) {
      throw LibraryError(LibraryErrorKind::Syntax,
                         std::string("expected '") + c + "' in constraint list", line);
    }
    rest.remove_prefix(1);
  };
  while (!rest.empty()) {
    std::size_t i = 0;
    std::size_t j = 0;
    expect('(');
    read_int(i);
    expect(',');
    read_int(j);
    expect(')');
    out.emplace_back(i, j);
    if (!rest.empty()) expect(',');
  }
  return out;
}

double parse_probability(std::string_view field, std::size_t line) {
  std::string text(trim(field));
  if (text.empty()) throw LibraryError(LibraryErrorKind::Syntax, "missing probability", line);
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size()) {
    throw LibraryError(LibraryErrorKind::Syntax, "bad probability '" + text + "'", line);
  }
  return value;
}

}  // namespace

PlanLibrary parse_library(std::string_view text) {
  LibraryBuilder builder;
  std::size_t line_no = 0;

  auto with_line = [&](auto&& fn) {
    try {
      fn();
    } catch (const LibraryError& e) {
      if (e.line() != 0) throw;
      std::string what = e.what();
      auto sep = what.find(": ");
      throw LibraryError(e.kind(), sep == std::string::npos ? "" : what.substr(sep + 2), line_no);
    }
  };

  while (!text.empty()) {
    ++line_no;
    auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    auto colon = line.find(':');
    if (colon == std::string_view::npos) {
      throw LibraryError(LibraryErrorKind::Syntax, "expected 'key: value'", line_no);
    }
    std::string_view key = trim(line.substr(0, colon));
    std::string_view value = line.substr(colon + 1);

    if (key == "terminals") {
      with_line([&] {
        for (auto& w : split_words(value)) builder.add_terminal(w);
      });
    } else if (key == "nonterminals") {
      with_line([&] {
        for (auto& w : split_words(value)) builder.add_nonterminal(w);
      });
    } else if (key == "goals") {
      for (auto& w : split_words(value)) builder.add_goal(w, line_no);
    } else if (key == "rule") {
      auto arrow = value.find("->");
      if (arrow == std::string_view::npos) {
        throw LibraryError(LibraryErrorKind::Syntax, "rule without '->'", line_no);
      }
      std::string lhs(trim(value.substr(0, arrow)));
      std::string_view body = value.substr(arrow + 2);
      std::vector<std::string_view> fields;
      for (std::size_t start = 0;;) {
        auto bar = body.find('|', start);
        fields.push_back(body.substr(start, bar == std::string_view::npos ? bar : bar - start));
        if (bar == std::string_view::npos) break;
        start = bar + 1;
      }
      if (fields.size() != 3) {
        throw LibraryError(LibraryErrorKind::Syntax,
                           "rule needs 3 '|'-separated fields (rhs | constraints | prob)", line_no);
      }
      if (!valid_symbol_name(lhs)) {
        throw LibraryError(LibraryErrorKind::Syntax, "invalid rule head '" + lhs + "'", line_no);
      }
      auto rhs = split_words(fields[0]);
      for (const auto& s : rhs) {
        if (!valid_symbol_name(s)) {
          throw LibraryError(LibraryErrorKind::Syntax, "invalid symbol name '" + s + "'", line_no);
        }
      }
      auto constraints = parse_constraints(fields[1], line_no);
      double prob = parse_probability(fields[2], line_no);
      builder.add_rule(lhs, rhs, constraints, prob, line_no);
    } else {
      throw LibraryError(LibraryErrorKind::Syntax, "unknown key '" + std::string(key) + "'",
                         line_no);
    }
  }

  return builder.build();
}

std::string serialize_library(const PlanLibrary& lib) {
  std::ostringstream os;
  os << "terminals:";
  for (const auto& s : lib.symbols()) {
    if (s.terminal()) os << ' ' << s.name;
  }
  os << "\nnonterminals:";
  for (const auto& s : lib.symbols()) {
    if (!s.terminal()) os << ' ' << s.name;
  }
  os << "\ngoals:";
  for (auto g : lib.goals()) os << ' ' << lib.name(g);
  os << '\n';
  for (const auto& rule : lib.rules()) {
    os << "rule: " << lib.name(rule.lhs) << " ->";
    for (auto s : rule.rhs) os << ' ' << lib.name(s);
    os << " | ";
    for (std::size_t k = 0; k < rule.constraints.size(); ++k) {
      if (k) os << ',';
      os << '(' << rule.constraints[k].first + 1 << ',' << rule.constraints[k].second + 1 << ')';
    }
    os << " | " << format_prob(rule.prob) << '\n';
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Validation

bool ValidationReport::valid() const {
  return std::none_of(issues.begin(), issues.end(), [](const ValidationIssue& i) {
    return i.severity == ValidationIssue::Severity::Violation;
  });
}

ValidationReport validate_library(const PlanLibrary& lib) {
  using Severity = ValidationIssue::Severity;
  ValidationReport report;
  for (const auto& sym : lib.symbols()) {
    if (sym.terminal()) {
      if (lib.rules_containing(sym.id).empty()) {
        report.issues.push_back({Severity::Warning, "terminal unreachable: " + sym.name});
      } else if (!lib.reachable(sym.id)) {
        report.issues.push_back({Severity::Warning, "symbol unreachable from goals: " + sym.name});
      }
      continue;
    }
    auto heads = lib.rules_for(sym.id);
    if (heads.empty()) {
      if (sym.is_goal) {
        report.issues.push_back({Severity::Violation, "goal has no rules: " + sym.name});
      } else {
        report.issues.push_back({Severity::Warning, "nonterminal has no rules: " + sym.name});
      }
    } else {
      double sum = 0.0;
      for (RuleId r : heads) sum += lib.rule(r).prob;
      if (std::abs(sum - 1.0) > kProbabilityTolerance) {
        report.issues.push_back({Severity::Violation, "rule probabilities for " + sym.name +
                                                          " sum to " + format_prob(sum)});
      }
    }
    if (!lib.reachable(sym.id)) {
      report.issues.push_back({Severity::Warning, "symbol unreachable from goals: " + sym.name});
    }
  }
  return report;
}

}  // namespace planrec
