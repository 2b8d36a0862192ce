#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace planrec {

struct SymbolId {
  std::uint32_t value = 0;
  auto operator<=>(const SymbolId&) const = default;
};

struct RuleId {
  std::uint32_t value = 0;
  auto operator<=>(const RuleId&) const = default;
};

// Observation index, 1-based. Zero means "no timestamp".
using Timestamp = std::uint32_t;

enum class SymbolKind : std::uint8_t { Terminal, Nonterminal };

struct Symbol {
  SymbolId id;
  std::string name;
  SymbolKind kind = SymbolKind::Terminal;
  bool is_goal = false;

  bool terminal() const { return kind == SymbolKind::Terminal; }
};

// Rules are limited to this many RHS symbols so that predecessor sets fit a
// single 64-bit mask.
inline constexpr std::size_t kMaxRhsLength = 64;

struct ProductionRule {
  RuleId id;
  SymbolId lhs;
  std::vector<SymbolId> rhs;
  // 0-based (before, after) pairs exactly as declared.
  std::vector<std::pair<std::uint8_t, std::uint8_t>> constraints;
  double prob = 1.0;

  // Transitive closure of `constraints`. predecessors[j] has bit i set iff
  // position i must be finished before position j may start.
  std::vector<std::uint64_t> predecessors;
  std::vector<std::pair<std::uint8_t, std::uint8_t>> closure;

  bool has_predecessor(std::size_t pos) const { return predecessors[pos] != 0; }
};

struct RuleOccurrence {
  RuleId rule;
  std::uint8_t position = 0;  // 0-based index into rule.rhs

  bool operator==(const RuleOccurrence&) const = default;
};

enum class LibraryErrorKind {
  Syntax,
  DuplicateSymbol,
  UndeclaredSymbol,
  WrongSymbolKind,
  EmptyRhs,
  RhsTooLong,
  ConstraintOutOfRange,
  ConstraintCycle,
  BadProbability,
  ProbabilitySum,
  DuplicateRule,
  EmptyGoals,
};

std::string_view to_string(LibraryErrorKind kind);

class LibraryError : public std::runtime_error {
 public:
  LibraryError(LibraryErrorKind kind, const std::string& what, std::size_t line = 0);

  LibraryErrorKind kind() const { return kind_; }
  // 1-based line of the offending input, 0 when not parsed from text.
  std::size_t line() const { return line_; }

 private:
  LibraryErrorKind kind_;
  std::size_t line_;
};

class PlanLibrary;

// Accumulates symbols and rules, then validates and indexes them in build().
class LibraryBuilder {
 public:
  struct Options {
    // When false, per-head probability sums are not enforced; lets callers
    // construct libraries that validate_library() then flags.
    bool enforce_probabilities = true;
  };

  SymbolId add_terminal(std::string name);
  SymbolId add_nonterminal(std::string name);
  // `source_line` is only used to decorate errors raised by build().
  void add_goal(std::string_view name, std::size_t source_line = 0);

  // `constraints` are 1-based position pairs, matching the text format.
  void add_rule(std::string_view lhs, const std::vector<std::string>& rhs,
                const std::vector<std::pair<std::size_t, std::size_t>>& constraints, double prob,
                std::size_t source_line = 0);

  PlanLibrary build() const;
  PlanLibrary build(const Options& options) const;

 private:
  struct PendingRule {
    std::string lhs;
    std::vector<std::string> rhs;
    std::vector<std::pair<std::size_t, std::size_t>> constraints;
    double prob;
    std::size_t line;
  };

  SymbolId add_symbol(std::string name, SymbolKind kind);

  std::vector<Symbol> symbols_;
  std::unordered_map<std::string, SymbolId> by_name_;
  std::vector<std::pair<std::string, std::size_t>> goals_;
  std::vector<PendingRule> rules_;
};

/// Immutable plan library: terminals, nonterminals, goals and probabilistic
/// partially-ordered production rules, plus the lookup indexes both engines
/// need. Safe to share between threads once built.
class PlanLibrary {
 public:
  std::size_t symbol_count() const { return symbols_.size(); }
  const Symbol& symbol(SymbolId id) const { return symbols_.at(id.value); }
  std::span<const Symbol> symbols() const { return symbols_; }
  std::optional<SymbolId> find(std::string_view name) const;
  // Throws LibraryError(UndeclaredSymbol) for unknown names.
  SymbolId id_of(std::string_view name) const;
  const std::string& name(SymbolId id) const { return symbol(id).name; }
  bool is_terminal(SymbolId id) const { return symbol(id).terminal(); }

  std::span<const SymbolId> goals() const { return goals_; }
  bool is_goal(SymbolId id) const { return symbol(id).is_goal; }

  std::span<const ProductionRule> rules() const { return rules_; }
  const ProductionRule& rule(RuleId id) const { return rules_.at(id.value); }
  std::span<const RuleId> rules_for(SymbolId lhs) const { return rules_by_head_.at(lhs.value); }
  // Throws std::out_of_range for ids outside the symbol table.
  std::span<const RuleOccurrence> rules_containing(SymbolId sym) const;
  // Rule with exactly this head and RHS, if any. (lhs, rhs) pairs are unique.
  std::optional<RuleId> find_rule(SymbolId lhs, std::span<const SymbolId> rhs) const;

  bool reachable(SymbolId id) const { return reachable_.at(id.value); }
  std::vector<SymbolId> reachable_symbols() const;

  // Largest number of rules sharing one head (the OR branching factor b).
  std::size_t max_or_branching() const { return max_or_branching_; }
  // Longest derivation from any symbol, cutting recursion at the first
  // repeated symbol on a path.
  std::size_t longest_derivation_depth() const { return longest_depth_; }

 private:
  friend class LibraryBuilder;
  PlanLibrary() = default;
  void build_indexes();

  std::vector<Symbol> symbols_;
  std::unordered_map<std::string, SymbolId> by_name_;
  std::vector<SymbolId> goals_;
  std::vector<ProductionRule> rules_;
  std::vector<std::vector<RuleId>> rules_by_head_;
  std::vector<std::vector<RuleOccurrence>> rules_containing_;
  std::vector<bool> reachable_;
  std::size_t max_or_branching_ = 0;
  std::size_t longest_depth_ = 0;
};

/// Parses the line-oriented library format:
///
///     terminals: a b c
///     nonterminals: X A B C
///     goals: X
///     rule: X -> A B C | (1,2) | 1.0
///
/// Throws LibraryError carrying the line number on any problem.
PlanLibrary parse_library(std::string_view text);

// Writes `lib` back in the text format accepted by parse_library.
std::string serialize_library(const PlanLibrary& lib);

struct ValidationIssue {
  enum class Severity { Warning, Violation };
  Severity severity;
  std::string message;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;

  bool empty() const { return issues.empty(); }
  bool valid() const;
};

ValidationReport validate_library(const PlanLibrary& lib);

std::span<const RuleOccurrence> rules_containing(const PlanLibrary& lib, SymbolId sym);
std::vector<SymbolId> reachable_from_goals(const PlanLibrary& lib);

}  // namespace planrec

template <>
struct std::hash<planrec::SymbolId> {
  std::size_t operator()(planrec::SymbolId id) const noexcept { return id.value; }
};
