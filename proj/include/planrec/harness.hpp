#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "planrec/grammar.hpp"
#include "planrec/plan_tree.hpp"
#include "planrec/recognition.hpp"

namespace planrec {

enum class Engine { Phatt, Slim };

// Theoretical combination bound for one step. Arguments below 1 are raised
// to 1. The SLIM exponent uses log base 2.
double predicted_bound(Engine engine, double w, double b, double h);

// Whitespace-separated terminal names. Throws LibraryError(UndeclaredSymbol)
// for unknown names and LibraryError(WrongSymbolKind) for nonterminals.
std::vector<SymbolId> parse_observations(const PlanLibrary& lib, std::string_view text);

struct RecognitionRequest {
  Engine engine = Engine::Phatt;
  std::optional<std::size_t> k = 0;  // SLIM only; nullopt = all
  std::size_t max_depth = 0;         // 0 = library default
  bool prune = true;
};

// "phatt", "slim-<k>" or "slim-all".
std::string algorithm_tag(const RecognitionRequest& request);

struct RunRecord {
  std::string instance;
  std::string algorithm;
  std::vector<StepMetrics> steps;
  std::size_t final_hypotheses = 0;  // PHATT: |H_n|; SLIM: local hypotheses
  std::size_t goal_rooted = 0;
  std::uint64_t bottomup_us = 0;
  std::uint64_t topdown_us = 0;
  // 0 when every observation was explained, else the first failing step.
  std::size_t failed_step = 0;

  bool ok() const { return failed_step == 0; }
  std::uint64_t total_us() const { return bottomup_us + topdown_us; }
};

struct RecognitionOutcome {
  RunRecord record;
  // PHATT: the final hypothesis set. SLIM: goal-rooted hypotheses when k is
  // nonzero, else the local hypotheses.
  std::vector<Hypothesis> hypotheses;
};

// Never throws RecognitionFailure; failures are reported in the record.
RecognitionOutcome run_recognition(const PlanLibrary& lib, std::span<const SymbolId> observations,
                                   const RecognitionRequest& request, std::string instance = "");

// `weight<TAB>plan;plan` per line, weight descending then canonical form.
void emit_hypotheses(const PlanLibrary& lib, const std::vector<Hypothesis>& hs, std::ostream& out);

inline constexpr std::string_view kMetricsHeader =
    "instance,algorithm,step,hypotheses,combinations,frontier,max_depth,predicted_bound,elapsed_us,"
    "status";
inline constexpr std::string_view kSummaryHeader =
    "instance,algorithm,final_hypotheses,goal_rooted,bottomup_us,topdown_us,total_us,status";

// One row per step; a failed run ends with a single "failed" row for the
// failing step.
void write_metrics(const PlanLibrary& lib, const std::vector<RunRecord>& records, std::ostream& out,
                   bool header = true);
void write_summary(const std::vector<RunRecord>& records, std::ostream& out, bool header = true);

struct BenchmarkInstance {
  std::string name;
  std::vector<SymbolId> observations;
};

struct BenchmarkPlan {
  std::vector<Engine> engines;
  // SLIM variants; one bottom-up run per instance serves all of them.
  std::vector<std::optional<std::size_t>> k_values{std::optional<std::size_t>{0}};
  std::size_t max_depth = 0;
  bool prune = true;
};

// Records ordered by instance, then engine order, then k order.
std::vector<RunRecord> run_benchmark(const PlanLibrary& lib, const std::vector<BenchmarkInstance>& instances,
                                     const BenchmarkPlan& plan);

}  // namespace planrec
