#include "planrec/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

#include "planrec/phatt.hpp"
#include "planrec/slim.hpp"

namespace planrec {

double predicted_bound(Engine engine, double w, double b, double h) {
  w = std::max(w, 1.0);
  b = std::max(b, 1.0);
  h = std::max(h, 1.0);
  const double exponent = engine == Engine::Phatt ? h : std::log2(h + w);
  return std::pow(w * b, exponent);
}

std::vector<SymbolId> parse_observations(const PlanLibrary& lib, std::string_view text) {
  std::vector<SymbolId> out;
  std::istringstream in{std::string(text)};
  std::string name;
  while (in >> name) {
    const SymbolId id = lib.id_of(name);
    if (!lib.is_terminal(id)) {
      throw LibraryError(LibraryErrorKind::WrongSymbolKind, "observation is not a terminal: " + name);
    }
    out.push_back(id);
  }
  return out;
}

std::string algorithm_tag(const RecognitionRequest& request) {
  if (request.engine == Engine::Phatt) return "phatt";
  return request.k ? "slim-" + std::to_string(*request.k) : "slim-all";
}

namespace {

using Clock = std::chrono::steady_clock;

std::uint64_t micros_since(Clock::time_point start) {
  return static_cast<std::uint64_t>(
      std::chrono::duration_cast<std::chrono::microseconds>(Clock::now() - start).count());
}

template <typename Step>
HypothesisSet run_steps(std::span<const SymbolId> observations, RunRecord& record, Step&& step) {
  HypothesisSet current = HypothesisSet::initial();
  for (SymbolId obs : observations) {
    CombinationCounter counter;
    const auto start = Clock::now();
    try {
      HypothesisSet next = step(current, obs, counter);
      const std::uint64_t elapsed = micros_since(start);
      record.steps.push_back(measure(next.step, next.hypotheses, counter.count(), elapsed));
      record.bottomup_us += elapsed;
      current = std::move(next);
    } catch (const RecognitionFailure& failure) {
      record.failed_step = failure.step();
      record.bottomup_us += micros_since(start);
      return current;
    }
  }
  record.final_hypotheses = current.hypotheses.size();
  return current;
}

SlimConfig slim_config(const RecognitionRequest& request) {
  SlimConfig cfg;
  cfg.phatt.max_depth = request.max_depth;
  cfg.k = request.k;
  cfg.prune = request.prune;
  return cfg;
}

}  // namespace

RecognitionOutcome run_recognition(const PlanLibrary& lib, std::span<const SymbolId> observations,
                                   const RecognitionRequest& request, std::string instance) {
  RecognitionOutcome outcome;
  RunRecord& record = outcome.record;
  record.instance = std::move(instance);
  record.algorithm = algorithm_tag(request);

  if (request.engine == Engine::Phatt) {
    PhattConfig cfg;
    cfg.max_depth = request.max_depth;
    PhattRecognizer recognizer(lib, cfg);
    HypothesisSet final = run_steps(observations, record, [&](const HypothesisSet& prev, SymbolId obs,
                                                              CombinationCounter& counter) {
      return recognizer.step(prev, obs, &counter);
    });
    if (record.ok()) {
      record.goal_rooted = final.hypotheses.size();
      outcome.hypotheses = std::move(final.hypotheses);
    }
    return outcome;
  }

  SlimRecognizer recognizer(lib, slim_config(request));
  HypothesisSet local = run_steps(observations, record, [&](const HypothesisSet& prev, SymbolId obs,
                                                            CombinationCounter& counter) {
    return recognizer.step(prev, obs, &counter);
  });
  if (!record.ok()) return outcome;
  if (request.k == std::optional<std::size_t>{0} || observations.empty()) {
    outcome.hypotheses = std::move(local.hypotheses);
    return outcome;
  }
  const auto start = Clock::now();
  outcome.hypotheses = recognizer.compile(local, request.k);
  record.topdown_us = micros_since(start);
  record.goal_rooted = outcome.hypotheses.size();
  return outcome;
}

void emit_hypotheses(const PlanLibrary& lib, const std::vector<Hypothesis>& hs, std::ostream& out) {
  for (const Hypothesis& h : k_best(lib, hs, std::nullopt)) {
    char weight[32];
    std::snprintf(weight, sizeof weight, "%.17g", h.weight);
    out << weight << '\t' << canonical_form(lib, h) << '\n';
  }
}

void write_metrics(const PlanLibrary& lib, const std::vector<RunRecord>& records, std::ostream& out,
                   bool header) {
  if (header) out << kMetricsHeader << '\n';
  const auto b = static_cast<double>(lib.max_or_branching());
  char bound[32];
  for (const RunRecord& r : records) {
    const Engine engine = r.algorithm == "phatt" ? Engine::Phatt : Engine::Slim;
    for (const StepMetrics& m : r.steps) {
      std::snprintf(bound, sizeof bound, "%.6g",
                    predicted_bound(engine, static_cast<double>(m.frontier), b,
                                    static_cast<double>(m.max_depth)));
      out << r.instance << ',' << r.algorithm << ',' << m.step << ',' << m.hypotheses << ','
          << m.combinations << ',' << m.frontier << ',' << m.max_depth << ',' << bound << ','
          << m.elapsed_us << ",ok\n";
    }
    if (!r.ok()) {
      out << r.instance << ',' << r.algorithm << ',' << r.failed_step << ",0,0,0,0,0,0,failed\n";
    }
  }
}

void write_summary(const std::vector<RunRecord>& records, std::ostream& out, bool header) {
  if (header) out << kSummaryHeader << '\n';
  for (const RunRecord& r : records) {
    out << r.instance << ',' << r.algorithm << ',' << r.final_hypotheses << ',' << r.goal_rooted
        << ',' << r.bottomup_us << ',' << r.topdown_us << ',' << r.total_us() << ','
        << (r.ok() ? "ok" : "failed") << '\n';
  }
}

std::vector<RunRecord> run_benchmark(const PlanLibrary& lib, const std::vector<BenchmarkInstance>& instances,
                                     const BenchmarkPlan& plan) {
  std::vector<RunRecord> records;
  for (const BenchmarkInstance& inst : instances) {
    for (Engine engine : plan.engines) {
      RecognitionRequest request;
      request.engine = engine;
      request.max_depth = plan.max_depth;
      request.prune = plan.prune;
      if (engine == Engine::Phatt) {
        records.push_back(run_recognition(lib, inst.observations, request, inst.name).record);
        continue;
      }
      // Bottom-up once; every k variant compiles from the same local set.
      request.k = 0;
      SlimRecognizer recognizer(lib, slim_config(request));
      RunRecord base;
      base.instance = inst.name;
      HypothesisSet local = run_steps(inst.observations, base, [&](const HypothesisSet& prev, SymbolId obs,
                                                                   CombinationCounter& counter) {
        return recognizer.step(prev, obs, &counter);
      });
      for (const auto& k : plan.k_values) {
        RunRecord r = base;
        request.k = k;
        r.algorithm = algorithm_tag(request);
        if (r.ok() && k != std::optional<std::size_t>{0} && !inst.observations.empty()) {
          const auto start = Clock::now();
          r.goal_rooted = recognizer.compile(local, k).size();
          r.topdown_us = micros_since(start);
        }
        records.push_back(std::move(r));
      }
    }
  }
  return records;
}

}  // namespace planrec
