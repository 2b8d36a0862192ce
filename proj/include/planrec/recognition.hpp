#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "planrec/plan_tree.hpp"

namespace planrec {

/// Shared instrumentation point for combination attempts (C_i). Both engines
/// call attempt() exactly once per (hypothesis, insertion point, candidate
/// tree or fragment) validity check, so counts compare like for like.
class CombinationCounter {
 public:
  void attempt() { ++count_; }
  std::uint64_t count() const { return count_; }
  void reset() { count_ = 0; }

 private:
  std::uint64_t count_ = 0;
};

struct StepMetrics {
  std::size_t step = 0;
  std::size_t hypotheses = 0;
  std::uint64_t combinations = 0;
  std::uint64_t frontier = 0;  // open-frontier nodes summed over all hypotheses
  std::uint32_t max_depth = 0;
  std::uint64_t elapsed_us = 0;
};

StepMetrics measure(std::size_t step, const std::vector<Hypothesis>& hs, std::uint64_t combinations,
                    std::uint64_t elapsed_us);

/// Hypotheses explaining observations 1..step, each exactly once.
struct HypothesisSet {
  std::size_t step = 0;
  std::vector<Hypothesis> hypotheses;

  // H_0: the single empty hypothesis with weight 1.
  static HypothesisSet initial();
};

/// No hypothesis explains the observation prefix ending at `step`.
class RecognitionFailure : public std::runtime_error {
 public:
  explicit RecognitionFailure(std::size_t step);
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

}  // namespace planrec
