#include "planrec/recognition.hpp"

#include <algorithm>

namespace planrec {

StepMetrics measure(std::size_t step, const std::vector<Hypothesis>& hs, std::uint64_t combinations,
                    std::uint64_t elapsed_us) {
  StepMetrics m;
  m.step = step;
  m.hypotheses = hs.size();
  m.combinations = combinations;
  m.elapsed_us = elapsed_us;
  for (const auto& h : hs) {
    m.frontier += h.open_count();
    m.max_depth = std::max(m.max_depth, h.max_depth());
  }
  return m;
}

HypothesisSet HypothesisSet::initial() {
  HypothesisSet set;
  set.hypotheses.push_back(Hypothesis{});
  return set;
}

RecognitionFailure::RecognitionFailure(std::size_t step)
    : std::runtime_error("no hypothesis explains observation " + std::to_string(step)),
      step_(step) {}

}  // namespace planrec
