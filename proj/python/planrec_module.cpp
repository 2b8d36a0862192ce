#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <algorithm>
#include <memory>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "planrec/domain.hpp"
#include "planrec/grammar.hpp"
#include "planrec/harness.hpp"
#include "planrec/plan_tree.hpp"

namespace py = pybind11;
using namespace planrec;

namespace {

using LibraryPtr = std::shared_ptr<PlanLibrary>;

std::vector<SymbolId> symbols_of(const PlanLibrary& lib, const std::vector<std::string>& names) {
  std::vector<SymbolId> out;
  for (const auto& n : names) {
    const SymbolId id = lib.id_of(n);
    if (!lib.is_terminal(id)) {
      throw LibraryError(LibraryErrorKind::WrongSymbolKind, "observation '" + n + "' is not a terminal");
    }
    out.push_back(id);
  }
  return out;
}

std::vector<std::string> names_of(const PlanLibrary& lib, std::span<const SymbolId> ids) {
  std::vector<std::string> out;
  for (SymbolId id : ids) out.push_back(lib.name(id));
  return out;
}

struct RecognitionResult {
  std::string algorithm;
  // (weight, canonical form), weight descending then canonical form.
  std::vector<std::pair<double, std::string>> hypotheses;
  std::size_t goal_rooted = 0;
  std::size_t failed_step = 0;
  std::vector<py::dict> steps;
};

RecognitionResult recognize(const LibraryPtr& lib, const std::vector<std::string>& observations,
                            const std::string& algorithm, std::optional<std::size_t> k, std::size_t max_depth,
                            bool prune) {
  RecognitionRequest req;
  if (algorithm == "phatt") {
    req.engine = Engine::Phatt;
  } else if (algorithm == "slim") {
    req.engine = Engine::Slim;
  } else {
    throw py::value_error("algorithm must be 'phatt' or 'slim'");
  }
  req.k = k;
  req.max_depth = max_depth;
  req.prune = prune;
  const auto obs = symbols_of(*lib, observations);

  RecognitionOutcome out;
  {
    py::gil_scoped_release release;
    out = run_recognition(*lib, obs, req);
  }
  RecognitionResult r;
  r.algorithm = out.record.algorithm;
  r.goal_rooted = out.record.goal_rooted;
  r.failed_step = out.record.failed_step;
  for (const Hypothesis& h : out.hypotheses) r.hypotheses.emplace_back(h.weight, canonical_form(*lib, h));
  std::sort(r.hypotheses.begin(), r.hypotheses.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  for (const StepMetrics& m : out.record.steps) {
    py::dict d;
    d["step"] = m.step;
    d["hypotheses"] = m.hypotheses;
    d["combinations"] = m.combinations;
    d["frontier"] = m.frontier;
    d["max_depth"] = m.max_depth;
    d["elapsed_us"] = m.elapsed_us;
    r.steps.push_back(std::move(d));
  }
  return r;
}

}  // namespace

PYBIND11_MODULE(_planrec, m) {
  m.doc() = "Plan recognition engines (PHATT-style and SLIM) over plan libraries";

  static py::exception<LibraryError> library_error(m, "LibraryError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const LibraryError& e) {
      PyErr_SetString(library_error.ptr(), e.what());
    }
  });

  py::class_<PlanLibrary, std::shared_ptr<PlanLibrary>>(m, "Library")
      .def("serialize", [](const PlanLibrary& lib) { return serialize_library(lib); })
      .def_property_readonly("terminals",
                             [](const PlanLibrary& lib) {
                               std::vector<std::string> out;
                               for (const Symbol& s : lib.symbols()) {
                                 if (s.terminal()) out.push_back(s.name);
                               }
                               return out;
                             })
      .def_property_readonly("goals", [](const PlanLibrary& lib) { return names_of(lib, lib.goals()); })
      .def_property_readonly("rule_count", [](const PlanLibrary& lib) { return lib.rules().size(); })
      .def("stats",
           [](const PlanLibrary& lib) {
             const DomainStats s = library_stats(lib);
             py::dict d;
             d["complex_actions"] = s.complex_actions;
             d["rules"] = s.rules;
             d["plan_leaf_count"] = s.plan_leaf_count;
             return d;
           })
      .def("__repr__", [](const PlanLibrary& lib) {
        return "<Library " + std::to_string(lib.symbol_count()) + " symbols, " +
               std::to_string(lib.rules().size()) + " rules>";
      });

  py::class_<RecognitionResult>(m, "RecognitionResult")
      .def_readonly("algorithm", &RecognitionResult::algorithm)
      .def_readonly("hypotheses", &RecognitionResult::hypotheses)
      .def_readonly("goal_rooted", &RecognitionResult::goal_rooted)
      .def_readonly("failed_step", &RecognitionResult::failed_step)
      .def_readonly("steps", &RecognitionResult::steps)
      .def_property_readonly("ok", [](const RecognitionResult& r) { return r.failed_step == 0; });

  m.def(
      "parse_library", [](const std::string& text) { return std::make_shared<PlanLibrary>(parse_library(text)); },
      py::arg("text"), "Parse a library from its text format; raises LibraryError.");

  m.def(
      "generate",
      [](std::size_t goals, std::size_t and_branch, std::size_t or_branch, std::size_t depth,
         std::size_t terminals, double ordered_fraction, std::uint64_t seed, bool share_subtrees) {
        DomainParams p;
        p.goals = goals;
        p.and_branch = and_branch;
        p.or_branch = or_branch;
        p.depth = depth;
        p.terminals = terminals;
        p.ordered_fraction = ordered_fraction;
        p.seed = seed;
        p.share_subtrees = share_subtrees;
        return std::make_shared<PlanLibrary>(generate_domain(p));
      },
      py::kw_only(), py::arg("goals") = 5, py::arg("and_branch") = 3, py::arg("or_branch") = 2,
      py::arg("depth") = 3, py::arg("terminals") = 100, py::arg("ordered_fraction") = 1.0, py::arg("seed") = 7,
      py::arg("share_subtrees") = false, "Generate a synthetic AND/OR library; deterministic in the seed.");

  m.def(
      "simulate",
      [](const LibraryPtr& lib, std::uint64_t seed) { return names_of(*lib, simulate_agent(*lib, seed)); },
      py::arg("library"), py::arg("seed"), "Sample one complete observation sequence.");

  m.def("recognize", &recognize, py::arg("library"), py::arg("observations"), py::kw_only(),
        py::arg("algorithm") = "slim", py::arg("k") = std::optional<std::size_t>{0}, py::arg("max_depth") = 0,
        py::arg("prune") = true,
        "Recognize a sequence of terminal names. k=None compiles every local hypothesis.");
}
