#include <sstream>
#include <string>

#include "doctest.h"
#include "fixtures.hpp"
#include "planrec/domain.hpp"
#include "planrec/harness.hpp"

using namespace planrec;

namespace {

const PlanLibrary& running() {
  static const PlanLibrary lib = fixtures::library(fixtures::kRunningExample);
  return lib;
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

std::string without_elapsed(const std::string& csv) {
  std::string out;
  for (const auto& line : lines(csv)) {
    // elapsed_us is the second-to-last column.
    const auto last = line.rfind(',');
    const auto prev = line.rfind(',', last - 1);
    out += line.substr(0, prev) + line.substr(last) + '\n';
  }
  return out;
}

RecognitionRequest slim(std::optional<std::size_t> k) {
  RecognitionRequest r;
  r.engine = Engine::Slim;
  r.k = k;
  return r;
}

}  // namespace

TEST_CASE("predicted_bound") {
  CHECK(predicted_bound(Engine::Phatt, 1, 1, 5) == 1.0);
  CHECK(predicted_bound(Engine::Phatt, 2, 3, 2) == doctest::Approx(36.0));
  CHECK(predicted_bound(Engine::Slim, 2, 3, 2) == doctest::Approx(36.0));
  CHECK(predicted_bound(Engine::Slim, 2, 3, 6) < predicted_bound(Engine::Phatt, 2, 3, 6));
  CHECK(predicted_bound(Engine::Phatt, 0, 0, 0) == 1.0);
}

TEST_CASE("algorithm tags") {
  CHECK(algorithm_tag(RecognitionRequest{}) == "phatt");
  CHECK(algorithm_tag(slim(0)) == "slim-0");
  CHECK(algorithm_tag(slim(100)) == "slim-100");
  CHECK(algorithm_tag(slim(std::nullopt)) == "slim-all");
}

TEST_CASE("parse_observations") {
  const auto& lib = running();
  CHECK(parse_observations(lib, " a\nc  b\t").size() == 3);
  CHECK(parse_observations(lib, "").empty());
  CHECK_THROWS_AS(parse_observations(lib, "a q"), LibraryError);
  CHECK_THROWS_AS(parse_observations(lib, "a A"), LibraryError);
}

TEST_CASE("run_recognition") {
  const auto& lib = running();
  const auto seq = fixtures::seq(lib, "a c b");
  SUBCASE("slim k = 0 returns the local hypotheses") {
    const auto out = run_recognition(lib, seq, slim(0), "i");
    CHECK(out.record.ok());
    CHECK(out.record.final_hypotheses == 4);
    CHECK(out.record.goal_rooted == 0);
    CHECK(out.hypotheses.size() == 4);
    CHECK(out.record.steps.size() == 3);
    CHECK(out.record.algorithm == "slim-0");
  }
  SUBCASE("phatt") {
    const auto out = run_recognition(lib, seq, RecognitionRequest{}, "i");
    CHECK(out.record.final_hypotheses == 2);
    CHECK(out.record.goal_rooted == 2);
  }
  SUBCASE("slim all agrees with phatt") {
    const auto a = run_recognition(lib, seq, slim(std::nullopt));
    const auto b = run_recognition(lib, seq, RecognitionRequest{});
    CHECK(fixtures::canonical_set(lib, a.hypotheses) == fixtures::canonical_set(lib, b.hypotheses));
  }
  SUBCASE("failure is recorded, not thrown") {
    const auto out = run_recognition(lib, fixtures::seq(lib, "a b b"), RecognitionRequest{});
    CHECK_FALSE(out.record.ok());
    CHECK(out.record.failed_step == 3);
    CHECK(out.record.steps.size() == 2);
    CHECK(out.hypotheses.empty());
  }
}

TEST_CASE("metric step fields match a recount") {
  const auto& lib = running();
  const auto out = run_recognition(lib, fixtures::seq(lib, "a c b"), slim(0));
  std::uint64_t frontier = 0;
  for (const auto& h : out.hypotheses) frontier += h.open_count();
  CHECK(out.record.steps.back().frontier == frontier);
  CHECK(out.record.steps.back().hypotheses == 4);
  CHECK(out.record.steps.back().step == 3);
}

TEST_CASE("emit_hypotheses") {
  const auto& lib = running();
  const auto out = run_recognition(lib, fixtures::seq(lib, "a c b"), slim(0));
  std::ostringstream a, b;
  emit_hypotheses(lib, out.hypotheses, a);
  emit_hypotheses(lib, out.hypotheses, b);
  CHECK(a.str() == b.str());
  const auto ls = lines(a.str());
  REQUIRE(ls.size() == 4);
  CHECK(ls[0].rfind("1\t", 0) == 0);
  std::ostringstream empty;
  emit_hypotheses(lib, {}, empty);
  CHECK(empty.str().empty());
}

TEST_CASE("benchmark rows") {
  DomainParams p;
  p.ordered_fraction = 0.0;
  const PlanLibrary lib = generate_domain(p);
  std::vector<BenchmarkInstance> instances;
  for (std::uint64_t i = 0; i < 3; ++i) {
    instances.push_back({"instance_" + std::to_string(i), simulate_agent(lib, 100 + i)});
  }
  BenchmarkPlan plan;
  plan.engines = {Engine::Phatt, Engine::Slim};
  const auto records = run_benchmark(lib, instances, plan);
  REQUIRE(records.size() == 6);
  CHECK(records[0].instance == "instance_0");
  CHECK(records[0].algorithm == "phatt");
  CHECK(records[1].algorithm == "slim-0");

  std::ostringstream csv;
  write_metrics(lib, records, csv);
  const auto ls = lines(csv.str());
  REQUIRE(ls.size() == 55);
  CHECK(ls[0] == kMetricsHeader);
  for (std::size_t i = 1; i < ls.size(); ++i) CHECK(ls[i].substr(ls[i].rfind(',') + 1) == "ok");

  std::ostringstream again;
  write_metrics(lib, run_benchmark(lib, instances, plan), again);
  CHECK(without_elapsed(csv.str()) == without_elapsed(again.str()));

  std::ostringstream summary;
  write_summary(records, summary);
  CHECK(lines(summary.str()).size() == 7);
}

TEST_CASE("failed runs end with a failed row") {
  const auto& lib = running();
  const auto rec = run_recognition(lib, fixtures::seq(lib, "a b b"), RecognitionRequest{}, "x").record;
  std::ostringstream csv;
  write_metrics(lib, {rec}, csv, false);
  const auto ls = lines(csv.str());
  REQUIRE(ls.size() == 3);
  CHECK(ls[2] == "x,phatt,3,0,0,0,0,0,0,failed");
}

TEST_CASE("several k values share one bottom-up run") {
  const auto& lib = running();
  BenchmarkPlan plan;
  plan.engines = {Engine::Slim};
  plan.k_values = {0, 1, std::nullopt};
  const auto records = run_benchmark(lib, {{"r", fixtures::seq(lib, "a c b")}}, plan);
  REQUIRE(records.size() == 3);
  CHECK(records[0].algorithm == "slim-0");
  CHECK(records[1].algorithm == "slim-1");
  CHECK(records[2].algorithm == "slim-all");
  CHECK(records[2].goal_rooted == 2);
  for (const auto& r : records) CHECK(r.final_hypotheses == 4);
}
