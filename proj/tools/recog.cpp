// Command-line front end: recognition runs, domain generation, agent
// simulation and benchmarking.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "planrec/domain.hpp"
#include "planrec/grammar.hpp"
#include "planrec/harness.hpp"

namespace fs = std::filesystem;
using namespace planrec;

namespace {

enum Exit { kOk = 0, kUsage = 1, kRecognitionFailure = 2, kParseError = 3, kIoError = 4 };

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("error while reading " + path);
  return buf.str();
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  return out;
}

void finish(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw IoError("error while writing " + path);
}

PlanLibrary load_library(const std::string& path) { return parse_library(read_file(path)); }

std::optional<std::size_t> parse_k(const std::string& text) {
  if (text == "all") return std::nullopt;
  std::size_t used = 0;
  unsigned long long value = 0;
  try {
    value = std::stoull(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || text.empty() || text[0] == '-') {
    throw CLI::ValidationError("--k", "expected a non-negative integer or 'all', got '" + text + "'");
  }
  return static_cast<std::size_t>(value);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string summary_path(const std::string& metrics_path) {
  fs::path p(metrics_path);
  return (p.parent_path() / (p.stem().string() + ".summary.csv")).string();
}

struct RecognizeArgs {
  std::string library;
  std::string observations;
  std::string algorithm = "phatt";
  std::string k = "0";
  std::size_t max_depth = 0;
  std::string emit;
  std::string metrics;
  bool no_prune = false;
};

int cmd_recognize(const RecognizeArgs& a) {
  const PlanLibrary lib = load_library(a.library);
  const auto observations = parse_observations(lib, read_file(a.observations));
  RecognitionRequest request;
  request.engine = a.algorithm == "slim" ? Engine::Slim : Engine::Phatt;
  request.k = parse_k(a.k);
  request.max_depth = a.max_depth;
  request.prune = !a.no_prune;

  const RecognitionOutcome outcome =
      run_recognition(lib, observations, request, fs::path(a.observations).stem().string());
  const RunRecord& r = outcome.record;
  if (!a.metrics.empty()) {
    auto out = open_output(a.metrics);
    write_metrics(lib, {r}, out);
    finish(out, a.metrics);
  }
  if (!r.ok()) {
    std::cerr << "recognition failure: no hypothesis explains observation " << r.failed_step << "\n";
    return kRecognitionFailure;
  }
  if (!a.emit.empty()) {
    auto out = open_output(a.emit);
    emit_hypotheses(lib, outcome.hypotheses, out);
    finish(out, a.emit);
  }
  std::cout << r.algorithm << ": " << observations.size() << " observations, " << r.final_hypotheses
            << " hypotheses";
  if (request.engine == Engine::Slim && request.k != std::optional<std::size_t>{0}) {
    std::cout << ", " << r.goal_rooted << " goal-rooted";
  }
  std::cout << ", " << r.total_us() << " us\n";
  return kOk;
}

int cmd_generate(const DomainParams& params, const std::string& out_path) {
  const PlanLibrary lib = generate_domain(params);
  auto out = open_output(out_path);
  out << "# generated: goals " << params.goals << ", and-branch " << params.and_branch
      << ", or-branch " << params.or_branch << ", depth " << params.depth << ", terminals "
      << params.terminals << ", ordered-fraction " << params.ordered_fraction << ", seed "
      << params.seed << (params.share_subtrees ? ", shared subtrees" : "") << "\n";
  out << serialize_library(lib);
  finish(out, out_path);
  const DomainStats stats = library_stats(lib);
  std::cout << "complex actions " << stats.complex_actions << ", rules " << stats.rules
            << ", plan leaves ";
  if (stats.plan_leaf_count) {
    std::cout << *stats.plan_leaf_count;
  } else {
    std::cout << "irregular";
  }
  std::cout << "\n";
  return kOk;
}

int cmd_simulate(const std::string& library, std::uint64_t seed, std::size_t count,
                 const std::string& dir) {
  const PlanLibrary lib = load_library(library);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir + ": " + ec.message());
  const std::size_t width = std::max<std::size_t>(3, std::to_string(count == 0 ? 0 : count - 1).size());
  for (std::size_t i = 0; i < count; ++i) {
    std::string index = std::to_string(i);
    index.insert(0, width - index.size(), '0');
    const std::string path = (fs::path(dir) / ("instance_" + index + ".txt")).string();
    auto out = open_output(path);
    const auto seq = simulate_agent(lib, seed + i);
    for (std::size_t k = 0; k < seq.size(); ++k) out << (k ? " " : "") << lib.name(seq[k]);
    out << "\n";
    finish(out, path);
  }
  std::cout << "wrote " << count << " sequences to " << dir << "\n";
  return kOk;
}

struct BenchArgs {
  std::string library;
  std::string obs_dir;
  std::string algorithms = "phatt,slim";
  std::string k_list = "0";
  std::string metrics;
  std::size_t max_depth = 0;
};

int cmd_bench(const BenchArgs& a) {
  const PlanLibrary lib = load_library(a.library);
  BenchmarkPlan plan;
  plan.max_depth = a.max_depth;
  for (const auto& name : split_list(a.algorithms)) {
    if (name == "phatt") {
      plan.engines.push_back(Engine::Phatt);
    } else if (name == "slim") {
      plan.engines.push_back(Engine::Slim);
    } else {
      throw CLI::ValidationError("--algorithms", "unknown algorithm '" + name + "'");
    }
  }
  plan.k_values.clear();
  for (const auto& k : split_list(a.k_list)) plan.k_values.push_back(parse_k(k));
  if (plan.k_values.empty()) plan.k_values.push_back(0);

  std::error_code ec;
  if (!fs::is_directory(a.obs_dir, ec)) throw IoError("not a directory: " + a.obs_dir);
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(a.obs_dir, ec)) {
    if (entry.is_regular_file() && entry.path().extension() == ".txt") files.push_back(entry.path());
  }
  if (ec) throw IoError("cannot list " + a.obs_dir + ": " + ec.message());
  if (files.empty()) throw IoError("no .txt observation files in " + a.obs_dir);
  std::sort(files.begin(), files.end());

  std::vector<BenchmarkInstance> instances;
  for (const auto& f : files) {
    instances.push_back({f.stem().string(), parse_observations(lib, read_file(f.string()))});
  }
  const auto records = run_benchmark(lib, instances, plan);

  auto out = open_output(a.metrics);
  write_metrics(lib, records, out);
  finish(out, a.metrics);
  const std::string summary = summary_path(a.metrics);
  auto sum = open_output(summary);
  write_summary(records, sum);
  finish(sum, summary);

  // Per-step means across instances, one block per algorithm.
  struct Acc {
    double hypotheses = 0, combinations = 0, elapsed = 0;
    std::size_t n = 0;
  };
  std::map<std::string, std::map<std::size_t, Acc>> means;
  std::vector<std::string> order;
  std::size_t failures = 0;
  for (const auto& r : records) {
    if (!means.count(r.algorithm)) order.push_back(r.algorithm);
    auto& per_step = means[r.algorithm];
    failures += r.ok() ? 0 : 1;
    for (const auto& m : r.steps) {
      auto& acc = per_step[m.step];
      acc.hypotheses += static_cast<double>(m.hypotheses);
      acc.combinations += static_cast<double>(m.combinations);
      acc.elapsed += static_cast<double>(m.elapsed_us);
      ++acc.n;
    }
  }
  std::printf("%-10s %4s %12s %14s %12s\n", "algorithm", "step", "hypotheses", "combinations",
              "elapsed_us");
  for (const auto& alg : order) {
    for (const auto& [step, acc] : means[alg]) {
      const double n = static_cast<double>(acc.n);
      std::printf("%-10s %4zu %12.1f %14.1f %12.1f\n", alg.c_str(), step, acc.hypotheses / n,
                  acc.combinations / n, acc.elapsed / n);
    }
  }
  std::cout << records.size() << " runs, " << failures << " failed; metrics in " << a.metrics
            << ", summary in " << summary << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Incremental plan recognition over hierarchical plan libraries"};
  app.require_subcommand(1);

  RecognizeArgs rec;
  auto* recognize = app.add_subcommand("recognize", "Recognize one observation sequence");
  recognize->add_option("--library", rec.library, "Plan library file")->required();
  recognize->add_option("--observations", rec.observations, "Observation file")->required();
  recognize->add_option("--algorithm", rec.algorithm, "phatt or slim")
      ->check(CLI::IsMember({"phatt", "slim"}));
  recognize->add_option("--k", rec.k, "Local hypotheses to compile top-down (INT or all)");
  recognize->add_option("--max-depth", rec.max_depth, "Leftmost-tree depth bound (0 = default)");
  recognize->add_option("--emit-hypotheses", rec.emit, "Write final hypotheses here");
  recognize->add_option("--metrics-csv", rec.metrics, "Write per-step metrics here");
  recognize->add_flag("--no-prune", rec.no_prune, "Keep fragments not reachable from a goal");

  DomainParams params;
  std::string gen_out;
  auto* generate = app.add_subcommand("generate", "Generate a synthetic AND/OR plan library");
  generate->add_option("--goals", params.goals)->capture_default_str();
  generate->add_option("--and-branch", params.and_branch)->capture_default_str();
  generate->add_option("--or-branch", params.or_branch)->capture_default_str();
  generate->add_option("--depth", params.depth)->capture_default_str();
  generate->add_option("--terminals", params.terminals)->capture_default_str();
  generate->add_option("--ordered-fraction", params.ordered_fraction)->capture_default_str();
  generate->add_option("--seed", params.seed)->capture_default_str();
  generate->add_flag("--share-subtrees", params.share_subtrees);
  generate->add_option("--out", gen_out, "Library file to write")->required();

  std::string sim_library, sim_out;
  std::uint64_t sim_seed = 1;
  std::size_t sim_count = 1;
  auto* simulate = app.add_subcommand("simulate", "Sample observation sequences from a library");
  simulate->add_option("--library", sim_library)->required();
  simulate->add_option("--seed", sim_seed)->capture_default_str();
  simulate->add_option("--count", sim_count)->capture_default_str();
  simulate->add_option("--out", sim_out, "Directory for instance_NNN.txt files")->required();

  BenchArgs bench;
  auto* benchcmd = app.add_subcommand("bench", "Run engines over a directory of sequences");
  benchcmd->add_option("--library", bench.library)->required();
  benchcmd->add_option("--obs-dir", bench.obs_dir)->required();
  benchcmd->add_option("--algorithms", bench.algorithms, "Comma list of phatt, slim")
      ->capture_default_str();
  benchcmd->add_option("--k-list", bench.k_list, "Comma list of k values for slim (INT or all)")
      ->capture_default_str();
  benchcmd->add_option("--metrics-csv", bench.metrics)->required();
  benchcmd->add_option("--max-depth", bench.max_depth, "Leftmost-tree depth bound (0 = default)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*recognize) return cmd_recognize(rec);
    if (*generate) return cmd_generate(params, gen_out);
    if (*simulate) return cmd_simulate(sim_library, sim_seed, sim_count, sim_out);
    if (*benchcmd) return cmd_bench(bench);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIoError;
  } catch (const LibraryError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kParseError;
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
