#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "atos/harness/problems.hpp"
#include "atos/trace.hpp"
#include "json.hpp"

namespace atos {

enum class SolverKind { AtosV1, AtosV2, TosFixed, Pdhg };

SolverKind parse_solver_kind(const std::string& name);
std::string to_string(SolverKind kind);

struct SolverSpec {
  SolverKind kind = SolverKind::AtosV2;
  std::string label;  // defaults to the kind name
  double tau = 0.7;
  std::optional<double> gamma0;
  double step_scale = 1.0;  // tos-fixed: gamma = step_scale / L_f
  double beta = 0.5;        // pdhg
  std::optional<double> tol;

  std::string name() const { return label.empty() ? to_string(kind) : label; }
};

SolverSpec solver_from_json(const nlohmann::json& j);
nlohmann::json solver_to_json(const SolverSpec& s);

struct Budget {
  std::uint64_t max_iter = 1000;
  double max_seconds = kInf;
  double tol = 0.0;
};

struct SolverRun {
  std::size_t problem_index = 0;
  std::string solver;
  Trace trace;
  Vector x;
  bool converged = false;
  std::uint64_t iterations = 0;
  double final_primal = kInf;
  double wall_seconds = 0.0;
};

// Runs one solver from (z0, u0) = (0, 0).
SolverRun run_solver(const BuiltProblem& problem, const SolverSpec& solver, const Budget& budget);

struct BenchOptions {
  bool record_wall_time = true;  // false writes wall_ns = 0 everywhere
  unsigned threads = 1;
};

struct RunArtifact {
  std::vector<ProblemSpec> problems;  // resolved
  std::vector<SolverSpec> solvers;
  Budget budget;
  BenchOptions options;
  std::vector<SolverRun> runs;     // ordered by (problem, solver)
  std::vector<double> best_primal;  // per problem
};

RunArtifact run_benchmark(const std::vector<ProblemSpec>& problems,
                          const std::vector<SolverSpec>& solvers, const Budget& budget,
                          const BenchOptions& options = {});

// Matrix file: {"problems": [...], "solvers": [...], "budget": {...}, "options": {...}}
RunArtifact run_benchmark_from_json(const nlohmann::json& matrix);

// Fills subopt = primal - best in place.
void backfill_suboptimality(Trace& trace, double best);

std::string trace_to_csv(const Trace& trace);
Trace trace_from_csv(const std::string& text);

std::string csv_filename(const RunArtifact& run, std::size_t index);
// Writes one CSV per run and manifest.json into dir.
void write_run(const RunArtifact& run, const std::filesystem::path& dir);
RunArtifact read_run(const std::filesystem::path& dir);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace atos
