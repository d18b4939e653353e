#include "atos/harness/bench.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "atos/baselines.hpp"
#include "atos/multi.hpp"
#include "atos/solver.hpp"

namespace atos {

namespace {

constexpr const char* kVersion = "0.1.0";
constexpr const char* kCsvHeader = "iter,wall_ns,step_size,n_grad,n_func,n_prox,primal,residual,subopt";

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& s) {
  if (s == "inf") return kInf;
  if (s == "-inf") return -kInf;
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  std::size_t pos = 0;
  const double v = std::stod(s, &pos);
  if (pos != s.size()) throw std::invalid_argument("bad number in CSV: " + s);
  return v;
}

nlohmann::json finite_or_null(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

double get_double_or(const nlohmann::json& j, const char* key, double fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  return j.at(key).get<double>();
}

}  // namespace

SolverKind parse_solver_kind(const std::string& name) {
  if (name == "atos-v1") return SolverKind::AtosV1;
  if (name == "atos-v2") return SolverKind::AtosV2;
  if (name == "tos-fixed") return SolverKind::TosFixed;
  if (name == "pdhg") return SolverKind::Pdhg;
  throw std::invalid_argument("unknown solver: " + name);
}

std::string to_string(SolverKind kind) {
  switch (kind) {
    case SolverKind::AtosV1: return "atos-v1";
    case SolverKind::AtosV2: return "atos-v2";
    case SolverKind::TosFixed: return "tos-fixed";
    case SolverKind::Pdhg: return "pdhg";
  }
  throw std::invalid_argument("unknown solver kind");
}

SolverSpec solver_from_json(const nlohmann::json& j) {
  SolverSpec s;
  try {
    if (j.is_string()) {
      s.kind = parse_solver_kind(j.get<std::string>());
      return s;
    }
    s.kind = parse_solver_kind(j.at("solver").get<std::string>());
    s.label = j.value("label", std::string());
    s.tau = j.value("tau", 0.7);
    if (j.contains("gamma0")) s.gamma0 = j.at("gamma0").get<double>();
    s.step_scale = j.value("step_scale", 1.0);
    s.beta = j.value("beta", 0.5);
    if (j.contains("tol")) s.tol = j.at("tol").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("invalid solver spec: ") + e.what());
  }
  return s;
}

nlohmann::json solver_to_json(const SolverSpec& s) {
  nlohmann::json j;
  j["solver"] = to_string(s.kind);
  j["label"] = s.name();
  j["tau"] = s.tau;
  if (s.gamma0) j["gamma0"] = *s.gamma0;
  j["step_scale"] = s.step_scale;
  j["beta"] = s.beta;
  if (s.tol) j["tol"] = *s.tol;
  return j;
}

SolverRun run_solver(const BuiltProblem& problem, const SolverSpec& solver, const Budget& budget) {
  const Index p = problem.meta.dim;
  const Vector zero = Vector::Zero(p);
  const double tol = solver.tol.value_or(budget.tol);
  const double L = problem.meta.L_f;
  SolverRun run;
  run.solver = solver.name();
  const auto start = std::chrono::steady_clock::now();

  auto atos_config = [&](Variant v) {
    AtosConfig c;
    c.variant = v;
    c.tau = solver.tau;
    c.gamma0 = solver.gamma0;
    c.max_iter = budget.max_iter;
    c.max_seconds = budget.max_seconds;
    c.tol = tol;
    return c;
  };
  auto take = [&](AtosResult r) {
    run.trace = std::move(r.trace);
    run.x = std::move(r.x);
    run.converged = r.converged;
    run.iterations = r.iterations;
  };

  switch (solver.kind) {
    case SolverKind::AtosV1:
    case SolverKind::AtosV2: {
      const AtosConfig c =
          atos_config(solver.kind == SolverKind::AtosV1 ? Variant::V1 : Variant::V2);
      take(problem.is_multi() ? multi_solve(problem.multi(), zero, zero, c)
                              : solve(problem.composite(), zero, zero, c));
      break;
    }
    case SolverKind::TosFixed: {
      require_positive("L_f for the fixed step", L);
      require_positive("step_scale", solver.step_scale);
      if (problem.is_multi()) {
        AtosConfig c = atos_config(Variant::V1);
        c.line_search = false;
        c.report_best_of_last_and_ergodic = false;
        c.gamma0 = solver.step_scale * static_cast<double>(problem.multi().k()) / L;
        take(multi_solve(problem.multi(), zero, zero, c));
      } else {
        BaselineConfig c{budget.max_iter, tol, budget.max_seconds, true};
        BaselineResult r = tos_fixed_solve(problem.composite(), zero, solver.step_scale / L, c);
        run.trace = std::move(r.trace);
        run.x = std::move(r.x);
        run.converged = r.converged;
        run.iterations = r.iterations;
      }
      break;
    }
    case SolverKind::Pdhg: {
      if (problem.is_multi()) {
        throw std::invalid_argument("pdhg needs a three-term problem");
      }
      PdhgConfig c;
      c.beta = solver.beta;
      c.L_f = L;
      c.max_iter = budget.max_iter;
      c.tol = tol;
      c.max_seconds = budget.max_seconds;
      BaselineResult r = pdhg_solve(problem.composite(), zero, zero, c);
      run.trace = std::move(r.trace);
      run.x = std::move(r.x);
      run.converged = r.converged;
      run.iterations = r.iterations;
      break;
    }
  }
  run.final_primal = problem.primal(run.x);
  run.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return run;
}

void backfill_suboptimality(Trace& trace, double best) {
  for (TraceRecord& r : trace) r.subopt = r.primal - best;
}

RunArtifact run_benchmark(const std::vector<ProblemSpec>& problems,
                          const std::vector<SolverSpec>& solvers, const Budget& budget,
                          const BenchOptions& options) {
  if (problems.empty()) throw std::invalid_argument("benchmark needs at least one problem");
  if (solvers.empty()) throw std::invalid_argument("benchmark needs at least one solver");
  RunArtifact art;
  art.solvers = solvers;
  art.budget = budget;
  art.options = options;

  std::vector<BuiltProblem> built;
  for (const ProblemSpec& s : problems) {
    built.push_back(build_problem(s));
    art.problems.push_back(built.back().meta.spec);
  }

  const std::size_t cells = problems.size() * solvers.size();
  art.runs.resize(cells);
  std::vector<std::exception_ptr> errors(cells);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t c = next++; c < cells; c = next++) {
      try {
        art.runs[c] = run_solver(built[c / solvers.size()], solvers[c % solvers.size()], budget);
        art.runs[c].problem_index = c / solvers.size();
      } catch (...) {
        errors[c] = std::current_exception();
      }
    }
  };
  const unsigned n_threads = std::max(1u, std::min<unsigned>(options.threads, cells));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  art.best_primal.assign(problems.size(), kInf);
  for (const SolverRun& r : art.runs) {
    for (const TraceRecord& t : r.trace) {
      if (std::isfinite(t.primal)) {
        art.best_primal[r.problem_index] = std::min(art.best_primal[r.problem_index], t.primal);
      }
    }
  }
  for (SolverRun& r : art.runs) {
    if (!options.record_wall_time) {
      for (TraceRecord& t : r.trace) t.wall_ns = 0;
    }
    backfill_suboptimality(r.trace, art.best_primal[r.problem_index]);
  }
  return art;
}

RunArtifact run_benchmark_from_json(const nlohmann::json& matrix) {
  if (!matrix.is_object()) throw std::invalid_argument("bench matrix must be a JSON object");
  std::vector<ProblemSpec> problems;
  std::vector<SolverSpec> solvers;
  Budget budget;
  BenchOptions options;
  try {
    for (const auto& p : matrix.at("problems")) problems.push_back(spec_from_json(p));
    for (const auto& s : matrix.at("solvers")) solvers.push_back(solver_from_json(s));
    if (matrix.contains("budget")) {
      const auto& b = matrix.at("budget");
      budget.max_iter = b.value("max_iter", budget.max_iter);
      budget.max_seconds = get_double_or(b, "max_seconds", kInf);
      budget.tol = b.value("tol", 0.0);
    }
    if (matrix.contains("options")) {
      const auto& o = matrix.at("options");
      options.record_wall_time = o.value("record_wall_time", true);
      options.threads = o.value("threads", 1u);
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("invalid bench matrix: ") + e.what());
  }
  return run_benchmark(problems, solvers, budget, options);
}

std::string trace_to_csv(const Trace& trace) {
  std::string out = kCsvHeader;
  out += '\n';
  for (const TraceRecord& r : trace) {
    out += std::to_string(r.iter) + ',' + std::to_string(r.wall_ns) + ',' +
           format_double(r.step_size) + ',' + std::to_string(r.n_grad) + ',' +
           std::to_string(r.n_func) + ',' + std::to_string(r.n_prox) + ',' +
           format_double(r.primal) + ',' + format_double(r.residual) + ',' +
           (r.subopt ? format_double(*r.subopt) : std::string()) + '\n';
  }
  return out;
}

Trace trace_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) {
    throw std::invalid_argument("trace CSV: unexpected header");
  }
  Trace trace;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    if (!line.empty() && line.back() == ',') f.emplace_back();
    if (f.size() != 9) throw std::invalid_argument("trace CSV: expected 9 fields: " + line);
    TraceRecord r;
    r.iter = std::stoull(f[0]);
    r.wall_ns = std::stoll(f[1]);
    r.step_size = parse_double(f[2]);
    r.n_grad = std::stoull(f[3]);
    r.n_func = std::stoull(f[4]);
    r.n_prox = std::stoull(f[5]);
    r.primal = parse_double(f[6]);
    r.residual = parse_double(f[7]);
    if (!f[8].empty()) r.subopt = parse_double(f[8]);
    trace.push_back(r);
  }
  return trace;
}

std::string csv_filename(const RunArtifact& run, std::size_t index) {
  const SolverRun& r = run.runs.at(index);
  std::string name;
  for (char c : r.solver) name += std::isalnum(static_cast<unsigned char>(c)) || c == '-' ? c : '_';
  return "p" + std::to_string(r.problem_index) + "_" + name + ".csv";
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

void write_run(const RunArtifact& run, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());

  nlohmann::json m;
  m["format"] = "atos-bench";
  m["version"] = kVersion;
  m["created_unix_s"] = std::chrono::duration_cast<std::chrono::seconds>(
                            std::chrono::system_clock::now().time_since_epoch())
                            .count();
  m["problems"] = nlohmann::json::array();
  for (const auto& p : run.problems) m["problems"].push_back(spec_to_json(p));
  m["solvers"] = nlohmann::json::array();
  for (const auto& s : run.solvers) m["solvers"].push_back(solver_to_json(s));
  m["budget"] = {{"max_iter", run.budget.max_iter},
                 {"max_seconds", finite_or_null(run.budget.max_seconds)},
                 {"tol", run.budget.tol}};
  m["options"] = {{"record_wall_time", run.options.record_wall_time},
                  {"threads", run.options.threads}};
  m["runs"] = nlohmann::json::array();
  double total = 0.0;
  for (std::size_t i = 0; i < run.runs.size(); ++i) {
    const SolverRun& r = run.runs[i];
    const std::string file = csv_filename(run, i);
    write_text_file(dir / file, trace_to_csv(r.trace));
    total += r.wall_seconds;
    m["runs"].push_back({{"problem", r.problem_index},
                         {"solver", r.solver},
                         {"csv", file},
                         {"iterations", r.iterations},
                         {"converged", r.converged},
                         {"final_primal", finite_or_null(r.final_primal)},
                         {"wall_seconds", r.wall_seconds}});
  }
  m["best_primal"] = nlohmann::json::array();
  for (double b : run.best_primal) m["best_primal"].push_back(finite_or_null(b));
  m["wall_clock_total_s"] = total;
  write_text_file(dir / "manifest.json", m.dump(2) + "\n");
}

RunArtifact read_run(const std::filesystem::path& dir) {
  const auto path = dir / "manifest.json";
  nlohmann::json m;
  try {
    m = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("invalid manifest " + path.string() + ": " + e.what());
  }
  RunArtifact art;
  try {
    for (const auto& p : m.at("problems")) art.problems.push_back(spec_from_json(p));
    for (const auto& s : m.at("solvers")) art.solvers.push_back(solver_from_json(s));
    for (const auto& r : m.at("runs")) {
      SolverRun run;
      run.problem_index = r.at("problem").get<std::size_t>();
      run.solver = r.at("solver").get<std::string>();
      run.iterations = r.value("iterations", std::uint64_t{0});
      run.converged = r.value("converged", false);
      run.final_primal = get_double_or(r, "final_primal", kInf);
      run.wall_seconds = r.value("wall_seconds", 0.0);
      run.trace = trace_from_csv(read_text_file(dir / r.at("csv").get<std::string>()));
      art.runs.push_back(std::move(run));
    }
    for (const auto& b : m.at("best_primal")) {
      art.best_primal.push_back(b.is_null() ? kInf : b.get<double>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("invalid manifest " + path.string() + ": " + e.what());
  }
  return art;
}

}  // namespace atos
