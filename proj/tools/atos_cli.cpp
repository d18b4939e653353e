// Command-line front end: datagen, solve, bench and plot.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "atos/harness/bench.hpp"
#include "atos/harness/plot.hpp"
#include "atos/harness/problems.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace atos;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitArgument = 1;
constexpr int kExitNonconvergence = 2;

std::string vector_csv(const Vector& x) {
  std::string out;
  char buf[32];
  for (Index i = 0; i < x.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g\n", x[i]);
    out += buf;
  }
  return out;
}

nlohmann::json read_json(const fs::path& path) {
  try {
    return nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("invalid JSON in " + path.string() + ": " + e.what());
  }
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive three operator splitting: data generation, solving and benchmarks"};
  app.require_subcommand(1);

  ProblemSpec gen;
  std::string gen_kind;
  double gen_lambda = -1.0, gen_noise = -1.0;
  fs::path gen_out;
  auto* datagen = app.add_subcommand("datagen", "Generate a synthetic problem");
  datagen->add_option("--kind", gen_kind, "Problem kind")->required();
  datagen->add_option("--n", gen.n, "Samples");
  datagen->add_option("--p", gen.p, "Features");
  datagen->add_option("--rows", gen.rows, "Rows of a matrix-shaped unknown");
  datagen->add_option("--cols", gen.cols, "Columns of a matrix-shaped unknown");
  datagen->add_option("--lambda", gen_lambda, "Regularization strength");
  datagen->add_option("--corr", gen.corr, "Design correlation in [0, 1)");
  datagen->add_option("--noise-sd", gen_noise, "Noise standard deviation");
  datagen->add_option("--seed", gen.seed, "Random seed");
  datagen->add_option("--out", gen_out, "Output directory")->required();

  fs::path solve_problem, solve_out;
  std::string solve_solver = "atos-v2";
  double solve_tol = 1e-8;
  std::uint64_t solve_max_iter = 10000;
  auto* solve_cmd = app.add_subcommand("solve", "Solve one problem");
  solve_cmd->add_option("--problem", solve_problem, "Problem spec JSON")->required();
  solve_cmd->add_option("--solver", solve_solver, "atos-v1 | atos-v2 | tos-fixed | pdhg");
  solve_cmd->add_option("--tol", solve_tol, "Residual tolerance");
  solve_cmd->add_option("--max-iter", solve_max_iter, "Iteration budget");
  solve_cmd->add_option("--out", solve_out, "Output directory")->required();

  fs::path bench_matrix, bench_out;
  auto* bench = app.add_subcommand("bench", "Run a benchmark matrix");
  bench->add_option("--matrix", bench_matrix, "Benchmark matrix JSON")->required();
  bench->add_option("--out", bench_out, "Output directory")->required();

  fs::path plot_run, plot_out;
  auto* plot = app.add_subcommand("plot", "Render a benchmark run as SVG");
  plot->add_option("--run", plot_run, "Benchmark output directory")->required();
  plot->add_option("--out", plot_out, "SVG file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitArgument;
  }

  try {
    if (*datagen) {
      gen.kind = parse_problem_kind(gen_kind);
      if (gen_lambda >= 0.0) gen.lambda = gen_lambda;
      if (gen_noise >= 0.0) gen.noise_sd = gen_noise;
      const BuiltProblem bp = build_problem(gen);
      ensure_dir(gen_out);
      write_text_file(gen_out / "spec.json", spec_to_json(bp.meta.spec).dump(2) + "\n");
      write_text_file(gen_out / "truth.csv", vector_csv(bp.meta.truth));
      nlohmann::json info = {{"dim", bp.meta.dim}, {"L_f", bp.meta.L_f},
                             {"primal_at_zero", bp.primal(Vector::Zero(bp.meta.dim))}};
      if (bp.meta.beta_h) info["beta_h"] = *bp.meta.beta_h;
      write_text_file(gen_out / "info.json", info.dump(2) + "\n");
      std::cout << "wrote " << (gen_out / "spec.json").string() << "\n";
      return kExitOk;
    }
    if (*solve_cmd) {
      const BuiltProblem bp = build_problem(spec_from_json(read_json(solve_problem)));
      SolverSpec s;
      s.kind = parse_solver_kind(solve_solver);
      Budget budget;
      budget.max_iter = solve_max_iter;
      budget.tol = solve_tol;
      SolverRun run = run_solver(bp, s, budget);
      ensure_dir(solve_out);
      write_text_file(solve_out / "trace.csv", trace_to_csv(run.trace));
      write_text_file(solve_out / "solution.csv", vector_csv(run.x));
      nlohmann::json res = {{"solver", run.solver},
                            {"iterations", run.iterations},
                            {"converged", run.converged},
                            {"wall_seconds", run.wall_seconds},
                            {"problem", spec_to_json(bp.meta.spec)}};
      res["final_primal"] = std::isfinite(run.final_primal) ? nlohmann::json(run.final_primal)
                                                            : nlohmann::json(nullptr);
      write_text_file(solve_out / "result.json", res.dump(2) + "\n");
      std::cout << run.solver << ": " << run.iterations << " iterations, primal "
                << run.final_primal << (run.converged ? "" : " (not converged)") << "\n";
      return run.converged ? kExitOk : kExitNonconvergence;
    }
    if (*bench) {
      const RunArtifact art = run_benchmark_from_json(read_json(bench_matrix));
      write_run(art, bench_out);
      std::cout << "wrote " << art.runs.size() << " traces to " << bench_out.string() << "\n";
      return kExitOk;
    }
    if (*plot) {
      const RunArtifact art = read_run(plot_run);
      write_text_file(plot_out, emit_svg_plot(art));
      std::cout << "wrote " << plot_out.string() << "\n";
      return kExitOk;
    }
  } catch (const NonconvergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNonconvergence;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitArgument;
  }
  return kExitArgument;
}
