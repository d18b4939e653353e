#include <gtest/gtest.h>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <set>
#include <sstream>

#include "atos/harness/bench.hpp"
#include "atos/harness/plot.hpp"
#include "atos/harness/problems.hpp"
#include "atos/harness/random.hpp"

namespace atos {
namespace {

namespace fs = std::filesystem;

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("atos_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

TEST(Rng, UniformRangeAndMoments) {
  Rng rng(1);
  double sum = 0.0, sq = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    const double z = rng.normal();
    sum += z;
    sq += z * z;
  }
  EXPECT_NEAR(sum / n, 0.0, 0.01);
  EXPECT_NEAR(sq / n, 1.0, 0.02);
  for (int i = 0; i < 1000; ++i) EXPECT_LT(rng.below(7), 7u);
}

TEST(Design, UncorrelatedRowsHaveIdentityCovariance) {
  const Matrix A = gen_autoregressive_design(2000, 5, 0.0, 3);
  const Matrix cov = A.transpose() * A / 2000.0;
  EXPECT_LT((cov - Matrix::Identity(5, 5)).norm(), 0.3);
}

TEST(Design, RecursionCorrelatesConsecutiveRows) {
  const Matrix A = gen_autoregressive_design(4000, 4, 0.95, 4);
  double num = 0.0, den = 0.0;
  for (Index i = 100; i < A.rows(); ++i) {
    num += A.row(i).dot(A.row(i - 1));
    den += A.row(i - 1).squaredNorm();
  }
  EXPECT_NEAR(num / den, 0.95, 0.02);
}

TEST(Design, SeedDeterminism) {
  const Matrix a = gen_autoregressive_design(30, 7, 0.95, 42);
  const Matrix b = gen_autoregressive_design(30, 7, 0.95, 42);
  const Matrix c = gen_autoregressive_design(30, 7, 0.95, 43);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
  EXPECT_THROW(gen_autoregressive_design(3, 3, 1.0, 0), std::invalid_argument);
}

double condition_number(const Matrix& A) {
  const Eigen::JacobiSVD<Matrix> svd(A);
  return svd.singularValues()(0) / svd.singularValues().tail(1)(0);
}

TEST(Design, CorrelationWorsensConditioning) {
  // Correlated rows shrink the effective sample size below p.
  const double iid = condition_number(gen_autoregressive_design(400, 65, 0.0, 5));
  const double corr = condition_number(gen_autoregressive_design(400, 65, 0.95, 5));
  EXPECT_LT(iid, 5.0);
  EXPECT_GT(corr, 4.0 * iid);
}

TEST(OverlapGroups, EighteenFeatures) {
  const auto groups = overlap_groups(18);
  ASSERT_EQ(groups.size(), 2u);
  EXPECT_EQ(groups[0].front(), 0);
  EXPECT_EQ(groups[0].back(), 9);
  EXPECT_EQ(groups[1].front(), 8);
  EXPECT_EQ(groups[1].back(), 17);
  const OverlapGroupSplit split = gen_overlap_groups(18);
  ASSERT_EQ(split.subfamilies.size(), 2u);
  EXPECT_EQ(split.subfamilies[0].groups(), std::vector<std::vector<Index>>{groups[0]});
  EXPECT_EQ(split.subfamilies[1].groups(), std::vector<std::vector<Index>>{groups[1]});
}

TEST(OverlapGroups, ListingSize) {
  EXPECT_EQ(overlap_groups(1002).size(), 125u);
  const OverlapGroupSplit split = gen_overlap_groups(1002);
  EXPECT_EQ(split.subfamilies[0].size() + split.subfamilies[1].size(), 125u);
}

TEST(OverlapGroups, SubfamiliesDisjointForAllSizes) {
  for (Index p = 10; p <= 410; p += 8) {
    const OverlapGroupSplit split = gen_overlap_groups(p);
    for (const GroupPartition& part : split.subfamilies) {
      std::set<Index> seen;
      for (const auto& g : part.groups()) {
        for (Index i : g) EXPECT_TRUE(seen.insert(i).second) << "p=" << p;
      }
    }
  }
}

TEST(OverlapGroups, RejectsUnrepresentableSizes) {
  EXPECT_THROW(overlap_groups(17), std::invalid_argument);
  EXPECT_THROW(overlap_groups(2), std::invalid_argument);
}

TEST(GroupSparseTruth, Properties) {
  const Index p = 1002;
  const OverlapGroupSplit split = gen_overlap_groups(p);
  const Vector t = gen_group_sparse_truth(split, p, 7);
  EXPECT_LE((t.array() != 0.0).count(), 100);
  EXPECT_GT((t.array() != 0.0).count(), 0);
  std::size_t chosen = 0;
  for (const auto& g : overlap_groups(p)) {
    // Coordinates 2..7 belong to this group only.
    const double v = t[g[5]];
    if (v == 0.0) continue;
    ++chosen;
    for (Index i : g) EXPECT_EQ(t[i], v);
  }
  EXPECT_EQ(chosen, 10u);
  EXPECT_EQ(t, gen_group_sparse_truth(split, p, 7));
  EXPECT_NE(t, gen_group_sparse_truth(split, p, 8));
}

TEST(ProblemSpec, JsonRoundTripAndErrors) {
  ProblemSpec s;
  s.kind = ProblemKind::NearlyIsotonicLogistic;
  s.n = 40;
  s.p = 12;
  s.lambda = 0.3;
  s.seed = 9;
  const ProblemSpec back = spec_from_json(spec_to_json(s));
  EXPECT_EQ(spec_to_json(back), spec_to_json(s));
  nlohmann::json bad = spec_to_json(s);
  bad["colour"] = 1;
  EXPECT_THROW(spec_from_json(bad), std::invalid_argument);
  EXPECT_THROW(parse_problem_kind("dispersive_sparsity"), std::invalid_argument);
  ProblemSpec neg;
  neg.kind = ProblemKind::LassoLeastSquares;
  neg.corr = 1.0;
  EXPECT_THROW(build_problem(neg), std::invalid_argument);
}

TEST(BuildProblem, EveryKind) {
  for (ProblemKind kind :
       {ProblemKind::OverlapGroupLassoLogistic, ProblemKind::Tv2dLeastSquares,
        ProblemKind::TraceL1LeastSquares, ProblemKind::NearlyIsotonicLogistic,
        ProblemKind::TrendFilterLeastSquares, ProblemKind::DoublyStochasticQp,
        ProblemKind::LassoLeastSquares}) {
    ProblemSpec s;
    s.kind = kind;
    s.seed = 2;
    if (kind == ProblemKind::OverlapGroupLassoLogistic) {
      s.n = 30;
      s.p = 26;
    }
    const BuiltProblem bp = build_problem(s);
    EXPECT_EQ(bp.meta.spec.kind, kind);
    EXPECT_TRUE(bp.meta.spec.lambda.has_value() || kind == ProblemKind::DoublyStochasticQp);
    EXPECT_GT(bp.meta.L_f, 0.0);
    Vector feasible = Vector::Zero(bp.meta.dim);
    if (kind == ProblemKind::DoublyStochasticQp) {
      feasible.setConstant(1.0 / static_cast<double>(bp.meta.rows));
    }
    EXPECT_TRUE(std::isfinite(bp.primal(feasible))) << to_string(kind);
    EXPECT_EQ(bp.is_multi(), kind == ProblemKind::TrendFilterLeastSquares);
  }
}

TEST(BuildProblem, KindSpecificShapes) {
  ProblemSpec tv;
  tv.kind = ProblemKind::Tv2dLeastSquares;
  const BuiltProblem t = build_problem(tv);
  EXPECT_EQ(t.meta.rows, 8);
  EXPECT_EQ(t.meta.dim, 64);
  EXPECT_DOUBLE_EQ(*t.meta.beta_h, 2.0 * *t.meta.spec.lambda * 8.0);

  ProblemSpec tr;
  tr.kind = ProblemKind::TraceL1LeastSquares;
  const BuiltProblem r = build_problem(tr);
  EXPECT_EQ(r.meta.spec.n, 2 * 20 * 20);
  EXPECT_DOUBLE_EQ(*r.meta.beta_h, *r.meta.spec.lambda * 20.0);

  ProblemSpec tf;
  tf.kind = ProblemKind::TrendFilterLeastSquares;
  const BuiltProblem f = build_problem(tf);
  EXPECT_EQ(f.multi().k(), 3);

  ProblemSpec ni;
  ni.kind = ProblemKind::NearlyIsotonicLogistic;
  const BuiltProblem n = build_problem(ni);
  EXPECT_DOUBLE_EQ(*n.meta.beta_h, 2.0 * *n.meta.spec.lambda * std::sqrt(50.0));

  ProblemSpec og;
  og.kind = ProblemKind::OverlapGroupLassoLogistic;
  og.n = 30;
  og.p = 26;
  og.lambda = 0.5;
  const BuiltProblem o = build_problem(og);
  // 3 groups, the odd one (1 group) goes to h.
  EXPECT_DOUBLE_EQ(*o.meta.beta_h, 0.5);
}

TEST(Calibration, SparsityBrackets) {
  for (double target : {0.5, 0.95}) {
    ProblemSpec s;
    s.kind = ProblemKind::OverlapGroupLassoLogistic;
    s.n = 60;
    s.p = 162;
    s.seed = 1;
    s.target_sparsity = target;
    const BuiltProblem bp = build_problem(s);
    ASSERT_TRUE(bp.meta.spec.lambda.has_value());
    AtosConfig cfg;
    cfg.variant = Variant::V2;
    cfg.tol = 1e-10;
    cfg.max_iter = 50000;
    const Vector zero = Vector::Zero(bp.meta.dim);
    const double zf = zero_fraction(solve(bp.composite(), zero, zero, cfg).x);
    if (target == 0.5) {
      EXPECT_GE(zf, 0.40);
      EXPECT_LE(zf, 0.60);
    } else {
      // 5% nonzeros, within [2%, 10%].
      EXPECT_GE(zf, 0.90);
      EXPECT_LE(zf, 0.98);
    }
  }
}

ProblemSpec lasso_spec(std::uint64_t seed = 1) {
  ProblemSpec s;
  s.kind = ProblemKind::LassoLeastSquares;
  s.n = 30;
  s.p = 12;
  s.seed = seed;
  return s;
}

std::vector<SolverSpec> two_solvers() {
  SolverSpec a;
  a.kind = SolverKind::AtosV2;
  SolverSpec b;
  b.kind = SolverKind::TosFixed;
  return {a, b};
}

TEST(Bench, TwoSolversWriteCsvsAndManifest) {
  Budget budget;
  budget.max_iter = 300;
  const RunArtifact art = run_benchmark({lasso_spec()}, two_solvers(), budget);
  ASSERT_EQ(art.runs.size(), 2u);
  const fs::path dir = scratch_dir("bench_two");
  write_run(art, dir);
  EXPECT_TRUE(fs::exists(dir / "manifest.json"));
  for (std::size_t i = 0; i < art.runs.size(); ++i) EXPECT_TRUE(fs::exists(dir / csv_filename(art, i)));
  const auto manifest = nlohmann::json::parse(read_text_file(dir / "manifest.json"));
  EXPECT_EQ(manifest.at("problems").size(), 1u);
  EXPECT_EQ(manifest.at("runs").size(), 2u);

  double best_final = kInf;
  for (const SolverRun& r : art.runs) {
    ASSERT_FALSE(r.trace.empty());
    for (const TraceRecord& rec : r.trace) {
      ASSERT_TRUE(rec.subopt.has_value());
      EXPECT_GE(*rec.subopt, 0.0);
    }
    double m = kInf;
    for (const TraceRecord& rec : r.trace) m = std::min(m, *rec.subopt);
    best_final = std::min(best_final, m);
  }
  EXPECT_EQ(best_final, 0.0);

  const RunArtifact back = read_run(dir);
  ASSERT_EQ(back.runs.size(), 2u);
  EXPECT_EQ(trace_to_csv(back.runs[1].trace), trace_to_csv(art.runs[1].trace));
}

TEST(Bench, EmptySolverListThrows) {
  EXPECT_THROW(run_benchmark({lasso_spec()}, {}, Budget{}), std::invalid_argument);
  EXPECT_THROW(run_benchmark({}, two_solvers(), Budget{}), std::invalid_argument);
}

TEST(Bench, CsvRoundTrip) {
  Trace t(2);
  t[0] = {1, 10, 0.5, 1, 2, 2, 3.25, 0.1, 0.75};
  t[1] = {2, 20, 1.0 / 3.0, 2, 4, 4, kInf, 1e-300, std::nullopt};
  const std::string csv = trace_to_csv(t);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "iter,wall_ns,step_size,n_grad,n_func,n_prox,primal,residual,subopt");
  const Trace back = trace_from_csv(csv);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1].step_size, 1.0 / 3.0);
  EXPECT_EQ(back[1].primal, kInf);
  EXPECT_FALSE(back[1].subopt.has_value());
  EXPECT_EQ(trace_to_csv(back), csv);
  EXPECT_THROW(trace_from_csv("bogus\n1,2"), std::invalid_argument);
}

TEST(Bench, DeterministicCsvBodies) {
  Budget budget;
  budget.max_iter = 200;
  BenchOptions opt;
  opt.record_wall_time = false;
  std::vector<SolverSpec> solvers = two_solvers();
  SolverSpec pd;
  pd.kind = SolverKind::Pdhg;
  solvers.push_back(pd);
  const std::vector<ProblemSpec> problems = {lasso_spec(1), lasso_spec(2)};
  const RunArtifact a = run_benchmark(problems, solvers, budget, opt);
  opt.threads = 3;
  const RunArtifact b = run_benchmark(problems, solvers, budget, opt);
  ASSERT_EQ(a.runs.size(), b.runs.size());
  for (std::size_t i = 0; i < a.runs.size(); ++i) {
    EXPECT_EQ(trace_to_csv(a.runs[i].trace), trace_to_csv(b.runs[i].trace));
  }
}

TEST(Bench, MatrixJson) {
  const nlohmann::json m = {
      {"problems", {spec_to_json(lasso_spec())}},
      {"solvers", {"atos-v1", {{"solver", "tos-fixed"}, {"step_scale", 1.5}, {"label", "tos-1.5"}}}},
      {"budget", {{"max_iter", 50}}},
      {"options", {{"record_wall_time", false}}}};
  const RunArtifact art = run_benchmark_from_json(m);
  ASSERT_EQ(art.runs.size(), 2u);
  EXPECT_EQ(art.runs[1].solver, "tos-1.5");
  EXPECT_EQ(art.runs[0].trace.size(), 50u);
  EXPECT_THROW(run_benchmark_from_json(nlohmann::json::object()), std::invalid_argument);
  EXPECT_THROW(parse_solver_kind("adaptive-pdhg"), std::invalid_argument);
}

TEST(Bench, MultiProblemRunsFixedStepThroughProductSpace) {
  ProblemSpec s;
  s.kind = ProblemKind::TrendFilterLeastSquares;
  s.p = 30;
  const BuiltProblem bp = build_problem(s);
  Budget budget;
  budget.max_iter = 100;
  SolverSpec t;
  t.kind = SolverKind::TosFixed;
  const SolverRun r = run_solver(bp, t, budget);
  EXPECT_EQ(r.trace.size(), 100u);
  EXPECT_EQ(r.trace.back().n_func, 0u);
  SolverSpec pd;
  pd.kind = SolverKind::Pdhg;
  EXPECT_THROW(run_solver(bp, pd, budget), std::invalid_argument);
}

TEST(Bench, WriteFailureNamesPath) {
  try {
    write_text_file("/nonexistent_dir_atos/x.csv", "a");
    FAIL();
  } catch (const std::exception& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent_dir_atos/x.csv"), std::string::npos);
  }
}

std::size_t count_elements(const boost::property_tree::ptree& t, const std::string& name) {
  std::size_t n = 0;
  for (const auto& [key, child] : t) {
    if (key == name) ++n;
    n += count_elements(child, name);
  }
  return n;
}

boost::property_tree::ptree parse_svg(const std::string& svg) {
  std::istringstream in(svg);
  boost::property_tree::ptree tree;
  boost::property_tree::read_xml(in, tree);
  return tree;
}

TEST(Plot, TwoSolversRenderTwoPolylines) {
  Budget budget;
  budget.max_iter = 100;
  const RunArtifact art = run_benchmark({lasso_spec()}, two_solvers(), budget);
  const auto tree = parse_svg(emit_svg_plot(art));
  EXPECT_EQ(tree.count("svg"), 1u);
  EXPECT_EQ(count_elements(tree, "polyline"), 2u);
  EXPECT_GE(count_elements(tree, "text"), 4u);
}

TEST(Plot, SinglePointTraceRendersMarker) {
  Budget budget;
  budget.max_iter = 1;
  SolverSpec a;
  a.kind = SolverKind::AtosV1;
  const RunArtifact art = run_benchmark({lasso_spec()}, {a}, budget);
  const auto tree = parse_svg(emit_svg_plot(art));
  EXPECT_EQ(count_elements(tree, "polyline"), 0u);
  EXPECT_GE(count_elements(tree, "circle"), 1u);
}

TEST(Plot, EmptyTracesThrow) {
  RunArtifact art;
  EXPECT_THROW(emit_svg_plot(art), std::invalid_argument);
  art.problems = {lasso_spec()};
  art.runs.push_back(SolverRun{});
  EXPECT_THROW(emit_svg_plot(art), std::invalid_argument);
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(ATOS_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(Cli, EndToEnd) {
  const fs::path dir = scratch_dir("cli");
  const std::string d = dir.string();
  ASSERT_EQ(run_cli("datagen --kind lasso_least_squares --n 30 --p 10 --seed 3 --out " + d + "/gen"), 0);
  EXPECT_TRUE(fs::exists(dir / "gen" / "spec.json"));
  EXPECT_TRUE(fs::exists(dir / "gen" / "truth.csv"));
  ASSERT_EQ(run_cli("solve --problem " + d + "/gen/spec.json --solver atos-v2 --tol 1e-8 --out " + d +
                    "/solve"),
            0);
  const auto res = nlohmann::json::parse(read_text_file(dir / "solve" / "result.json"));
  EXPECT_TRUE(res.at("converged").get<bool>());
  EXPECT_EQ(run_cli("solve --problem " + d + "/gen/spec.json --solver tos-fixed --tol 1e-14 " +
                    "--max-iter 2 --out " + d + "/solve2"),
            2);

  const nlohmann::json m = {{"problems", {spec_to_json(lasso_spec())}},
                            {"solvers", {"atos-v2", "pdhg"}},
                            {"budget", {{"max_iter", 40}}},
                            {"options", {{"record_wall_time", false}}}};
  write_text_file(dir / "matrix.json", m.dump());
  ASSERT_EQ(run_cli("bench --matrix " + d + "/matrix.json --out " + d + "/run"), 0);
  ASSERT_EQ(run_cli("plot --run " + d + "/run --out " + d + "/plot.svg"), 0);
  EXPECT_EQ(count_elements(parse_svg(read_text_file(dir / "plot.svg")), "polyline"), 2u);
}

TEST(Cli, ArgumentErrors) {
  const std::string d = scratch_dir("cli_err").string();
  EXPECT_EQ(run_cli(""), 1);
  EXPECT_EQ(run_cli("frobnicate"), 1);
  EXPECT_EQ(run_cli("datagen --kind nope --out " + d), 1);
  EXPECT_EQ(run_cli("solve --problem " + d + "/missing.json --out " + d), 1);
  EXPECT_EQ(run_cli("datagen --kind lasso_least_squares --corr 2 --out " + d), 1);
  EXPECT_EQ(run_cli("--help"), 0);
}

}  // namespace
}  // namespace atos
