#pragma once

#include <optional>
#include <string>
#include <variant>

#include "atos/core.hpp"
#include "atos/multi.hpp"
#include "atos/prox.hpp"
#include "json.hpp"

namespace atos {

enum class ProblemKind {
  OverlapGroupLassoLogistic,
  Tv2dLeastSquares,
  TraceL1LeastSquares,
  NearlyIsotonicLogistic,
  TrendFilterLeastSquares,
  DoublyStochasticQp,
  LassoLeastSquares,
};

ProblemKind parse_problem_kind(const std::string& name);
std::string to_string(ProblemKind kind);

struct ProblemSpec {
  ProblemKind kind = ProblemKind::LassoLeastSquares;
  Index n = 0;
  Index p = 0;
  Index rows = 0;
  Index cols = 0;
  std::optional<double> lambda;
  // Fraction of zero coefficients to calibrate lambda for (group lasso only).
  std::optional<double> target_sparsity;
  double corr = 0.95;
  std::uint64_t seed = 0;
  std::optional<double> noise_sd;
};

// Fills kind-specific default dimensions and noise level; validates.
ProblemSpec resolve_spec(ProblemSpec spec);

ProblemSpec spec_from_json(const nlohmann::json& j);
nlohmann::json spec_to_json(const ProblemSpec& spec);

struct ProblemMetadata {
  ProblemSpec spec;  // resolved, with lambda filled in
  Index dim = 0;
  Index rows = 0;  // matrix-shaped unknowns; 0 otherwise
  Index cols = 0;
  double L_f = 0.0;
  std::optional<double> beta_h;
  Vector truth;
};

struct BuiltProblem {
  std::variant<CompositeProblem, MultiProxProblem> problem;
  ProblemMetadata meta;

  bool is_multi() const { return std::holds_alternative<MultiProxProblem>(problem); }
  const CompositeProblem& composite() const { return std::get<CompositeProblem>(problem); }
  const MultiProxProblem& multi() const { return std::get<MultiProxProblem>(problem); }
  double primal(const Vector& x) const;
};

BuiltProblem build_problem(const ProblemSpec& spec);

// Groups {8i, ..., 8i + 9}; even-indexed groups form the first subfamily and
// odd-indexed groups the second.
std::vector<std::vector<Index>> overlap_groups(Index p);
OverlapGroupSplit gen_overlap_groups(Index p);

// Picks `count` pairwise non-overlapping groups uniformly at random and fills each
// with one Gaussian draw.
Vector gen_group_sparse_truth(const OverlapGroupSplit& split, Index p, std::uint64_t seed,
                              std::size_t count = 10);

// Fraction of coordinates with |x_j| <= 1e-6 max(1, |x|_inf).
double zero_fraction(const Vector& x);

// Bisection on log(lambda) until the tightly solved group lasso has the target
// fraction of zeros within `tolerance`.
double calibrate_lambda(ProblemSpec spec, double target, double tolerance);

}  // namespace atos
