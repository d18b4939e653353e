#include "atos/harness/problems.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>

#include "atos/harness/random.hpp"
#include "atos/losses.hpp"
#include "atos/solver.hpp"

namespace atos {

namespace {

struct KindName {
  ProblemKind kind;
  const char* name;
};

constexpr KindName kKindNames[] = {
    {ProblemKind::OverlapGroupLassoLogistic, "overlap_group_lasso_logistic"},
    {ProblemKind::Tv2dLeastSquares, "tv2d_least_squares"},
    {ProblemKind::TraceL1LeastSquares, "trace_l1_least_squares"},
    {ProblemKind::NearlyIsotonicLogistic, "nearly_isotonic_logistic"},
    {ProblemKind::TrendFilterLeastSquares, "trend_filter_least_squares"},
    {ProblemKind::DoublyStochasticQp, "doubly_stochastic_qp"},
    {ProblemKind::LassoLeastSquares, "lasso_least_squares"},
};

Vector sign_labels(const Vector& scores) {
  Vector b(scores.size());
  for (Index i = 0; i < scores.size(); ++i) b[i] = scores[i] >= 0.0 ? 1.0 : -1.0;
  return b;
}

// 3x3 box blur with symmetric boundary handling as a dense (rows*cols)^2 matrix
// acting on row-major images.
Matrix box_blur_operator(Index rows, Index cols) {
  const Index p = rows * cols;
  Matrix B = Matrix::Zero(p, p);
  auto reflect = [](Index i, Index n) { return i < 0 ? -i - 1 : (i >= n ? 2 * n - i - 1 : i); };
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) {
      for (Index di = -1; di <= 1; ++di) {
        for (Index dj = -1; dj <= 1; ++dj) {
          const Index si = std::clamp<Index>(reflect(i + di, rows), 0, rows - 1);
          const Index sj = std::clamp<Index>(reflect(j + dj, cols), 0, cols - 1);
          B(i * cols + j, si * cols + sj) += 1.0 / 9.0;
        }
      }
    }
  }
  return B;
}

// Sum of three axis-aligned rectangles with Gaussian intensities.
Vector piecewise_constant_image(Index rows, Index cols, Rng& rng) {
  RowMatrix X = RowMatrix::Zero(rows, cols);
  for (int r = 0; r < 3; ++r) {
    const Index i0 = static_cast<Index>(rng.below(static_cast<std::uint64_t>(rows)));
    const Index j0 = static_cast<Index>(rng.below(static_cast<std::uint64_t>(cols)));
    const Index h = 1 + static_cast<Index>(rng.below(static_cast<std::uint64_t>(rows - i0)));
    const Index w = 1 + static_cast<Index>(rng.below(static_cast<std::uint64_t>(cols - j0)));
    X.block(i0, j0, h, w).array() += rng.normal();
  }
  return flatten(X);
}

// Sparse, low-rank, symmetric: a sum of two outer products of sparse vectors.
Vector sparse_low_rank_matrix(Index d, Rng& rng) {
  RowMatrix X = RowMatrix::Zero(d, d);
  for (int r = 0; r < 2; ++r) {
    Vector v = Vector::Zero(d);
    const Index start = static_cast<Index>(rng.below(static_cast<std::uint64_t>(d)));
    const Index len = std::min<Index>(d - start, std::max<Index>(2, d / 4));
    for (Index i = start; i < start + len; ++i) v[i] = rng.normal();
    X += v * v.transpose();
  }
  return flatten(X);
}

void require_positive_dim(const char* what, Index v) {
  if (v < 1) throw std::invalid_argument(std::string(what) + " must be positive");
}

double lambda_of(const ProblemSpec& spec) {
  if (!spec.lambda) throw std::invalid_argument("problem spec needs lambda");
  if (!(*spec.lambda >= 0.0)) throw std::invalid_argument("lambda must be nonnegative");
  return *spec.lambda;
}

std::shared_ptr<Dataset> make_dataset(Matrix A, Vector b) {
  auto d = std::make_shared<Dataset>();
  d->A = std::move(A);
  d->b = std::move(b);
  return d;
}

}  // namespace

ProblemKind parse_problem_kind(const std::string& name) {
  for (const auto& k : kKindNames) {
    if (name == k.name) return k.kind;
  }
  throw std::invalid_argument("unknown problem kind: " + name);
}

std::string to_string(ProblemKind kind) {
  for (const auto& k : kKindNames) {
    if (kind == k.kind) return k.name;
  }
  throw std::invalid_argument("unknown problem kind");
}

ProblemSpec resolve_spec(ProblemSpec spec) {
  auto dflt = [](Index& v, Index d) {
    if (v == 0) v = d;
  };
  switch (spec.kind) {
    case ProblemKind::OverlapGroupLassoLogistic:
      dflt(spec.n, 100);
      dflt(spec.p, 1002);
      if (!spec.noise_sd) spec.noise_sd = 1.0;
      break;
    case ProblemKind::Tv2dLeastSquares:
      dflt(spec.rows, 8);
      dflt(spec.cols, spec.rows);
      spec.p = spec.rows * spec.cols;
      spec.n = spec.p;
      if (!spec.noise_sd) spec.noise_sd = 0.1;
      if (!spec.lambda) spec.lambda = 0.1;
      break;
    case ProblemKind::TraceL1LeastSquares:
      dflt(spec.rows, 20);
      spec.cols = spec.rows;
      spec.p = spec.rows * spec.cols;
      dflt(spec.n, 2 * spec.p);
      if (!spec.noise_sd) spec.noise_sd = 1.0;
      if (!spec.lambda) spec.lambda = 0.1;
      break;
    case ProblemKind::NearlyIsotonicLogistic:
      dflt(spec.n, 100);
      dflt(spec.p, 50);
      if (!spec.noise_sd) spec.noise_sd = std::sqrt(5.0);
      if (!spec.lambda) spec.lambda = 0.01;
      break;
    case ProblemKind::TrendFilterLeastSquares:
      dflt(spec.p, 100);
      spec.n = spec.p;
      if (!spec.noise_sd) spec.noise_sd = 0.5;
      if (!spec.lambda) spec.lambda = 1.0;
      break;
    case ProblemKind::DoublyStochasticQp:
      dflt(spec.rows, 10);
      spec.cols = spec.rows;
      spec.p = spec.rows * spec.cols;
      spec.n = spec.p;
      if (!spec.noise_sd) spec.noise_sd = 1.0;
      break;
    case ProblemKind::LassoLeastSquares:
      dflt(spec.n, 50);
      dflt(spec.p, 20);
      if (!spec.noise_sd) spec.noise_sd = 0.1;
      if (!spec.lambda && !spec.target_sparsity) spec.lambda = 1.0;
      break;
  }
  require_positive_dim("n", spec.n);
  require_positive_dim("p", spec.p);
  if (!(spec.corr >= 0.0 && spec.corr < 1.0)) throw std::invalid_argument("corr must lie in [0, 1)");
  if (!(*spec.noise_sd >= 0.0)) throw std::invalid_argument("noise_sd must be nonnegative");
  if (spec.lambda && !(*spec.lambda >= 0.0)) throw std::invalid_argument("lambda must be nonnegative");
  if (spec.target_sparsity && !(*spec.target_sparsity > 0.0 && *spec.target_sparsity < 1.0)) {
    throw std::invalid_argument("target_sparsity must lie in (0, 1)");
  }
  if (spec.kind == ProblemKind::OverlapGroupLassoLogistic && !spec.lambda &&
      !spec.target_sparsity) {
    spec.lambda = 0.01;
  }
  return spec;
}

ProblemSpec spec_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("problem spec must be a JSON object");
  static const char* kKeys[] = {"kind", "n",    "p",    "rows",    "cols",
                                "lambda", "target_sparsity", "corr", "seed", "noise_sd"};
  for (const auto& [key, _] : j.items()) {
    if (std::find_if(std::begin(kKeys), std::end(kKeys),
                     [&](const char* k) { return key == k; }) == std::end(kKeys)) {
      throw std::invalid_argument("unknown problem spec field: " + key);
    }
  }
  ProblemSpec s;
  try {
    s.kind = parse_problem_kind(j.at("kind").get<std::string>());
    s.n = j.value("n", Index{0});
    s.p = j.value("p", Index{0});
    s.rows = j.value("rows", Index{0});
    s.cols = j.value("cols", Index{0});
    if (j.contains("lambda")) s.lambda = j.at("lambda").get<double>();
    if (j.contains("target_sparsity")) s.target_sparsity = j.at("target_sparsity").get<double>();
    s.corr = j.value("corr", 0.95);
    s.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("noise_sd")) s.noise_sd = j.at("noise_sd").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("invalid problem spec: ") + e.what());
  }
  return s;
}

nlohmann::json spec_to_json(const ProblemSpec& s) {
  nlohmann::json j;
  j["kind"] = to_string(s.kind);
  j["n"] = s.n;
  j["p"] = s.p;
  if (s.rows) j["rows"] = s.rows;
  if (s.cols) j["cols"] = s.cols;
  if (s.lambda) j["lambda"] = *s.lambda;
  if (s.target_sparsity) j["target_sparsity"] = *s.target_sparsity;
  j["corr"] = s.corr;
  j["seed"] = s.seed;
  if (s.noise_sd) j["noise_sd"] = *s.noise_sd;
  return j;
}

double BuiltProblem::primal(const Vector& x) const {
  return is_multi() ? multi_primal_value(multi(), x) : primal_value(composite(), x);
}

std::vector<std::vector<Index>> overlap_groups(Index p) {
  if (p < 10 || (p - 2) % 8 != 0) {
    throw std::invalid_argument("overlap groups need p = 8m + 2 with m >= 1, got p = " +
                                std::to_string(p));
  }
  const Index m = (p - 2) / 8;
  std::vector<std::vector<Index>> groups;
  for (Index i = 0; i < m; ++i) {
    std::vector<Index> g;
    for (Index j = 8 * i; j < 8 * i + 10; ++j) g.push_back(j);
    groups.push_back(std::move(g));
  }
  return groups;
}

OverlapGroupSplit gen_overlap_groups(Index p) {
  const auto groups = overlap_groups(p);
  std::vector<std::vector<Index>> first, second;
  for (std::size_t i = 0; i < groups.size(); ++i) (i % 2 == 0 ? first : second).push_back(groups[i]);
  OverlapGroupSplit split;
  split.subfamilies.emplace_back(std::move(first), p);
  if (!second.empty()) split.subfamilies.emplace_back(std::move(second), p);
  return split;
}

Vector gen_group_sparse_truth(const OverlapGroupSplit& split, Index p, std::uint64_t seed,
                              std::size_t count) {
  std::vector<std::vector<Index>> groups;
  for (const auto& fam : split.subfamilies) {
    groups.insert(groups.end(), fam.groups().begin(), fam.groups().end());
  }
  if (groups.empty()) throw std::invalid_argument("gen_group_sparse_truth: no groups");
  std::sort(groups.begin(), groups.end());
  auto overlaps = [](const std::vector<Index>& a, const std::vector<Index>& b) {
    for (Index i : a) {
      if (std::find(b.begin(), b.end(), i) != b.end()) return true;
    }
    return false;
  };
  Rng rng(seed);
  std::vector<std::size_t> pool(groups.size());
  for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = i;
  std::vector<std::size_t> chosen;
  // Random order via Fisher-Yates, keeping each group that does not overlap earlier picks.
  for (std::size_t i = 0; i < pool.size() && chosen.size() < count; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
    std::swap(pool[i], pool[j]);
    const auto& cand = groups[pool[i]];
    bool ok = true;
    for (std::size_t c : chosen) ok = ok && !overlaps(groups[c], cand);
    if (ok) chosen.push_back(pool[i]);
  }
  Vector truth = Vector::Zero(p);
  for (std::size_t c : chosen) {
    const double v = rng.normal();
    for (Index i : groups[c]) truth[i] = v;
  }
  return truth;
}

double zero_fraction(const Vector& x) {
  if (x.size() == 0) return 0.0;
  const double thr = 1e-6 * std::max(1.0, x.cwiseAbs().maxCoeff());
  Index zeros = 0;
  for (Index i = 0; i < x.size(); ++i) zeros += std::abs(x[i]) <= thr ? 1 : 0;
  return static_cast<double>(zeros) / static_cast<double>(x.size());
}

namespace {

BuiltProblem build_resolved(const ProblemSpec& spec) {
  ProblemMetadata meta;
  meta.spec = spec;
  meta.dim = spec.p;
  Rng rng(spec.seed ^ 0x9e3779b97f4a7c15ULL);
  const double noise = *spec.noise_sd;

  switch (spec.kind) {
    case ProblemKind::OverlapGroupLassoLogistic: {
      const double lam = lambda_of(spec);
      const OverlapGroupSplit split = gen_overlap_groups(spec.p);
      Matrix A = gen_autoregressive_design(spec.n, spec.p, spec.corr, spec.seed);
      meta.truth = gen_group_sparse_truth(split, spec.p, spec.seed + 1);
      const Vector b = sign_labels(A * meta.truth + noise * rng.normal_vector(spec.n));
      SmoothOracle f = logistic_oracle(make_dataset(std::move(A), b));
      meta.L_f = *f.lipschitz_estimate();
      ProxOperator g = make_group_lasso(split.subfamilies.at(0), lam);
      ProxOperator h = split.subfamilies.size() > 1 ? make_group_lasso(split.subfamilies[1], lam)
                                                    : make_zero(spec.p);
      meta.beta_h = h.lipschitz_bound();
      return {CompositeProblem(std::move(f), std::move(g), std::move(h)), meta};
    }
    case ProblemKind::Tv2dLeastSquares: {
      const double lam = lambda_of(spec);
      meta.rows = spec.rows;
      meta.cols = spec.cols;
      meta.truth = piecewise_constant_image(spec.rows, spec.cols, rng);
      Matrix B = box_blur_operator(spec.rows, spec.cols);
      const Vector y = B * meta.truth + noise * rng.normal_vector(spec.p);
      SmoothOracle f = least_squares_oracle(make_dataset(std::move(B), y));
      meta.L_f = *f.lipschitz_estimate();
      ProxOperator g = make_tv2d_rows(spec.rows, spec.cols, lam);
      ProxOperator h = make_tv2d_cols(spec.rows, spec.cols, lam);
      meta.beta_h = h.lipschitz_bound();
      return {CompositeProblem(std::move(f), std::move(g), std::move(h)), meta};
    }
    case ProblemKind::TraceL1LeastSquares: {
      const double lam = lambda_of(spec);
      meta.rows = spec.rows;
      meta.cols = spec.cols;
      meta.truth = sparse_low_rank_matrix(spec.rows, rng);
      Matrix A = gen_autoregressive_design(spec.n, spec.p, spec.corr, spec.seed);
      const Vector b = A * meta.truth + noise * rng.normal_vector(spec.n);
      SmoothOracle f =
          least_squares_oracle(make_dataset(std::move(A), b), 1.0 / static_cast<double>(spec.n));
      meta.L_f = *f.lipschitz_estimate();
      ProxOperator g = make_trace_norm(spec.rows, spec.cols, lam);
      ProxOperator h = make_l1(spec.p, lam);
      meta.beta_h = lipschitz_bound(PenaltyKind::L1Matrix, {lam, 0, spec.rows, spec.cols, 0});
      return {CompositeProblem(std::move(f), std::move(g), std::move(h)), meta};
    }
    case ProblemKind::NearlyIsotonicLogistic: {
      const double lam = lambda_of(spec);
      Matrix A = gen_autoregressive_design(spec.n, spec.p, spec.corr, spec.seed);
      // Increasing staircase with a few out-of-order steps.
      Vector truth(spec.p);
      double level = -1.0;
      for (Index i = 0; i < spec.p; ++i) {
        if (i % 5 == 0) level += 0.5 * std::abs(rng.normal()) - (rng.uniform() < 0.2 ? 0.5 : 0.0);
        truth[i] = level;
      }
      meta.truth = truth;
      const Vector b = sign_labels(A * truth + noise * rng.normal_vector(spec.n));
      SmoothOracle f = logistic_oracle(make_dataset(std::move(A), b));
      meta.L_f = *f.lipschitz_estimate();
      ProxOperator g = make_nearly_isotonic(spec.p, lam, 0);
      ProxOperator h = make_nearly_isotonic(spec.p, lam, 1);
      meta.beta_h = h.lipschitz_bound();
      return {CompositeProblem(std::move(f), std::move(g), std::move(h)), meta};
    }
    case ProblemKind::TrendFilterLeastSquares: {
      const double lam = lambda_of(spec);
      // Piecewise-linear signal observed in noise.
      Vector truth(spec.p);
      double slope = rng.normal(), value = 0.0;
      for (Index i = 0; i < spec.p; ++i) {
        if (i > 0 && i % std::max<Index>(5, spec.p / 4) == 0) slope = rng.normal();
        value += slope;
        truth[i] = value;
      }
      meta.truth = truth;
      const Vector b = truth + noise * rng.normal_vector(spec.p);
      SmoothOracle phi = least_squares_oracle(make_dataset(Matrix::Identity(spec.p, spec.p), b));
      meta.L_f = *phi.lipschitz_estimate();
      std::vector<ProxOperator> terms;
      double beta = 0.0;
      for (int phase = 0; phase < 3; ++phase) {
        terms.push_back(make_trend_filter_phase(spec.p, lam, phase));
        beta = std::max(beta, *terms.back().lipschitz_bound());
      }
      meta.beta_h = beta;
      return {MultiProxProblem(std::move(phi), std::move(terms), beta), meta};
    }
    case ProblemKind::DoublyStochasticQp: {
      meta.rows = spec.rows;
      meta.cols = spec.cols;
      Vector C(spec.p);
      for (Index i = 0; i < spec.p; ++i) C[i] = noise * rng.uniform();
      meta.truth = C;
      SmoothOracle f =
          least_squares_oracle(make_dataset(Matrix::Identity(spec.p, spec.p), C));
      meta.L_f = *f.lipschitz_estimate();
      return {CompositeProblem(std::move(f), make_doubly_stochastic_affine(spec.rows),
                               make_nonneg(spec.p), 2.0, std::nullopt),
              meta};
    }
    case ProblemKind::LassoLeastSquares: {
      const double lam = lambda_of(spec);
      Matrix A = gen_autoregressive_design(spec.n, spec.p, spec.corr, spec.seed);
      Vector truth = Vector::Zero(spec.p);
      for (Index i = 0; i < spec.p; i += 4) truth[i] = rng.normal();
      meta.truth = truth;
      const Vector b = A * truth + noise * rng.normal_vector(spec.n);
      SmoothOracle f = least_squares_oracle(make_dataset(std::move(A), b));
      meta.L_f = *f.lipschitz_estimate();
      ProxOperator g = make_l1(spec.p, lam);
      meta.beta_h = 0.0;
      return {CompositeProblem(std::move(f), std::move(g), make_zero(spec.p)), meta};
    }
  }
  throw std::invalid_argument("unknown problem kind");
}

}  // namespace

double calibrate_lambda(ProblemSpec spec, double target, double tolerance) {
  if (spec.kind != ProblemKind::OverlapGroupLassoLogistic &&
      spec.kind != ProblemKind::LassoLeastSquares) {
    throw std::invalid_argument("lambda calibration supports the group lasso and lasso kinds");
  }
  if (!(target > 0.0 && target < 1.0)) throw std::invalid_argument("target must lie in (0, 1)");
  spec.target_sparsity.reset();
  spec.lambda = 1.0;
  spec = resolve_spec(spec);

  auto solve_at = [&](double lam) {
    spec.lambda = lam;
    const BuiltProblem bp = build_resolved(spec);
    AtosConfig cfg;
    cfg.variant = Variant::V2;
    cfg.tol = 1e-10;
    cfg.max_iter = 50000;
    cfg.record_trace = false;
    const Vector zero = Vector::Zero(spec.p);
    return zero_fraction(solve(bp.composite(), zero, zero, cfg).x_last);
  };

  // Above the largest group norm of grad f(0) the zero vector is optimal.
  spec.lambda = 1.0;
  const BuiltProblem probe = build_resolved(spec);
  const Vector grad0 = probe.composite().f().gradient(Vector::Zero(spec.p));
  double hi = 0.0;
  if (spec.kind == ProblemKind::OverlapGroupLassoLogistic) {
    for (const auto& g : overlap_groups(spec.p)) {
      double sq = 0.0;
      for (Index i : g) sq += grad0[i] * grad0[i];
      hi = std::max(hi, std::sqrt(sq));
    }
  } else {
    hi = grad0.cwiseAbs().maxCoeff();
  }
  if (!(hi > 0.0)) throw NumericalError("calibrate_lambda: zero gradient at the origin");
  double lo = hi * 1e-4;
  double best = hi, best_err = kInf;
  for (int it = 0; it < 40; ++it) {
    const double mid = std::sqrt(lo * hi);
    const double frac = solve_at(mid);
    const double err = std::abs(frac - target);
    if (err < best_err) {
      best_err = err;
      best = mid;
    }
    if (err <= tolerance) return mid;
    (frac < target ? lo : hi) = mid;
  }
  if (best_err > tolerance) {
    throw NumericalError("calibrate_lambda: no lambda reaches the target sparsity");
  }
  return best;
}

BuiltProblem build_problem(const ProblemSpec& input) {
  ProblemSpec spec = resolve_spec(input);
  if (!spec.lambda && spec.target_sparsity) {
    const double t = *spec.target_sparsity;
    spec.lambda = calibrate_lambda(spec, t, std::max(0.02, 0.1 * std::min(t, 1.0 - t)));
  }
  return build_resolved(spec);
}

}  // namespace atos
