#include "atos/solver.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

namespace atos {

namespace {

constexpr double kDecreaseSlack = 1e-12;

struct Gamma0Estimate {
  double gamma0;
  std::uint64_t n_func;
  std::uint64_t n_grad;
};

Gamma0Estimate estimate_gamma0_counted(const SmoothOracle& f, const Vector& z0) {
  const auto [f0, grad] = f.value_and_gradient(z0);
  const double g2 = grad.squaredNorm();
  if (g2 == 0.0) return {1.0, 1, 1};
  std::uint64_t n_func = 1;
  double eps = 1e-3;
  for (int k = 0; k < 300; ++k, eps /= 10.0) {
    const double ft = f.value(z0 - eps * grad);
    ++n_func;
    if (ft <= f0) {
      const double g0 = 4.0 * (f0 - ft) / g2;
      // f(z~) == f(z0) up to rounding gives no curvature information.
      return {g0 > 0.0 && std::isfinite(g0) ? g0 : eps, n_func, 1};
    }
  }
  throw NumericalError("estimate_gamma0: no decrease along the negative gradient");
}

std::optional<double> effective_beta(const CompositeProblem& problem, const AtosConfig& config) {
  if (config.beta_h) return config.beta_h;
  return problem.h().lipschitz_bound();
}

}  // namespace

void AtosConfig::validate() const {
  if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("tau must lie in (0, 1)");
  if (gamma0) require_positive("gamma0", *gamma0);
  if (beta_h && !(*beta_h >= 0.0)) throw std::invalid_argument("beta_h must be nonnegative");
  if (!(tol >= 0.0)) throw std::invalid_argument("tol must be nonnegative");
  if (!(growth_cap_exponent >= 0.0)) {
    throw std::invalid_argument("growth_cap_exponent must be nonnegative");
  }
  if (!(max_seconds > 0.0)) throw std::invalid_argument("max_seconds must be positive");
}

double estimate_gamma0(const SmoothOracle& f, const Vector& z0) {
  return estimate_gamma0_counted(f, z0).gamma0;
}

double grow_step(double gamma, double delta, double beta_h, double cap_exponent) {
  require_positive("grow_step gamma", gamma);
  require_positive("grow_step beta_h", beta_h);
  if (!(delta >= 0.0)) throw std::invalid_argument("grow_step: delta must be nonnegative");
  const double b2 = 2.0 * beta_h;
  const double admissible = std::sqrt(gamma * gamma + gamma * delta / (b2 * b2));
  if (cap_exponent == kInf) return admissible;
  return std::min(gamma * std::exp2(cap_exponent), admissible);
}

SolverState atos_step(const CompositeProblem& problem, SolverState st, const AtosConfig& config,
                      Variant variant, std::optional<double> beta_h) {
  if (variant == Variant::V2 && !beta_h) {
    throw std::invalid_argument("atos_step: Variant 2 needs a Lipschitz bound of h");
  }
  const SmoothOracle& f = problem.f();
  const bool need_values = config.line_search || variant == Variant::V2;

  double fz = 0.0;
  Vector grad;
  if (need_values) {
    std::tie(fz, grad) = f.value_and_gradient(st.z);
    ++st.n_func;
  } else {
    grad = f.gradient(st.z);
  }
  ++st.n_grad;

  double gamma = st.gamma;
  Vector x;
  double q = 0.0;
  double fx = 0.0;
  for (std::uint64_t tries = 0;; ++tries) {
    x = problem.g().prox(st.z - gamma * (st.u + grad), gamma);
    ++st.n_prox;
    if (!need_values) break;
    fx = f.value(x);
    ++st.n_func;
    q = quadratic_model(st.z, fz, grad, x, gamma);
    if (!config.line_search || fx <= q + std::abs(fz) * kDecreaseSlack) break;
    if (tries + 1 > config.max_backtracks) {
      throw NonconvergenceError("line search exceeded max_backtracks", st.iter);
    }
    ++st.backtracks;
    gamma *= config.tau;
  }

  Vector z_next = problem.h().prox(x + gamma * st.u, gamma);
  ++st.n_prox;
  Vector u_next = st.u + (x - z_next) / gamma;

  st.residual = step_residual(st.z, st.u, z_next, u_next, gamma);
  st.ergodic_x_sum += gamma * x;
  st.ergodic_u_sum += gamma * u_next;
  st.s += gamma;

  const double delta = need_values ? std::max(q - fx, 0.0) : 0.0;
  st.gamma_prev = gamma;
  st.delta_prev = delta;
  st.gamma = variant == Variant::V2
                 ? grow_step(gamma, delta, *beta_h, config.growth_cap_exponent)
                 : gamma;
  st.x = std::move(x);
  st.z = std::move(z_next);
  st.u = std::move(u_next);
  ++st.iter;
  return st;
}

AtosResult solve(const CompositeProblem& problem, const Vector& z0, const Vector& u0,
                 const AtosConfig& config, const StateObserver& observer) {
  config.validate();
  require_dim("solve z0", z0.size(), problem.dim());
  require_dim("solve u0", u0.size(), problem.dim());

  AtosResult result;
  Variant variant = config.variant;
  std::optional<double> beta = effective_beta(problem, config);
  if (variant == Variant::V2 && !(beta && *beta > 0.0)) {
    variant = Variant::V1;
    result.downgraded_to_v1 = true;
  }

  std::uint64_t n_func0 = 0, n_grad0 = 0;
  double gamma0;
  if (config.gamma0) {
    gamma0 = *config.gamma0;
  } else {
    const Gamma0Estimate est = estimate_gamma0_counted(problem.f(), z0);
    gamma0 = est.gamma0;
    n_func0 = est.n_func;
    n_grad0 = est.n_grad;
  }

  SolverState st = initial_state(z0, u0, gamma0);
  st.n_func = n_func0;
  st.n_grad = n_grad0;

  const auto start = std::chrono::steady_clock::now();
  auto elapsed_ns = [&] {
    return std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() -
                                                                start)
        .count();
  };

  while (true) {
    if (st.residual <= config.tol) {
      result.converged = true;
      break;
    }
    if (st.iter >= config.max_iter) break;
    if (static_cast<double>(elapsed_ns()) * 1e-9 >= config.max_seconds) break;
    st = atos_step(problem, std::move(st), config, variant, beta);
    if (config.record_trace) {
      TraceRecord r;
      r.iter = st.iter;
      r.wall_ns = elapsed_ns();
      r.step_size = st.gamma_prev;
      r.n_grad = st.n_grad;
      r.n_func = st.n_func;
      r.n_prox = st.n_prox;
      r.primal = primal_value(problem, st.x);
      r.residual = st.residual;
      result.trace.push_back(r);
    }
    if (observer) observer(st);
  }

  result.iterations = st.iter;
  result.x_last = st.iter > 0 ? st.x : z0;
  result.z_last = st.z;
  result.u_last = st.u;
  if (st.s > 0.0) {
    result.x_ergodic = st.ergodic_x_sum / st.s;
    result.u_ergodic = st.ergodic_u_sum / st.s;
  } else {
    result.x_ergodic = result.x_last;
    result.u_ergodic = result.u_last;
  }
  result.x = result.x_last;
  if (config.report_best_of_last_and_ergodic && st.iter > 0 &&
      primal_value(problem, result.x_ergodic) < primal_value(problem, result.x_last)) {
    result.x = result.x_ergodic;
  }
  return result;
}

BoundCheckReport ergodic_bound_check(const CompositeProblem& problem,
                                     std::span<const ErgodicPoint> points, const Vector& x_ref,
                                     const Vector& u_ref, const Vector& z0, const Vector& u0,
                                     double gamma0, double slack) {
  if (!problem.h().has_conjugate()) {
    throw UnsupportedError("ergodic_bound_check: h has no closed-form conjugate");
  }
  BoundCheckReport report;
  const double numer = (z0 - x_ref).squaredNorm() + gamma0 * gamma0 * (u0 - u_ref).squaredNorm();
  const double ref_value_at_u = problem.f().value(x_ref) + problem.g().value(x_ref);
  for (const ErgodicPoint& pt : points) {
    if (!(pt.s >= 0.0)) throw std::invalid_argument("ergodic_bound_check: s must be nonnegative");
    const double lhs = lagrangian_value(problem, pt.x_bar, u_ref) -
                       (ref_value_at_u + x_ref.dot(pt.u_bar) - problem.h().conjugate_value(pt.u_bar));
    const double rhs = numer == 0.0 ? 0.0 : numer / (2.0 * pt.s);
    const double gap = rhs - lhs;
    report.min_slack = std::min(report.min_slack, std::isnan(gap) ? -kInf : gap);
    ++report.checked;
  }
  report.holds = report.min_slack >= -slack;
  return report;
}

}  // namespace atos
