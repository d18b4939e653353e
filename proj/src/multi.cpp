#include "atos/multi.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

namespace atos {

namespace {

constexpr double kDecreaseSlack = 1e-12;

std::optional<double> shared_bound(const std::vector<ProxOperator>& terms) {
  double b = 0.0;
  for (const auto& t : terms) {
    if (!t.lipschitz_bound()) return std::nullopt;
    b = std::max(b, *t.lipschitz_bound());
  }
  return b;
}

Vector row_mean(const RowMatrix& M) { return M.colwise().mean().transpose(); }

}  // namespace

MultiProxProblem::MultiProxProblem(SmoothOracle phi, std::vector<ProxOperator> terms,
                                   std::optional<double> beta_h)
    : phi_(std::move(phi)), terms_(std::move(terms)), beta_h_(beta_h) {
  if (terms_.empty()) throw std::invalid_argument("MultiProxProblem: need at least one term");
  for (const auto& t : terms_) require_dim("MultiProxProblem term", t.dim(), phi_.dim());
  if (beta_h_ && !(*beta_h_ >= 0.0)) throw std::invalid_argument("beta_h must be nonnegative");
  if (!beta_h_) beta_h_ = shared_bound(terms_);
}

double multi_primal_value(const MultiProxProblem& problem, const Vector& x) {
  require_dim("multi_primal_value", x.size(), problem.dim());
  double v = 0.0;
  for (const auto& t : problem.terms()) {
    const double hv = t.value(x);
    if (hv == kInf) return kInf;
    v += hv;
  }
  return problem.phi().value(x) + v;
}

double multi_quadratic_model(double phi_zbar, const Vector& grad_zbar, const Vector& zbar,
                             const Vector& x, const RowMatrix& Z, double gamma) {
  require_positive("multi_quadratic_model gamma", gamma);
  require_dim("multi_quadratic_model x", x.size(), zbar.size());
  require_dim("multi_quadratic_model Z", Z.cols(), zbar.size());
  double spread = 0.0;
  for (Index j = 0; j < Z.rows(); ++j) spread += (x - Z.row(j).transpose()).squaredNorm();
  return phi_zbar + grad_zbar.dot(x - zbar) + spread / (2.0 * gamma);
}

ProductState multi_initial_state(const MultiProxProblem& problem, const Vector& z0,
                                 const Vector& u0, double gamma0) {
  require_dim("multi z0", z0.size(), problem.dim());
  require_dim("multi u0", u0.size(), problem.dim());
  require_positive("gamma0", gamma0);
  ProductState st;
  st.x = z0;
  st.Z = z0.transpose().replicate(problem.k(), 1);
  st.U = u0.transpose().replicate(problem.k(), 1);
  st.gamma = st.gamma_prev = gamma0;
  return st;
}

ProductState multi_step(const MultiProxProblem& problem, ProductState st,
                        const AtosConfig& config, Variant variant, std::optional<double> beta_h) {
  if (variant == Variant::V2 && !beta_h) {
    throw std::invalid_argument("multi_step: Variant 2 needs a Lipschitz bound");
  }
  const SmoothOracle& phi = problem.phi();
  const double k = static_cast<double>(problem.k());
  const bool need_values = config.line_search || variant == Variant::V2;

  const Vector zbar = row_mean(st.Z);
  const Vector ubar = row_mean(st.U);
  double fz = 0.0;
  Vector grad;
  if (need_values) {
    std::tie(fz, grad) = phi.value_and_gradient(zbar);
    ++st.n_func;
  } else {
    grad = phi.gradient(zbar);
  }
  ++st.n_grad;
  const Vector r = grad / k;

  double gamma = st.gamma;
  Vector x;
  double q = 0.0;
  double fx = 0.0;
  for (std::uint64_t tries = 0;; ++tries) {
    x = zbar - gamma * (ubar + r);
    if (!need_values) break;
    fx = phi.value(x);
    ++st.n_func;
    q = multi_quadratic_model(fz, grad, zbar, x, st.Z, gamma);
    if (!config.line_search || fx <= q + std::abs(fz) * kDecreaseSlack) break;
    if (tries + 1 > config.max_backtracks) {
      throw NonconvergenceError("line search exceeded max_backtracks", st.iter);
    }
    ++st.backtracks;
    gamma *= config.tau;
  }

  RowMatrix Z_next(st.Z.rows(), st.Z.cols());
  RowMatrix U_next(st.U.rows(), st.U.cols());
  for (Index j = 0; j < problem.k(); ++j) {
    const Vector uj = st.U.row(j).transpose();
    const Vector zj = problem.terms()[static_cast<std::size_t>(j)].prox(x + gamma * uj, gamma);
    ++st.n_prox;
    Z_next.row(j) = zj.transpose();
    U_next.row(j) = (uj + (x - zj) / gamma).transpose();
  }

  const double dz = (Z_next - st.Z).squaredNorm();
  const double du = (gamma * (U_next - st.U)).squaredNorm();
  st.residual = std::sqrt(dz + du) / (std::sqrt(k) * std::max(1.0, zbar.norm()));

  const double delta = need_values ? std::max(q - fx, 0.0) : 0.0;
  st.gamma_prev = gamma;
  st.delta_prev = delta;
  st.gamma = variant == Variant::V2
                 ? grow_step(gamma, delta, std::sqrt(k) * *beta_h, config.growth_cap_exponent)
                 : gamma;
  st.x = std::move(x);
  st.Z = std::move(Z_next);
  st.U = std::move(U_next);
  ++st.iter;
  return st;
}

AtosResult multi_solve(const MultiProxProblem& problem, const Vector& z0, const Vector& u0,
                       const AtosConfig& config, const ProductObserver& observer) {
  config.validate();
  require_dim("multi_solve z0", z0.size(), problem.dim());
  require_dim("multi_solve u0", u0.size(), problem.dim());

  AtosResult result;
  Variant variant = config.variant;
  std::optional<double> beta = config.beta_h ? config.beta_h : problem.beta_h();
  if (variant == Variant::V2 && !(beta && *beta > 0.0)) {
    variant = Variant::V1;
    result.downgraded_to_v1 = true;
  }

  const Index k = problem.k();
  std::uint64_t n_func0 = 0, n_grad0 = 0;
  double gamma0 = 1.0;
  if (config.gamma0) {
    gamma0 = *config.gamma0;
  } else {
    // Heuristic on the lifted smooth term f(Z) = phi(mean of rows), whose
    // gradient is grad phi / k in every row.
    const auto [f0, grad] = problem.phi().value_and_gradient(z0);
    n_func0 = n_grad0 = 1;
    const double g2 = grad.squaredNorm() / static_cast<double>(k);
    if (g2 > 0.0) {
      bool found = false;
      for (double eps = 1e-3; n_func0 < 300; eps /= 10.0) {
        const double ft = problem.phi().value(z0 - eps * grad / static_cast<double>(k));
        ++n_func0;
        if (ft <= f0) {
          const double g = 4.0 * (f0 - ft) / g2;
          gamma0 = g > 0.0 && std::isfinite(g) ? g : eps;
          found = true;
          break;
        }
      }
      if (!found) throw NumericalError("multi_solve: no decrease along the negative gradient");
    }
  }

  ProductState st = multi_initial_state(problem, z0, u0, gamma0);
  st.n_func = n_func0;
  st.n_grad = n_grad0;
  Vector erg_x = Vector::Zero(problem.dim());
  RowMatrix erg_U = RowMatrix::Zero(k, problem.dim());
  double s = 0.0;

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
    st = multi_step(problem, std::move(st), config, variant, beta);
    erg_x += st.gamma_prev * st.x;
    erg_U += st.gamma_prev * st.U;
    s += st.gamma_prev;
    if (config.record_trace) {
      TraceRecord rec;
      rec.iter = st.iter;
      rec.wall_ns = elapsed_ns();
      rec.step_size = st.gamma_prev;
      rec.n_grad = st.n_grad;
      rec.n_func = st.n_func;
      rec.n_prox = st.n_prox;
      rec.primal = multi_primal_value(problem, st.x);
      rec.residual = st.residual;
      result.trace.push_back(rec);
    }
    if (observer) observer(st);
  }

  result.iterations = st.iter;
  result.x_last = st.iter > 0 ? st.x : z0;
  result.z_last = flatten(st.Z);
  result.u_last = flatten(st.U);
  if (s > 0.0) {
    result.x_ergodic = erg_x / s;
    result.u_ergodic = flatten(erg_U / s);
  } else {
    result.x_ergodic = result.x_last;
    result.u_ergodic = result.u_last;
  }
  result.x = result.x_last;
  if (config.report_best_of_last_and_ergodic && st.iter > 0 &&
      multi_primal_value(problem, result.x_ergodic) < multi_primal_value(problem, result.x_last)) {
    result.x = result.x_ergodic;
  }
  return result;
}

}  // namespace atos
