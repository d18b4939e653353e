#include "atos/baselines.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

namespace atos {

namespace {

class Stopwatch {
 public:
  std::int64_t ns() const {
    return std::chrono::duration_cast<std::chrono::nanoseconds>(
               std::chrono::steady_clock::now() - start_)
        .count();
  }
  double seconds() const { return static_cast<double>(ns()) * 1e-9; }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

void validate(const BaselineConfig& c) {
  if (!(c.tol >= 0.0)) throw std::invalid_argument("tol must be nonnegative");
  if (!(c.max_seconds > 0.0)) throw std::invalid_argument("max_seconds must be positive");
}

}  // namespace

BaselineResult tos_fixed_solve(const CompositeProblem& problem, const Vector& y0, double gamma,
                               const BaselineConfig& config, const TosObserver& observer) {
  validate(config);
  require_positive("tos gamma", gamma);
  require_dim("tos y0", y0.size(), problem.dim());

  BaselineResult out;
  Vector y = y0;
  Vector z = problem.h().prox(y, gamma);
  Vector x = z;
  std::uint64_t n_grad = 0, n_prox = 1;
  const Stopwatch clock;
  for (std::uint64_t t = 0; t < config.max_iter; ++t) {
    if (clock.seconds() >= config.max_seconds) break;
    if (t > 0) {
      z = problem.h().prox(y, gamma);
      ++n_prox;
    }
    const Vector grad = problem.f().gradient(z);
    ++n_grad;
    x = problem.g().prox(2.0 * z - y - gamma * grad, gamma);
    ++n_prox;
    Vector y_next = y - z + x;
    const double residual = (y_next - y).norm() / gamma / std::max(1.0, z.norm());
    y = std::move(y_next);
    out.iterations = t + 1;
    if (config.record_trace) {
      TraceRecord r;
      r.iter = t + 1;
      r.wall_ns = clock.ns();
      r.step_size = gamma;
      r.n_grad = n_grad;
      r.n_prox = n_prox;
      r.primal = primal_value(problem, x);
      r.residual = residual;
      out.trace.push_back(r);
    }
    if (observer) observer(TosIterate{t + 1, z, x, y});
    if (residual <= config.tol) {
      out.converged = true;
      break;
    }
  }
  out.x = x;
  out.z = z;
  out.y = y;
  return out;
}

void PdhgConfig::validate() const {
  if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("pdhg beta must lie in (0, 1)");
  require_positive("pdhg L_f", L_f);
  if (!(tol >= 0.0)) throw std::invalid_argument("tol must be nonnegative");
  if (!(max_seconds > 0.0)) throw std::invalid_argument("max_seconds must be positive");
}

Vector moreau_dual_prox(const ProxOperator& h, const Vector& v, double sigma) {
  require_positive("dual prox sigma", sigma);
  return v - sigma * h.prox(v / sigma, 1.0 / sigma);
}

BaselineResult pdhg_solve(const CompositeProblem& problem, const Vector& x0, const Vector& u0,
                          const PdhgConfig& config) {
  config.validate();
  require_dim("pdhg x0", x0.size(), problem.dim());
  require_dim("pdhg u0", u0.size(), problem.dim());
  const double tau = config.tau();
  const double sigma = config.sigma();

  BaselineResult out;
  Vector x = x0;
  Vector u = u0;
  std::uint64_t n_grad = 0, n_prox = 0;
  const Stopwatch clock;
  for (std::uint64_t t = 0; t < config.max_iter; ++t) {
    if (clock.seconds() >= config.max_seconds) break;
    Vector u_next = moreau_dual_prox(problem.h(), u + sigma * x, sigma);
    const Vector grad = problem.f().gradient(x);
    Vector x_next = problem.g().prox(x - tau * (grad + 2.0 * u_next - u), tau);
    n_grad += 1;
    n_prox += 2;
    const double residual =
        std::sqrt((x_next - x).squaredNorm() + (tau * (u_next - u)).squaredNorm()) /
        std::max(1.0, x.norm());
    x = std::move(x_next);
    u = std::move(u_next);
    out.iterations = t + 1;
    if (config.record_trace) {
      TraceRecord r;
      r.iter = t + 1;
      r.wall_ns = clock.ns();
      r.step_size = tau;
      r.n_grad = n_grad;
      r.n_prox = n_prox;
      r.primal = primal_value(problem, x);
      r.residual = residual;
      out.trace.push_back(r);
    }
    if (residual <= config.tol) {
      out.converged = true;
      break;
    }
  }
  out.x = x;
  out.z = x;
  out.y = u;
  return out;
}

}  // namespace atos
