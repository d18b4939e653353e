#include "atos/core.hpp"

#include <cmath>
#include <stdexcept>

namespace atos {

void require_dim(const char* what, Index got, Index expected) {
  if (got != expected) {
    throw std::invalid_argument(std::string(what) + ": dimension " + std::to_string(got) +
                                ", expected " + std::to_string(expected));
  }
}

void require_positive(const char* what, double value) {
  if (!(value > 0.0)) {
    throw std::invalid_argument(std::string(what) + " must be positive, got " +
                                std::to_string(value));
  }
}

RowMatrix unflatten(const Vector& x, Index rows, Index cols) {
  if (rows < 1 || cols < 1 || rows * cols != x.size()) {
    throw std::invalid_argument("unflatten: shape does not match vector length");
  }
  return Eigen::Map<const RowMatrix>(x.data(), rows, cols);
}

Vector flatten(const RowMatrix& X) {
  return Eigen::Map<const Vector>(X.data(), X.size());
}

SmoothOracle::SmoothOracle(Index dim, ValueFn value, GradientFn gradient,
                           std::optional<double> lipschitz,
                           ValueGradientFn value_and_gradient)
    : dim_(dim),
      value_(std::move(value)),
      gradient_(std::move(gradient)),
      value_and_gradient_(std::move(value_and_gradient)),
      lipschitz_(lipschitz) {
  if (dim_ < 1) throw std::invalid_argument("SmoothOracle: dimension must be positive");
  if (!value_ || !gradient_) throw std::invalid_argument("SmoothOracle: missing callables");
  if (lipschitz_ && !(*lipschitz_ >= 0.0)) {
    throw std::invalid_argument("SmoothOracle: Lipschitz estimate must be nonnegative");
  }
}

void SmoothOracle::check_dim(const Vector& x) const { require_dim("SmoothOracle", x.size(), dim_); }

double SmoothOracle::value(const Vector& x) const {
  check_dim(x);
  return value_(x);
}

Vector SmoothOracle::gradient(const Vector& x) const {
  check_dim(x);
  return gradient_(x);
}

std::pair<double, Vector> SmoothOracle::value_and_gradient(const Vector& x) const {
  check_dim(x);
  if (value_and_gradient_) return value_and_gradient_(x);
  return {value_(x), gradient_(x)};
}

ProxOperator::ProxOperator(Index dim, ProxFn prox, ValueFn value, ProxTraits traits)
    : dim_(dim), prox_(std::move(prox)), value_(std::move(value)), traits_(std::move(traits)) {
  if (dim_ < 1) throw std::invalid_argument("ProxOperator: dimension must be positive");
  if (!prox_ || !value_) throw std::invalid_argument("ProxOperator: missing callables");
  if (traits_.lipschitz_bound && !(*traits_.lipschitz_bound >= 0.0)) {
    throw std::invalid_argument("ProxOperator: Lipschitz bound must be nonnegative");
  }
}

void ProxOperator::check_dim(const Vector& x) const {
  require_dim(traits_.name.empty() ? "ProxOperator" : traits_.name.c_str(), x.size(), dim_);
}

Vector ProxOperator::prox(const Vector& x, double gamma) const {
  check_dim(x);
  require_positive("prox step", gamma);
  return prox_(x, gamma);
}

double ProxOperator::value(const Vector& x) const {
  check_dim(x);
  return value_(x);
}

double ProxOperator::conjugate_value(const Vector& u) const {
  check_dim(u);
  if (!traits_.conjugate_value) {
    throw UnsupportedError("no closed-form conjugate for " +
                           (traits_.name.empty() ? std::string("operator") : traits_.name));
  }
  return traits_.conjugate_value(u);
}

Vector ProxOperator::conjugate_prox(const Vector& v, double sigma) const {
  check_dim(v);
  require_positive("conjugate prox step", sigma);
  if (traits_.conjugate_prox) return traits_.conjugate_prox(v, sigma);
  // Moreau: prox_{sigma phi^*}(v) = v - sigma prox_{phi / sigma}(v / sigma)
  return v - sigma * prox_(v / sigma, 1.0 / sigma);
}

CompositeProblem::CompositeProblem(SmoothOracle f, ProxOperator g, ProxOperator h,
                                   std::optional<double> mu_f, std::optional<double> L_h)
    : f_(std::move(f)), g_(std::move(g)), h_(std::move(h)), mu_f_(mu_f), L_h_(L_h) {
  require_dim("CompositeProblem g", g_.dim(), f_.dim());
  require_dim("CompositeProblem h", h_.dim(), f_.dim());
  if (mu_f_ && !(*mu_f_ >= 0.0)) throw std::invalid_argument("mu_f must be nonnegative");
  if (L_h_ && !(*L_h_ >= 0.0)) throw std::invalid_argument("L_h must be nonnegative");
}

SolverState initial_state(const Vector& z0, const Vector& u0, double gamma0) {
  require_dim("u0", u0.size(), z0.size());
  require_positive("gamma0", gamma0);
  SolverState s;
  s.z = z0;
  s.u = u0;
  s.x = z0;
  s.gamma = gamma0;
  s.gamma_prev = gamma0;
  s.delta_prev = 0.0;
  s.ergodic_x_sum = Vector::Zero(z0.size());
  s.ergodic_u_sum = Vector::Zero(z0.size());
  return s;
}

double primal_value(const CompositeProblem& problem, const Vector& x) {
  require_dim("primal_value", x.size(), problem.dim());
  const double gx = problem.g().value(x);
  const double hx = problem.h().value(x);
  if (gx == kInf || hx == kInf) return kInf;
  return problem.f().value(x) + gx + hx;
}

double lagrangian_value(const CompositeProblem& problem, const Vector& x, const Vector& u) {
  require_dim("lagrangian_value x", x.size(), problem.dim());
  require_dim("lagrangian_value u", u.size(), problem.dim());
  const double hs = problem.h().conjugate_value(u);
  return problem.f().value(x) + problem.g().value(x) + x.dot(u) - hs;
}

double quadratic_model(const Vector& z, double fz, const Vector& grad_z, const Vector& x,
                       double gamma) {
  require_positive("quadratic_model gamma", gamma);
  require_dim("quadratic_model x", x.size(), z.size());
  require_dim("quadratic_model grad", grad_z.size(), z.size());
  const Vector d = x - z;
  return fz + grad_z.dot(d) + d.squaredNorm() / (2.0 * gamma);
}

TStep apply_T(const CompositeProblem& problem, const Vector& z, const Vector& u, double gamma) {
  require_positive("apply_T gamma", gamma);
  require_dim("apply_T z", z.size(), problem.dim());
  require_dim("apply_T u", u.size(), problem.dim());
  TStep out;
  const Vector grad = problem.f().gradient(z);
  out.x = problem.g().prox(z - gamma * (u + grad), gamma);
  out.z_next = problem.h().prox(out.x + gamma * u, gamma);
  out.u_next = u + (out.x - out.z_next) / gamma;
  return out;
}

double step_residual(const Vector& z, const Vector& u, const Vector& z_next,
                     const Vector& u_next, double gamma) {
  const double dz = (z_next - z).squaredNorm();
  const double du = (gamma * (u_next - u)).squaredNorm();
  return std::sqrt(dz + du) / std::max(1.0, z.norm());
}

double fixed_point_residual(const CompositeProblem& problem, const Vector& z, const Vector& u,
                            double gamma) {
  const TStep t = apply_T(problem, z, u, gamma);
  return step_residual(z, u, t.z_next, t.u_next, gamma);
}

}  // namespace atos
