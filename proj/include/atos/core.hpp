#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>

#include "atos/errors.hpp"

namespace atos {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Index = Eigen::Index;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Matrix-shaped unknowns travel as row-major flattened vectors.
RowMatrix unflatten(const Vector& x, Index rows, Index cols);
Vector flatten(const RowMatrix& X);

// Smooth term f with value, gradient and an optional Lipschitz constant of
// the gradient.
class SmoothOracle {
 public:
  using ValueFn = std::function<double(const Vector&)>;
  using GradientFn = std::function<Vector(const Vector&)>;
  using ValueGradientFn = std::function<std::pair<double, Vector>(const Vector&)>;

  SmoothOracle(Index dim, ValueFn value, GradientFn gradient,
               std::optional<double> lipschitz = std::nullopt,
               ValueGradientFn value_and_gradient = {});

  Index dim() const { return dim_; }
  double value(const Vector& x) const;
  Vector gradient(const Vector& x) const;
  // Shares work between value and gradient when the loss allows it.
  std::pair<double, Vector> value_and_gradient(const Vector& x) const;
  const std::optional<double>& lipschitz_estimate() const { return lipschitz_; }

 private:
  void check_dim(const Vector& x) const;

  Index dim_;
  ValueFn value_;
  GradientFn gradient_;
  ValueGradientFn value_and_gradient_;
  std::optional<double> lipschitz_;
};

// Optional metadata of a proximable term.
struct ProxTraits {
  std::string name;
  std::optional<double> lipschitz_bound;
  bool is_indicator = false;
  // Fenchel conjugate value (may be +inf) and the prox of sigma * conjugate.
  std::function<double(const Vector&)> conjugate_value;
  std::function<Vector(const Vector&, double)> conjugate_prox;
};

class ProxOperator {
 public:
  using ProxFn = std::function<Vector(const Vector&, double)>;
  using ValueFn = std::function<double(const Vector&)>;

  ProxOperator(Index dim, ProxFn prox, ValueFn value, ProxTraits traits = {});

  Index dim() const { return dim_; }
  // argmin_z phi(z) + |z - x|^2 / (2 gamma)
  Vector prox(const Vector& x, double gamma) const;
  double value(const Vector& x) const;
  const std::string& name() const { return traits_.name; }
  const std::optional<double>& lipschitz_bound() const { return traits_.lipschitz_bound; }
  bool is_indicator() const { return traits_.is_indicator; }

  bool has_conjugate() const { return static_cast<bool>(traits_.conjugate_value); }
  double conjugate_value(const Vector& u) const;
  bool has_conjugate_prox() const { return static_cast<bool>(traits_.conjugate_prox); }
  // prox of sigma * phi^*, taken from the closed form when available and
  // from the Moreau identity otherwise.
  Vector conjugate_prox(const Vector& v, double sigma) const;

 private:
  void check_dim(const Vector& x) const;

  Index dim_;
  ProxFn prox_;
  ValueFn value_;
  ProxTraits traits_;
};

// min f(x) + g(x) + h(x)
class CompositeProblem {
 public:
  CompositeProblem(SmoothOracle f, ProxOperator g, ProxOperator h,
                   std::optional<double> mu_f = std::nullopt,
                   std::optional<double> L_h = std::nullopt);

  Index dim() const { return f_.dim(); }
  const SmoothOracle& f() const { return f_; }
  const ProxOperator& g() const { return g_; }
  const ProxOperator& h() const { return h_; }
  const std::optional<double>& mu_f() const { return mu_f_; }
  const std::optional<double>& L_h() const { return L_h_; }

 private:
  SmoothOracle f_;
  ProxOperator g_;
  ProxOperator h_;
  std::optional<double> mu_f_;
  std::optional<double> L_h_;
};

struct SolverState {
  Vector z;
  Vector u;
  Vector x;  // last primal iterate x_{t+1}
  double gamma = 1.0;       // step proposed for the next iteration
  double gamma_prev = 1.0;  // last accepted step
  double delta_prev = 0.0;
  Vector ergodic_x_sum;
  Vector ergodic_u_sum;
  double s = 0.0;  // sum of accepted steps
  std::uint64_t iter = 0;
  std::uint64_t n_grad = 0;
  std::uint64_t n_func = 0;
  std::uint64_t n_prox = 0;
  std::uint64_t backtracks = 0;  // rejected candidates, cumulative
  double residual = kInf;
};

SolverState initial_state(const Vector& z0, const Vector& u0, double gamma0);

struct TStep {
  Vector z_next;
  Vector u_next;
  Vector x;
};

// f(x) + g(x) + h(x); +inf when an indicator is violated.
double primal_value(const CompositeProblem& problem, const Vector& x);

// f(x) + g(x) + <x, u> - h^*(u). Requires a closed-form conjugate of h.
double lagrangian_value(const CompositeProblem& problem, const Vector& x, const Vector& u);

double quadratic_model(const Vector& z, double fz, const Vector& grad_z, const Vector& x,
                       double gamma);

TStep apply_T(const CompositeProblem& problem, const Vector& z, const Vector& u, double gamma);

// |(z_next - z, gamma (u_next - u))| / max(1, |z|)
double step_residual(const Vector& z, const Vector& u, const Vector& z_next,
                     const Vector& u_next, double gamma);

double fixed_point_residual(const CompositeProblem& problem, const Vector& z, const Vector& u,
                            double gamma);

void require_dim(const char* what, Index got, Index expected);
void require_positive(const char* what, double value);

}  // namespace atos
