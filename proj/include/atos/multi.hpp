#pragma once

#include <vector>

#include "atos/solver.hpp"

namespace atos {

// min phi(x) + sum_j h_j(x), solved in the product space of k copies with a
// consensus constraint.
class MultiProxProblem {
 public:
  MultiProxProblem(SmoothOracle phi, std::vector<ProxOperator> terms,
                   std::optional<double> beta_h = std::nullopt);

  Index dim() const { return phi_.dim(); }
  Index k() const { return static_cast<Index>(terms_.size()); }
  const SmoothOracle& phi() const { return phi_; }
  const std::vector<ProxOperator>& terms() const { return terms_; }
  // Shared Lipschitz bound of each h_j; defaults to the largest bound carried
  // by the terms when every term has one.
  const std::optional<double>& beta_h() const { return beta_h_; }

 private:
  SmoothOracle phi_;
  std::vector<ProxOperator> terms_;
  std::optional<double> beta_h_;
};

struct ProductState {
  Vector x;     // consensus iterate, length p
  RowMatrix Z;  // k x p
  RowMatrix U;  // k x p
  double gamma = 1.0;
  double gamma_prev = 1.0;
  double delta_prev = 0.0;
  std::uint64_t iter = 0;
  std::uint64_t n_grad = 0;
  std::uint64_t n_func = 0;
  std::uint64_t n_prox = 0;
  std::uint64_t backtracks = 0;
  double residual = kInf;
};

double multi_primal_value(const MultiProxProblem& problem, const Vector& x);

// phi(zbar) + <grad phi(zbar), x - zbar> + |x 1^T - Z|_F^2 / (2 gamma)
double multi_quadratic_model(double phi_zbar, const Vector& grad_zbar, const Vector& zbar,
                             const Vector& x, const RowMatrix& Z, double gamma);

ProductState multi_initial_state(const MultiProxProblem& problem, const Vector& z0,
                                 const Vector& u0, double gamma0);

ProductState multi_step(const MultiProxProblem& problem, ProductState state,
                        const AtosConfig& config, Variant variant, std::optional<double> beta_h);

using ProductObserver = std::function<void(const ProductState&)>;

// Returns the consensus iterate; u fields hold U flattened row-major.
AtosResult multi_solve(const MultiProxProblem& problem, const Vector& z0, const Vector& u0,
                       const AtosConfig& config, const ProductObserver& observer = {});

}  // namespace atos
