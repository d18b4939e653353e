#pragma once

#include <functional>

#include "atos/core.hpp"
#include "atos/trace.hpp"

namespace atos {

struct BaselineConfig {
  std::uint64_t max_iter = 10000;
  double tol = 1e-8;
  double max_seconds = kInf;
  bool record_trace = true;
};

struct BaselineResult {
  Vector x;  // last primal iterate
  Vector z;  // TOS: last prox_h point; PDHG: unused
  Vector y;  // TOS: last y; PDHG: last dual iterate
  std::uint64_t iterations = 0;
  bool converged = false;
  Trace trace;
};

// Iterate of the fixed-step method after step t: z = z_t, x = x_{t+1}, y = y_{t+1}.
struct TosIterate {
  std::uint64_t iter;
  const Vector& z;
  const Vector& x;
  const Vector& y;
};

using TosObserver = std::function<void(const TosIterate&)>;

// Davis-Yin splitting with a constant step:
//   z_t = prox_{gamma h}(y_t)
//   x_{t+1} = prox_{gamma g}(2 z_t - y_t - gamma grad f(z_t))
//   y_{t+1} = y_t - z_t + x_{t+1}
BaselineResult tos_fixed_solve(const CompositeProblem& problem, const Vector& y0, double gamma,
                               const BaselineConfig& config, const TosObserver& observer = {});

struct PdhgConfig {
  double beta = 0.5;
  double L_f = 1.0;
  std::uint64_t max_iter = 10000;
  double tol = 1e-8;
  double max_seconds = kInf;
  bool record_trace = true;

  static constexpr double kSafety = 1e-6;
  double tau() const { return 2.0 * (1.0 - beta) / L_f * (1.0 - kSafety); }
  double sigma() const { return beta / tau(); }
  void validate() const;
};

// prox_{sigma h^*}(v) = v - sigma prox_{h / sigma}(v / sigma)
Vector moreau_dual_prox(const ProxOperator& h, const Vector& v, double sigma);

// Condat-Vu primal-dual iteration:
//   u_{t+1} = prox_{sigma h^*}(u_t + sigma x_t)
//   x_{t+1} = prox_{tau g}(x_t - tau (grad f(x_t) + 2 u_{t+1} - u_t))
BaselineResult pdhg_solve(const CompositeProblem& problem, const Vector& x0, const Vector& u0,
                          const PdhgConfig& config);

}  // namespace atos
