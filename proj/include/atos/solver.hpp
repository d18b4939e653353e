#pragma once

#include <functional>
#include <optional>
#include <span>

#include "atos/core.hpp"
#include "atos/trace.hpp"

namespace atos {

enum class Variant { V1, V2 };

struct AtosConfig {
  Variant variant = Variant::V1;
  double tau = 0.7;
  std::optional<double> gamma0;
  // Lipschitz bound of h for V2; falls back to the bound carried by h.
  std::optional<double> beta_h;
  std::uint64_t max_iter = 10000;
  double tol = 1e-8;
  std::uint64_t max_backtracks = 100;
  double growth_cap_exponent = 0.05;
  bool report_best_of_last_and_ergodic = true;
  // When false every step is accepted without the sufficient-decrease test.
  bool line_search = true;
  double max_seconds = kInf;
  bool record_trace = true;

  void validate() const;
};

struct AtosResult {
  Vector x;  // best of last and ergodic when requested, else last
  Vector x_last;
  Vector z_last;
  Vector u_last;
  Vector x_ergodic;
  Vector u_ergodic;
  std::uint64_t iterations = 0;
  bool converged = false;
  bool downgraded_to_v1 = false;
  Trace trace;
};

using StateObserver = std::function<void(const SolverState&)>;

double estimate_gamma0(const SmoothOracle& f, const Vector& z0);

// Largest admissible next step, capped at gamma * 2^cap_exponent.
double grow_step(double gamma, double delta, double beta_h, double cap_exponent);

// One outer iteration of the adaptive method. `variant` is the effective
// variant; V2 requires `beta_h`.
SolverState atos_step(const CompositeProblem& problem, SolverState state, const AtosConfig& config,
                      Variant variant, std::optional<double> beta_h);

AtosResult solve(const CompositeProblem& problem, const Vector& z0, const Vector& u0,
                 const AtosConfig& config, const StateObserver& observer = {});

struct ErgodicPoint {
  Vector x_bar;
  Vector u_bar;
  double s = 0.0;
};

struct BoundCheckReport {
  bool holds = true;
  double min_slack = kInf;  // min over t of rhs - lhs
  std::size_t checked = 0;
};

// Saddle gap of the ergodic iterates against the bound
// (|z0 - x_ref|^2 + gamma0^2 |u0 - u_ref|^2) / (2 s_t).
BoundCheckReport ergodic_bound_check(const CompositeProblem& problem,
                                     std::span<const ErgodicPoint> points, const Vector& x_ref,
                                     const Vector& u_ref, const Vector& z0, const Vector& u0,
                                     double gamma0, double slack = 1e-9);

}  // namespace atos
