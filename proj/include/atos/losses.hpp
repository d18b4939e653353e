#pragma once

#include <memory>

#include "atos/core.hpp"

namespace atos {

struct Dataset {
  Matrix A;  // n x p
  Vector b;  // n; labels in {-1, +1} for logistic regression
};

// Largest eigenvalue of A^T A by power iteration from a deterministic start.
double gram_max_eigenvalue(const Matrix& A, double rel_tol = 1e-14, int max_iter = 100000);

// scale * |b - A x|^2 with L = 2 * scale * lambda_max(A^T A).
SmoothOracle least_squares_oracle(std::shared_ptr<const Dataset> data, double scale = 1.0);

// (1/n) sum_i log(1 + exp(-b_i a_i^T x)) with L = lambda_max(A^T A) / (4 n).
SmoothOracle logistic_oracle(std::shared_ptr<const Dataset> data);

// log(1 + exp(t)) without overflow.
double log1p_exp(double t);
// 1 / (1 + exp(-t)) without overflow.
double sigmoid(double t);

}  // namespace atos
