#include <stdexcept>

#include "atos/prox.hpp"

namespace atos {

namespace {

// Condat's direct algorithm for 1D total-variation denoising. Reads n samples
// with the given stride and writes the solution with the same stride.
void tv1d_denoise(const double* in, double* out, Index n, Index stride, double lambda) {
  if (n <= 0) return;
  auto I = [&](Index k) { return in[k * stride]; };
  auto O = [&](Index k) -> double& { return out[k * stride]; };
  if (lambda <= 0.0) {
    for (Index k = 0; k < n; ++k) O(k) = I(k);
    return;
  }
  Index k = 0, k0 = 0, kplus = 0, kminus = 0;
  double umin = lambda, umax = -lambda;
  double vmin = I(0) - lambda, vmax = I(0) + lambda;
  const double twolambda = 2.0 * lambda;
  const double minlambda = -lambda;
  for (;;) {
    while (k == n - 1) {
      if (umin < 0.0) {
        do O(k0++) = vmin; while (k0 <= kminus);
        k = kminus = k0;
        vmin = I(k);
        umin = lambda;
        umax = vmin + umin - vmax;
      } else if (umax > 0.0) {
        do O(k0++) = vmax; while (k0 <= kplus);
        k = kplus = k0;
        vmax = I(k);
        umax = minlambda;
        umin = vmax + umax - vmin;
      } else {
        vmin += umin / static_cast<double>(k - k0 + 1);
        do O(k0++) = vmin; while (k0 <= k);
        return;
      }
    }
    if ((umin += I(k + 1) - vmin) < minlambda) {
      do O(k0++) = vmin; while (k0 <= kminus);
      k = kplus = kminus = k0;
      vmin = I(k);
      vmax = vmin + twolambda;
      umin = lambda;
      umax = minlambda;
    } else if ((umax += I(k + 1) - vmax) > lambda) {
      do O(k0++) = vmax; while (k0 <= kplus);
      k = kplus = kminus = k0;
      vmax = I(k);
      vmin = vmax - twolambda;
      umin = lambda;
      umax = minlambda;
    } else {
      ++k;
      if (umin >= lambda) {
        kminus = k;
        vmin += (umin - lambda) / static_cast<double>(kminus - k0 + 1);
        umin = lambda;
      }
      if (umax <= minlambda) {
        kplus = k;
        vmax += (umax + lambda) / static_cast<double>(kplus - k0 + 1);
        umax = minlambda;
      }
    }
  }
}

}  // namespace

Vector fused_lasso_prox(const Vector& x, double gamma) {
  if (x.size() < 1) throw std::invalid_argument("fused_lasso_prox: empty input");
  require_positive("fused_lasso_prox gamma", gamma);
  Vector out(x.size());
  tv1d_denoise(x.data(), out.data(), x.size(), 1, gamma);
  return out;
}

RowMatrix tv2d_row_prox(const RowMatrix& X, double gamma) {
  require_positive("tv2d_row_prox gamma", gamma);
  if (X.rows() < 1 || X.cols() < 1) throw std::invalid_argument("tv2d_row_prox: empty input");
  RowMatrix out(X.rows(), X.cols());
  for (Index i = 0; i < X.rows(); ++i) {
    tv1d_denoise(X.data() + i * X.cols(), out.data() + i * X.cols(), X.cols(), 1, gamma);
  }
  return out;
}

RowMatrix tv2d_col_prox(const RowMatrix& X, double gamma) {
  require_positive("tv2d_col_prox gamma", gamma);
  if (X.rows() < 1 || X.cols() < 1) throw std::invalid_argument("tv2d_col_prox: empty input");
  RowMatrix out(X.rows(), X.cols());
  for (Index j = 0; j < X.cols(); ++j) {
    tv1d_denoise(X.data() + j, out.data() + j, X.rows(), X.cols(), gamma);
  }
  return out;
}

}  // namespace atos
