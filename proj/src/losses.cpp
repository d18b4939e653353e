#include "atos/losses.hpp"

#include <cmath>
#include <stdexcept>

namespace atos {

namespace {

void validate(const Dataset& d) {
  if (d.A.rows() < 1 || d.A.cols() < 1) throw std::invalid_argument("Dataset: empty design");
  require_dim("Dataset targets", d.b.size(), d.A.rows());
}

}  // namespace

double log1p_exp(double t) { return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }

double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

double gram_max_eigenvalue(const Matrix& A, double rel_tol, int max_iter) {
  if (A.size() == 0) return 0.0;
  // Iterate on the smaller of A^T A and A A^T; both share the top eigenvalue.
  const bool use_cols = A.cols() <= A.rows();
  const Index m = use_cols ? A.cols() : A.rows();
  Vector v(m);
  for (Index i = 0; i < m; ++i) v[i] = 1.0 + 0.01 * static_cast<double>(i % 7);
  v.normalize();
  double lambda = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    Vector w = use_cols ? Vector(A.transpose() * (A * v)) : Vector(A * (A.transpose() * v));
    const double next = v.dot(w);
    const double nrm = w.norm();
    if (nrm == 0.0) return 0.0;
    v = w / nrm;
    if (it > 0 && std::abs(next - lambda) <= rel_tol * std::abs(next)) return std::max(next, nrm);
    lambda = next;
  }
  return lambda;
}

SmoothOracle least_squares_oracle(std::shared_ptr<const Dataset> data, double scale) {
  if (!data) throw std::invalid_argument("least_squares_oracle: null dataset");
  validate(*data);
  require_positive("least squares scale", scale);
  const double L = 2.0 * scale * gram_max_eigenvalue(data->A);
  auto value = [data, scale](const Vector& x) {
    return scale * (data->b - data->A * x).squaredNorm();
  };
  auto gradient = [data, scale](const Vector& x) {
    return Vector(-2.0 * scale * (data->A.transpose() * (data->b - data->A * x)));
  };
  auto both = [data, scale](const Vector& x) {
    const Vector r = data->b - data->A * x;
    return std::pair<double, Vector>(scale * r.squaredNorm(),
                                     -2.0 * scale * (data->A.transpose() * r));
  };
  return SmoothOracle(data->A.cols(), value, gradient, L, both);
}

SmoothOracle logistic_oracle(std::shared_ptr<const Dataset> data) {
  if (!data) throw std::invalid_argument("logistic_oracle: null dataset");
  validate(*data);
  for (Index i = 0; i < data->b.size(); ++i) {
    if (data->b[i] != 1.0 && data->b[i] != -1.0) {
      throw std::invalid_argument("logistic_oracle: labels must be -1 or +1");
    }
  }
  const double n = static_cast<double>(data->A.rows());
  const double L = gram_max_eigenvalue(data->A) / (4.0 * n);
  auto value_of = [data, n](const Vector& margins) {
    double v = 0.0;
    for (Index i = 0; i < margins.size(); ++i) v += log1p_exp(-data->b[i] * margins[i]);
    return v / n;
  };
  auto weights_of = [data, n](const Vector& margins) {
    Vector w(margins.size());
    for (Index i = 0; i < margins.size(); ++i) {
      w[i] = -data->b[i] * sigmoid(-data->b[i] * margins[i]) / n;
    }
    return w;
  };
  auto value = [data, value_of](const Vector& x) { return value_of(data->A * x); };
  auto gradient = [data, weights_of](const Vector& x) {
    return Vector(data->A.transpose() * weights_of(data->A * x));
  };
  auto both = [data, value_of, weights_of](const Vector& x) {
    const Vector m = data->A * x;
    return std::pair<double, Vector>(value_of(m), data->A.transpose() * weights_of(m));
  };
  return SmoothOracle(data->A.cols(), value, gradient, L, both);
}

}  // namespace atos
