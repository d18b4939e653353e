#include "atos/prox.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>

namespace atos {

namespace {

// Indicator membership is tested with a small relative slack so that proxes
// that are exact up to rounding still land inside the set.
constexpr double kFeasTol = 1e-9;

double feas_scale(const Vector& x) {
  return std::max(1.0, x.size() > 0 ? x.cwiseAbs().maxCoeff() : 0.0);
}

void require_offset(int offset) {
  if (offset != 0 && offset != 1) throw std::invalid_argument("pair offset must be 0 or 1");
}

void require_phase(int phase) {
  if (phase < 0 || phase > 2) throw std::invalid_argument("trend filter phase must be 0, 1 or 2");
}

void require_nonneg(const char* what, double v) {
  if (!(v >= 0.0)) throw std::invalid_argument(std::string(what) + " must be nonnegative");
}

Vector clip(const Vector& v, double bound) { return v.cwiseMax(-bound).cwiseMin(bound); }

Index trend_rows(Index p, int phase) { return p - phase >= 3 ? (p - phase) / 3 : 0; }

// L x for the phase-shifted second-difference operator.
Vector trend_apply(const Vector& x, int phase) {
  const Index m = trend_rows(x.size(), phase);
  Vector y(m);
  for (Index i = 0; i < m; ++i) {
    const Index j = phase + 3 * i;
    y[i] = x[j] - 2.0 * x[j + 1] + x[j + 2];
  }
  return y;
}

// L^T w
Vector trend_adjoint(const Vector& w, Index p, int phase) {
  Vector x = Vector::Zero(p);
  for (Index i = 0; i < w.size(); ++i) {
    const Index j = phase + 3 * i;
    x[j] += w[i];
    x[j + 1] -= 2.0 * w[i];
    x[j + 2] += w[i];
  }
  return x;
}

double total_variation(const double* x, Index n, Index stride) {
  double tv = 0.0;
  for (Index k = 0; k + 1 < n; ++k) tv += std::abs(x[(k + 1) * stride] - x[k * stride]);
  return tv;
}

}  // namespace

GroupPartition::GroupPartition(std::vector<std::vector<Index>> groups, Index p)
    : groups_(std::move(groups)), p_(p) {
  if (p_ < 1) throw std::invalid_argument("GroupPartition: dimension must be positive");
  std::vector<char> seen(static_cast<std::size_t>(p_), 0);
  for (const auto& g : groups_) {
    if (g.empty()) throw std::invalid_argument("GroupPartition: empty group");
    for (Index i : g) {
      if (i < 0 || i >= p_) throw std::invalid_argument("GroupPartition: index out of range");
      if (seen[static_cast<std::size_t>(i)]) {
        throw std::invalid_argument("GroupPartition: groups overlap at index " + std::to_string(i));
      }
      seen[static_cast<std::size_t>(i)] = 1;
    }
  }
}

Vector soft_threshold(const Vector& x, double gamma) {
  require_positive("soft_threshold gamma", gamma);
  Vector out(x.size());
  for (Index i = 0; i < x.size(); ++i) {
    const double a = std::abs(x[i]);
    out[i] = a >= gamma ? (1.0 - gamma / a) * x[i] : 0.0;
  }
  return out;
}

Vector group_soft_threshold(const Vector& x, const GroupPartition& partition, double gamma) {
  require_positive("group_soft_threshold gamma", gamma);
  require_dim("group_soft_threshold", x.size(), partition.dim());
  Vector out = x;
  for (const auto& g : partition.groups()) {
    double sq = 0.0;
    for (Index i : g) sq += x[i] * x[i];
    const double nrm = std::sqrt(sq);
    const double scale = nrm > gamma ? 1.0 - gamma / nrm : 0.0;
    for (Index i : g) out[i] = scale * x[i];
  }
  return out;
}

Vector isotonic_block_project(const Vector& x, int offset) {
  require_offset(offset);
  Vector out = x;
  for (Index i = offset; i + 1 < x.size(); i += 2) {
    if (x[i] > x[i + 1]) out[i] = out[i + 1] = 0.5 * (x[i] + x[i + 1]);
  }
  return out;
}

std::pair<double, double> nearly_isotonic_pair_prox(double a, double b, double gamma) {
  require_positive("nearly_isotonic_pair_prox gamma", gamma);
  if (a <= b) return {a, b};
  if (a - gamma >= b + gamma) return {a - gamma, b + gamma};
  const double m = 0.5 * (a + b);
  return {m, m};
}

Vector nearly_isotonic_block_prox(const Vector& x, double gamma, int offset) {
  require_offset(offset);
  require_positive("nearly_isotonic_block_prox gamma", gamma);
  Vector out = x;
  for (Index i = offset; i + 1 < x.size(); i += 2) {
    std::tie(out[i], out[i + 1]) = nearly_isotonic_pair_prox(x[i], x[i + 1], gamma);
  }
  return out;
}

RowMatrix doubly_stochastic_affine_project(const RowMatrix& X) {
  if (X.rows() != X.cols() || X.rows() < 1) {
    throw std::invalid_argument("doubly_stochastic_affine_project: input must be square");
  }
  const double n = static_cast<double>(X.rows());
  const Vector r = X.rowwise().sum();
  const Vector c = X.colwise().sum().transpose();
  const double total = r.sum();
  RowMatrix Z(X.rows(), X.cols());
  for (Index i = 0; i < X.rows(); ++i) {
    for (Index j = 0; j < X.cols(); ++j) {
      Z(i, j) = X(i, j) + 1.0 / n + total / (n * n) - r[i] / n - c[j] / n;
    }
  }
  return Z;
}

Vector nonneg_project(const Vector& x) { return x.cwiseMax(0.0); }

namespace {

struct Svd {
  Matrix U;
  Vector s;
  Matrix V;
};

Svd thin_svd(const RowMatrix& X) {
  Eigen::JacobiSVD<Matrix> svd(Matrix(X), Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success || !svd.singularValues().allFinite()) {
    throw NumericalError("SVD failed");
  }
  return {svd.matrixU(), svd.singularValues(), svd.matrixV()};
}

}  // namespace

RowMatrix trace_norm_prox(const RowMatrix& X, double gamma) {
  require_positive("trace_norm_prox gamma", gamma);
  const Svd d = thin_svd(X);
  const Vector s = (d.s.array() - gamma).cwiseMax(0.0).matrix();
  return d.U * s.asDiagonal() * d.V.transpose();
}

Matrix trend_filter_phase_matrix(Index p, int phase) {
  require_phase(phase);
  const Index m = trend_rows(p, phase);
  Matrix L = Matrix::Zero(m, p);
  for (Index i = 0; i < m; ++i) {
    const Index j = phase + 3 * i;
    L(i, j) = 1.0;
    L(i, j + 1) = -2.0;
    L(i, j + 2) = 1.0;
  }
  return L;
}

Vector trend_filter_block_prox(const Vector& x, double gamma, int phase) {
  require_phase(phase);
  require_positive("trend_filter_block_prox gamma", gamma);
  constexpr double nu = 6.0;
  const Vector Lx = trend_apply(x, phase);
  const Vector shrunk = soft_threshold(Lx, nu * gamma);
  return x + trend_adjoint(shrunk - Lx, x.size(), phase) / nu;
}

PenaltyKind parse_penalty_kind(const std::string& name) {
  if (name == "group_lasso") return PenaltyKind::GroupLasso;
  if (name == "tv_half") return PenaltyKind::TvHalf;
  if (name == "l1_matrix") return PenaltyKind::L1Matrix;
  if (name == "nearly_isotonic") return PenaltyKind::NearlyIsotonic;
  if (name == "trend_filter_phase") return PenaltyKind::TrendFilterPhase;
  throw std::invalid_argument("unknown penalty kind: " + name);
}

double lipschitz_bound(PenaltyKind kind, const PenaltyShape& shape) {
  require_nonneg("lambda", shape.lambda);
  const double lam = shape.lambda;
  switch (kind) {
    case PenaltyKind::GroupLasso:
      return lam * std::sqrt(static_cast<double>(shape.groups));
    case PenaltyKind::TvHalf:
      return 2.0 * lam * std::sqrt(static_cast<double>(shape.rows * shape.cols));
    case PenaltyKind::L1Matrix:
      return lam * std::sqrt(static_cast<double>(shape.rows * shape.cols));
    case PenaltyKind::NearlyIsotonic:
      return 2.0 * lam * std::sqrt(static_cast<double>(shape.p));
    case PenaltyKind::TrendFilterPhase:
      return lam * std::sqrt(6.0 * static_cast<double>(shape.p));
  }
  throw std::invalid_argument("unknown penalty kind");
}

ProxOperator make_zero(Index p) {
  ProxTraits t;
  t.name = "zero";
  t.lipschitz_bound = 0.0;
  t.conjugate_value = [](const Vector& u) {
    return u.cwiseAbs().maxCoeff() <= kFeasTol ? 0.0 : kInf;
  };
  t.conjugate_prox = [](const Vector& v, double) { return Vector(Vector::Zero(v.size())); };
  return ProxOperator(
      p, [](const Vector& x, double) { return x; }, [](const Vector&) { return 0.0; },
      std::move(t));
}

ProxOperator make_l1(Index p, double lambda) {
  require_nonneg("l1 lambda", lambda);
  ProxTraits t;
  t.name = "l1";
  t.lipschitz_bound = lambda * std::sqrt(static_cast<double>(p));
  t.conjugate_value = [lambda](const Vector& u) {
    return u.cwiseAbs().maxCoeff() <= lambda * (1.0 + kFeasTol) + kFeasTol ? 0.0 : kInf;
  };
  t.conjugate_prox = [lambda](const Vector& v, double) { return clip(v, lambda); };
  return ProxOperator(
      p,
      [lambda](const Vector& x, double gamma) {
        return lambda > 0.0 ? soft_threshold(x, gamma * lambda) : x;
      },
      [lambda](const Vector& x) { return lambda * x.lpNorm<1>(); }, std::move(t));
}

ProxOperator make_group_lasso(const GroupPartition& partition, double lambda) {
  require_nonneg("group lasso lambda", lambda);
  ProxTraits t;
  t.name = "group_lasso";
  t.lipschitz_bound = lambda * std::sqrt(static_cast<double>(partition.size()));
  auto in_some_group = std::make_shared<std::vector<char>>(partition.dim(), 0);
  for (const auto& g : partition.groups()) {
    for (Index i : g) (*in_some_group)[static_cast<std::size_t>(i)] = 1;
  }
  t.conjugate_value = [partition, lambda, in_some_group](const Vector& u) {
    for (Index i = 0; i < u.size(); ++i) {
      if (!(*in_some_group)[static_cast<std::size_t>(i)] && std::abs(u[i]) > kFeasTol) return kInf;
    }
    for (const auto& g : partition.groups()) {
      double sq = 0.0;
      for (Index i : g) sq += u[i] * u[i];
      if (std::sqrt(sq) > lambda * (1.0 + kFeasTol) + kFeasTol) return kInf;
    }
    return 0.0;
  };
  t.conjugate_prox = [partition, lambda](const Vector& v, double) {
    Vector out = Vector::Zero(v.size());
    for (const auto& g : partition.groups()) {
      double sq = 0.0;
      for (Index i : g) sq += v[i] * v[i];
      const double nrm = std::sqrt(sq);
      const double scale = nrm > lambda ? lambda / nrm : 1.0;
      for (Index i : g) out[i] = scale * v[i];
    }
    return out;
  };
  return ProxOperator(
      partition.dim(),
      [partition, lambda](const Vector& x, double gamma) {
        return lambda > 0.0 ? group_soft_threshold(x, partition, gamma * lambda) : x;
      },
      [partition, lambda](const Vector& x) {
        double v = 0.0;
        for (const auto& g : partition.groups()) {
          double sq = 0.0;
          for (Index i : g) sq += x[i] * x[i];
          v += std::sqrt(sq);
        }
        return lambda * v;
      },
      std::move(t));
}

ProxOperator make_fused_lasso(Index p, double lambda) {
  require_nonneg("fused lasso lambda", lambda);
  ProxTraits t;
  t.name = "fused_lasso";
  t.lipschitz_bound = 2.0 * lambda * std::sqrt(static_cast<double>(p));
  return ProxOperator(
      p,
      [lambda](const Vector& x, double gamma) {
        return lambda > 0.0 ? fused_lasso_prox(x, gamma * lambda) : x;
      },
      [lambda](const Vector& x) { return lambda * total_variation(x.data(), x.size(), 1); },
      std::move(t));
}

ProxOperator make_tv2d_rows(Index rows, Index cols, double lambda) {
  require_nonneg("tv lambda", lambda);
  ProxTraits t;
  t.name = "tv2d_rows";
  t.lipschitz_bound = lipschitz_bound(PenaltyKind::TvHalf, {lambda, 0, rows, cols, 0});
  return ProxOperator(
      rows * cols,
      [rows, cols, lambda](const Vector& x, double gamma) {
        if (lambda == 0.0) return x;
        return flatten(tv2d_row_prox(unflatten(x, rows, cols), gamma * lambda));
      },
      [rows, cols, lambda](const Vector& x) {
        double v = 0.0;
        for (Index i = 0; i < rows; ++i) v += total_variation(x.data() + i * cols, cols, 1);
        return lambda * v;
      },
      std::move(t));
}

ProxOperator make_tv2d_cols(Index rows, Index cols, double lambda) {
  require_nonneg("tv lambda", lambda);
  ProxTraits t;
  t.name = "tv2d_cols";
  t.lipschitz_bound = lipschitz_bound(PenaltyKind::TvHalf, {lambda, 0, rows, cols, 0});
  return ProxOperator(
      rows * cols,
      [rows, cols, lambda](const Vector& x, double gamma) {
        if (lambda == 0.0) return x;
        return flatten(tv2d_col_prox(unflatten(x, rows, cols), gamma * lambda));
      },
      [rows, cols, lambda](const Vector& x) {
        double v = 0.0;
        for (Index j = 0; j < cols; ++j) v += total_variation(x.data() + j, rows, cols);
        return lambda * v;
      },
      std::move(t));
}

ProxOperator make_isotonic_pairs(Index p, int offset) {
  require_offset(offset);
  ProxTraits t;
  t.name = "isotonic_pairs";
  t.is_indicator = true;
  // Polar cone: u = t (e_i - e_{i+1}) per pair with t >= 0, zero elsewhere.
  t.conjugate_value = [offset](const Vector& u) {
    const double tol = kFeasTol * feas_scale(u);
    std::vector<char> paired(static_cast<std::size_t>(u.size()), 0);
    for (Index i = offset; i + 1 < u.size(); i += 2) {
      paired[static_cast<std::size_t>(i)] = paired[static_cast<std::size_t>(i + 1)] = 1;
      if (std::abs(u[i] + u[i + 1]) > tol || u[i] < -tol) return kInf;
    }
    for (Index i = 0; i < u.size(); ++i) {
      if (!paired[static_cast<std::size_t>(i)] && std::abs(u[i]) > tol) return kInf;
    }
    return 0.0;
  };
  t.conjugate_prox = [offset](const Vector& v, double) {
    Vector out = Vector::Zero(v.size());
    for (Index i = offset; i + 1 < v.size(); i += 2) {
      const double s = std::max(0.0, 0.5 * (v[i] - v[i + 1]));
      out[i] = s;
      out[i + 1] = -s;
    }
    return out;
  };
  return ProxOperator(
      p, [offset](const Vector& x, double) { return isotonic_block_project(x, offset); },
      [offset](const Vector& x) {
        const double tol = kFeasTol * feas_scale(x);
        for (Index i = offset; i + 1 < x.size(); i += 2) {
          if (x[i] > x[i + 1] + tol) return kInf;
        }
        return 0.0;
      },
      std::move(t));
}

ProxOperator make_nearly_isotonic(Index p, double lambda, int offset) {
  require_offset(offset);
  require_nonneg("nearly isotonic lambda", lambda);
  ProxTraits t;
  t.name = "nearly_isotonic";
  t.lipschitz_bound = lipschitz_bound(PenaltyKind::NearlyIsotonic, {lambda, 0, 0, 0, p});
  // Conjugate: indicator of u = s (e_i - e_{i+1}) per pair with s in [0, lambda].
  t.conjugate_value = [offset, lambda](const Vector& u) {
    const double tol = kFeasTol * feas_scale(u);
    std::vector<char> paired(static_cast<std::size_t>(u.size()), 0);
    for (Index i = offset; i + 1 < u.size(); i += 2) {
      paired[static_cast<std::size_t>(i)] = paired[static_cast<std::size_t>(i + 1)] = 1;
      if (std::abs(u[i] + u[i + 1]) > tol || u[i] < -tol || u[i] > lambda + tol) return kInf;
    }
    for (Index i = 0; i < u.size(); ++i) {
      if (!paired[static_cast<std::size_t>(i)] && std::abs(u[i]) > tol) return kInf;
    }
    return 0.0;
  };
  t.conjugate_prox = [offset, lambda](const Vector& v, double) {
    Vector out = Vector::Zero(v.size());
    for (Index i = offset; i + 1 < v.size(); i += 2) {
      const double s = std::clamp(0.5 * (v[i] - v[i + 1]), 0.0, lambda);
      out[i] = s;
      out[i + 1] = -s;
    }
    return out;
  };
  return ProxOperator(
      p,
      [offset, lambda](const Vector& x, double gamma) {
        return lambda > 0.0 ? nearly_isotonic_block_prox(x, gamma * lambda, offset) : x;
      },
      [offset, lambda](const Vector& x) {
        double v = 0.0;
        for (Index i = offset; i + 1 < x.size(); i += 2) v += std::max(x[i] - x[i + 1], 0.0);
        return lambda * v;
      },
      std::move(t));
}

ProxOperator make_doubly_stochastic_affine(Index n) {
  if (n < 1) throw std::invalid_argument("doubly stochastic size must be positive");
  ProxTraits t;
  t.name = "doubly_stochastic_affine";
  t.is_indicator = true;
  // Support function of {Z : Z 1 = 1, Z^T 1 = 1}: finite only on the span of
  // a 1^T + 1 b^T, where it equals <11^T / n, U>.
  const auto orth_part = [n](const RowMatrix& W) {
    const double nn = static_cast<double>(n);
    const Vector r = W.rowwise().sum();
    const Vector c = W.colwise().sum().transpose();
    const double total = r.sum();
    RowMatrix P(n, n);
    for (Index i = 0; i < n; ++i) {
      for (Index j = 0; j < n; ++j) P(i, j) = r[i] / nn + c[j] / nn - total / (nn * nn);
    }
    return P;
  };
  t.conjugate_value = [n, orth_part](const Vector& u) {
    const RowMatrix U = unflatten(u, n, n);
    const double off = (U - orth_part(U)).cwiseAbs().maxCoeff();
    if (off > kFeasTol * feas_scale(u)) return kInf;
    return U.sum() / static_cast<double>(n);
  };
  t.conjugate_prox = [n, orth_part](const Vector& v, double sigma) {
    RowMatrix W = unflatten(v, n, n);
    W.array() -= sigma / static_cast<double>(n);
    return flatten(orth_part(W));
  };
  return ProxOperator(
      n * n,
      [n](const Vector& x, double) {
        return flatten(doubly_stochastic_affine_project(unflatten(x, n, n)));
      },
      [n](const Vector& x) {
        const RowMatrix X = unflatten(x, n, n);
        const double tol = kFeasTol * std::max(1.0, static_cast<double>(n)) * feas_scale(x);
        const double r = (X.rowwise().sum().array() - 1.0).abs().maxCoeff();
        const double c = (X.colwise().sum().array() - 1.0).abs().maxCoeff();
        return std::max(r, c) <= tol ? 0.0 : kInf;
      },
      std::move(t));
}

ProxOperator make_nonneg(Index p) {
  ProxTraits t;
  t.name = "nonneg";
  t.is_indicator = true;
  t.conjugate_value = [](const Vector& u) {
    return u.maxCoeff() <= kFeasTol * feas_scale(u) ? 0.0 : kInf;
  };
  t.conjugate_prox = [](const Vector& v, double) { return Vector(v.cwiseMin(0.0)); };
  return ProxOperator(
      p, [](const Vector& x, double) { return nonneg_project(x); },
      [](const Vector& x) { return x.minCoeff() >= -kFeasTol * feas_scale(x) ? 0.0 : kInf; },
      std::move(t));
}

ProxOperator make_upper_bound(Index p, double bound) {
  ProxTraits t;
  t.name = "upper_bound";
  t.is_indicator = true;
  t.conjugate_value = [bound](const Vector& u) {
    return u.minCoeff() >= -kFeasTol * feas_scale(u) ? bound * u.sum() : kInf;
  };
  t.conjugate_prox = [bound](const Vector& v, double sigma) {
    return Vector((v.array() - sigma * bound).cwiseMax(0.0).matrix());
  };
  return ProxOperator(
      p, [bound](const Vector& x, double) { return Vector(x.cwiseMin(bound)); },
      [bound](const Vector& x) {
        return x.maxCoeff() <= bound + kFeasTol * feas_scale(x) ? 0.0 : kInf;
      },
      std::move(t));
}

ProxOperator make_trace_norm(Index rows, Index cols, double lambda) {
  require_nonneg("trace norm lambda", lambda);
  ProxTraits t;
  t.name = "trace_norm";
  t.lipschitz_bound = lambda * std::sqrt(static_cast<double>(std::min(rows, cols)));
  t.conjugate_value = [rows, cols, lambda](const Vector& u) {
    const Svd d = thin_svd(unflatten(u, rows, cols));
    return d.s.maxCoeff() <= lambda * (1.0 + kFeasTol) + kFeasTol ? 0.0 : kInf;
  };
  t.conjugate_prox = [rows, cols, lambda](const Vector& v, double) {
    const Svd d = thin_svd(unflatten(v, rows, cols));
    const Vector s = d.s.cwiseMin(lambda);
    RowMatrix out = d.U * s.asDiagonal() * d.V.transpose();
    return flatten(out);
  };
  return ProxOperator(
      rows * cols,
      [rows, cols, lambda](const Vector& x, double gamma) {
        if (lambda == 0.0) return x;
        return flatten(trace_norm_prox(unflatten(x, rows, cols), gamma * lambda));
      },
      [rows, cols, lambda](const Vector& x) {
        return lambda * thin_svd(unflatten(x, rows, cols)).s.sum();
      },
      std::move(t));
}

ProxOperator make_trend_filter_phase(Index p, double lambda, int phase) {
  require_phase(phase);
  require_nonneg("trend filter lambda", lambda);
  ProxTraits t;
  t.name = "trend_filter_phase";
  t.lipschitz_bound =
      lipschitz_bound(PenaltyKind::TrendFilterPhase, {lambda, 0, 0, 0, trend_rows(p, phase)});
  // Conjugate: indicator of {L^T w : |w|_inf <= lambda}; L L^T = 6 I makes the
  // projection a clip in w-coordinates.
  t.conjugate_value = [p, lambda, phase](const Vector& u) {
    const Vector w = trend_apply(u, phase) / 6.0;
    const double off = (u - trend_adjoint(w, p, phase)).cwiseAbs().maxCoeff();
    if (off > kFeasTol * feas_scale(u)) return kInf;
    const double wmax = w.size() > 0 ? w.cwiseAbs().maxCoeff() : 0.0;
    return wmax <= lambda * (1.0 + kFeasTol) + kFeasTol ? 0.0 : kInf;
  };
  t.conjugate_prox = [p, lambda, phase](const Vector& v, double) {
    return trend_adjoint(clip(trend_apply(v, phase) / 6.0, lambda), p, phase);
  };
  return ProxOperator(
      p,
      [lambda, phase](const Vector& x, double gamma) {
        return lambda > 0.0 ? trend_filter_block_prox(x, gamma * lambda, phase) : x;
      },
      [lambda, phase](const Vector& x) { return lambda * trend_apply(x, phase).lpNorm<1>(); },
      std::move(t));
}

ProxOperator make_squared_l2(Index p, double lambda) {
  require_nonneg("squared l2 lambda", lambda);
  ProxTraits t;
  t.name = "squared_l2";
  if (lambda > 0.0) {
    t.conjugate_value = [lambda](const Vector& u) { return u.squaredNorm() / (2.0 * lambda); };
    t.conjugate_prox = [lambda](const Vector& v, double sigma) {
      return Vector(v / (1.0 + sigma / lambda));
    };
  }
  return ProxOperator(
      p, [lambda](const Vector& x, double gamma) { return Vector(x / (1.0 + gamma * lambda)); },
      [lambda](const Vector& x) { return 0.5 * lambda * x.squaredNorm(); }, std::move(t));
}

}  // namespace atos
