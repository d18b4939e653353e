#pragma once

#include <string>
#include <vector>

#include "atos/core.hpp"

namespace atos {

// Disjoint groups of coordinates in {0, ..., p-1}. Coordinates outside every
// group are left alone by the group prox.
class GroupPartition {
 public:
  GroupPartition() = default;
  GroupPartition(std::vector<std::vector<Index>> groups, Index p);

  const std::vector<std::vector<Index>>& groups() const { return groups_; }
  std::size_t size() const { return groups_.size(); }
  Index dim() const { return p_; }

 private:
  std::vector<std::vector<Index>> groups_;
  Index p_ = 0;
};

// Overlapping groups as a sum of disjoint subfamilies.
struct OverlapGroupSplit {
  std::vector<GroupPartition> subfamilies;
};

Vector soft_threshold(const Vector& x, double gamma);
Vector group_soft_threshold(const Vector& x, const GroupPartition& partition, double gamma);

// argmin_z gamma * sum_i |z_{i+1} - z_i| + |z - x|^2 / 2 (direct algorithm, linear time
// in practice).
Vector fused_lasso_prox(const Vector& x, double gamma);
RowMatrix tv2d_row_prox(const RowMatrix& X, double gamma);
RowMatrix tv2d_col_prox(const RowMatrix& X, double gamma);

// Blockwise operators on consecutive pairs (i, i+1) with i = offset, offset + 2, ...
Vector isotonic_block_project(const Vector& x, int offset);
std::pair<double, double> nearly_isotonic_pair_prox(double a, double b, double gamma);
Vector nearly_isotonic_block_prox(const Vector& x, double gamma, int offset);

RowMatrix doubly_stochastic_affine_project(const RowMatrix& X);
Vector nonneg_project(const Vector& x);
RowMatrix trace_norm_prox(const RowMatrix& X, double gamma);

// Second differences of x restricted to x[phase + 3i .. phase + 3i + 2]. The rows
// have disjoint supports, so L L^T = 6 I.
Matrix trend_filter_phase_matrix(Index p, int phase);
Vector trend_filter_block_prox(const Vector& x, double gamma, int phase);

enum class PenaltyKind { GroupLasso, TvHalf, L1Matrix, NearlyIsotonic, TrendFilterPhase };

PenaltyKind parse_penalty_kind(const std::string& name);

struct PenaltyShape {
  double lambda = 1.0;
  Index groups = 0;  // GroupLasso: number of groups
  Index rows = 0;    // TvHalf, L1Matrix
  Index cols = 0;
  Index p = 0;       // NearlyIsotonic: dimension; TrendFilterPhase: number of L rows
};

// Global Lipschitz bound of the penalty.
double lipschitz_bound(PenaltyKind kind, const PenaltyShape& shape);

// Operator factories. Penalty weights are folded in, so prox(x, gamma) is the prox of
// gamma * lambda * penalty.
ProxOperator make_zero(Index p);
ProxOperator make_l1(Index p, double lambda);
ProxOperator make_group_lasso(const GroupPartition& partition, double lambda);
ProxOperator make_fused_lasso(Index p, double lambda);
ProxOperator make_tv2d_rows(Index rows, Index cols, double lambda);
ProxOperator make_tv2d_cols(Index rows, Index cols, double lambda);
ProxOperator make_isotonic_pairs(Index p, int offset);
ProxOperator make_nearly_isotonic(Index p, double lambda, int offset);
ProxOperator make_doubly_stochastic_affine(Index n);
ProxOperator make_nonneg(Index p);
ProxOperator make_upper_bound(Index p, double bound);
ProxOperator make_trace_norm(Index rows, Index cols, double lambda);
ProxOperator make_trend_filter_phase(Index p, double lambda, int phase);
// (lambda / 2) |x|^2
ProxOperator make_squared_l2(Index p, double lambda);

}  // namespace atos
