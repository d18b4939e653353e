#include <gtest/gtest.h>

#include <cmath>

#include "atos/harness/random.hpp"
#include "atos/prox.hpp"
#include "oracles.hpp"
#include "prox_catalog.hpp"

namespace atos {
namespace {

using testing::CatalogEntry;
using testing::prox_catalog;

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double a : v) out[i++] = a;
  return out;
}

void expect_near(const Vector& a, const Vector& b, double tol) {
  ASSERT_EQ(a.size(), b.size());
  for (Index i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], tol) << "index " << i;
}

const std::vector<CatalogEntry>& catalog() {
  static const std::vector<CatalogEntry> c = prox_catalog(20000);
  return c;
}

TEST(SoftThreshold, ClosedForm) {
  expect_near(soft_threshold(vec({2, -3, 0.5}), 1.0), vec({1, -2, 0}), 0.0);
}

TEST(SoftThreshold, SmallStepApproachesIdentity) {
  const Vector x = vec({0.7, -1.2, 3.0});
  expect_near(soft_threshold(x, 1e-12), x, 1e-11);
}

TEST(SoftThreshold, MatchesScalarSearch) {
  const double z = oracle::golden_section(
      [](double t) { return std::abs(t) + 0.5 * (t - 0.3) * (t - 0.3); }, -2.0, 2.0);
  EXPECT_NEAR(soft_threshold(vec({0.3}), 1.0)[0], z, 1e-8);
  EXPECT_EQ(soft_threshold(vec({0.3}), 1.0)[0], 0.0);
}

TEST(GroupSoftThreshold, ShrinksSmallGroupToZero) {
  const GroupPartition part({{0, 1}}, 2);
  expect_near(group_soft_threshold(vec({0.3, 0.4}), part, 1.0), Vector::Zero(2), 0.0);
}

TEST(GroupSoftThreshold, ClosedForm) {
  const GroupPartition part({{0, 1}}, 2);
  expect_near(group_soft_threshold(vec({3, 4}), part, 1.0), vec({2.4, 3.2}), 1e-15);
}

TEST(GroupSoftThreshold, ZeroGroupAndUngroupedCoordinates) {
  const GroupPartition part({{0, 1}}, 3);
  expect_near(group_soft_threshold(vec({0, 0, 5}), part, 1.0), vec({0, 0, 5}), 0.0);
}

TEST(GroupPartition, RejectsOverlapAndRange) {
  EXPECT_THROW(GroupPartition({{0, 1}, {1, 2}}, 3), std::invalid_argument);
  EXPECT_THROW(GroupPartition({{0, 3}}, 3), std::invalid_argument);
}

TEST(FusedLasso, ConstantUnchanged) {
  const Vector x = Vector::Constant(6, 1.5);
  expect_near(fused_lasso_prox(x, 2.0), x, 1e-15);
}

TEST(FusedLasso, TwoPointExampleMatchesPlanarSearch) {
  expect_near(fused_lasso_prox(vec({0, 2}), 1.0), vec({1, 1}), 1e-15);
  const auto [a, b] = oracle::golden_section_2d(
      [](double z1, double z2) {
        return std::abs(z2 - z1) + 0.5 * (z1 * z1 + (z2 - 2) * (z2 - 2));
      },
      -3, 3, -3, 3);
  EXPECT_NEAR(a, 1.0, 1e-6);
  EXPECT_NEAR(b, 1.0, 1e-6);
}

TEST(FusedLasso, RandomLengthEightMatchesDualOracle) {
  Rng rng(11);
  const Matrix D = oracle::first_differences(8);
  for (int rep = 0; rep < 10; ++rep) {
    for (double gamma : {0.1, 1.0}) {
      const Vector x = rng.normal_vector(8);
      const Vector ref = oracle::dual_prox(x, D, Vector::Constant(7, -gamma),
                                           Vector::Constant(7, gamma));
      expect_near(fused_lasso_prox(x, gamma), ref, 1e-8);
    }
  }
}

TEST(FusedLasso, SingleElement) {
  expect_near(fused_lasso_prox(vec({4.0}), 3.0), vec({4.0}), 0.0);
}

TEST(Tv2d, SingleRowReduces) {
  Rng rng(2);
  const Vector x = rng.normal_vector(7);
  const RowMatrix X = Eigen::Map<const RowMatrix>(x.data(), 1, 7);
  const RowMatrix out = tv2d_row_prox(X, 0.4);
  expect_near(Eigen::Map<const Vector>(out.data(), 7), fused_lasso_prox(x, 0.4), 1e-15);
}

TEST(Tv2d, ConstantUnchanged) {
  const RowMatrix X = RowMatrix::Constant(3, 4, -2.0);
  EXPECT_EQ((tv2d_row_prox(X, 1.0) - X).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ((tv2d_col_prox(X, 1.0) - X).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Tv2d, ColumnProxIsTransposedRowProx) {
  Rng rng(3);
  RowMatrix X(3, 3);
  for (Index i = 0; i < 9; ++i) X.data()[i] = rng.normal();
  const RowMatrix Xt = X.transpose();
  const RowMatrix via_rows = tv2d_row_prox(Xt, 0.5).transpose();
  EXPECT_LE((tv2d_col_prox(X, 0.5) - via_rows).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Isotonic, PairAverage) {
  expect_near(isotonic_block_project(vec({2, 1}), 0), vec({1.5, 1.5}), 0.0);
}

TEST(Isotonic, SortedUnchanged) {
  const Vector x = vec({-1, 0, 2, 5, 6});
  expect_near(isotonic_block_project(x, 0), x, 0.0);
  expect_near(isotonic_block_project(x, 1), x, 0.0);
}

TEST(Isotonic, OffsetsAgainstQpOracle) {
  const Vector x = vec({3, 1, 2, 0});
  expect_near(isotonic_block_project(x, 1), vec({3, 1, 2, 0}), 0.0);
  expect_near(isotonic_block_project(x, 0), vec({2, 2, 1, 1}), 0.0);
  const Matrix D = testing::pair_differences(4, 0);
  const Vector ref = oracle::dual_prox(x, D, Vector::Zero(D.rows()),
                                       Vector::Constant(D.rows(), kInf));
  expect_near(isotonic_block_project(x, 0), ref, 1e-9);
}

TEST(NearlyIsotonic, PairBranches) {
  auto [a, b] = nearly_isotonic_pair_prox(3, 0, 1);
  EXPECT_EQ(a, 2.0);
  EXPECT_EQ(b, 1.0);
  std::tie(a, b) = nearly_isotonic_pair_prox(0, 3, 7.5);
  EXPECT_EQ(a, 0.0);
  EXPECT_EQ(b, 3.0);
  std::tie(a, b) = nearly_isotonic_pair_prox(1, 0, 1);
  EXPECT_EQ(a, 0.5);
  EXPECT_EQ(b, 0.5);
}

TEST(NearlyIsotonic, PairMatchesPlanarSearch) {
  const auto [a, b] = oracle::golden_section_2d(
      [](double z1, double z2) {
        return std::max(z1 - z2, 0.0) + 0.5 * ((z1 - 1) * (z1 - 1) + z2 * z2);
      },
      -2, 2, -2, 2);
  EXPECT_NEAR(a, 0.5, 1e-6);
  EXPECT_NEAR(b, 0.5, 1e-6);
}

TEST(NearlyIsotonic, BoundaryBranchesCoincide) {
  // a - gamma == b + gamma
  const auto [a, b] = nearly_isotonic_pair_prox(2, 0, 1);
  EXPECT_EQ(a, 1.0);
  EXPECT_EQ(b, 1.0);
}

TEST(NearlyIsotonic, Blockwise) {
  expect_near(nearly_isotonic_block_prox(vec({3, 0, 5, 1}), 1, 0), vec({2, 1, 4, 2}), 0.0);
  const Vector sorted = vec({0, 1, 2, 3, 4});
  expect_near(nearly_isotonic_block_prox(sorted, 1, 0), sorted, 0.0);
  const Vector x = vec({9, 5, 1, 7, -3, 4});
  const Vector out = nearly_isotonic_block_prox(x, 1, 1);
  EXPECT_EQ(out[0], 9.0);
  EXPECT_EQ(out[5], 4.0);
}

TEST(DoublyStochastic, IdentityIsFeasible) {
  const RowMatrix I = RowMatrix::Identity(2, 2);
  EXPECT_LE((doubly_stochastic_affine_project(I) - I).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(DoublyStochastic, ZeroMatrixMatchesKkt) {
  const RowMatrix out = doubly_stochastic_affine_project(RowMatrix::Zero(2, 2));
  EXPECT_LE((out.array() - 0.5).abs().maxCoeff(), 1e-15);
}

TEST(DoublyStochastic, RandomFourByFourMatchesKkt) {
  Rng rng(4);
  const Index n = 4;
  RowMatrix X(n, n);
  for (Index i = 0; i < n * n; ++i) X.data()[i] = rng.normal();
  Matrix E = Matrix::Zero(2 * n, n * n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      E(i, i * n + j) = 1.0;
      E(n + j, i * n + j) = 1.0;
    }
  }
  const Vector ref = oracle::kkt_projection(flatten(X), E, Vector::Ones(2 * n));
  const RowMatrix out = doubly_stochastic_affine_project(X);
  expect_near(flatten(out), ref, 1e-10);
  EXPECT_LE((out.rowwise().sum().array() - 1.0).abs().maxCoeff(), 1e-10);
  EXPECT_LE((out.colwise().sum().array() - 1.0).abs().maxCoeff(), 1e-10);
}

TEST(DoublyStochastic, RejectsNonSquare) {
  EXPECT_THROW(doubly_stochastic_affine_project(RowMatrix::Zero(2, 3)), std::invalid_argument);
}

TEST(Nonneg, Examples) {
  expect_near(nonneg_project(vec({-1, 2})), vec({0, 2}), 0.0);
  const Vector pos = vec({0, 1, 3});
  expect_near(nonneg_project(pos), pos, 0.0);
  Rng rng(5);
  const Vector x = rng.normal_vector(10);
  expect_near(nonneg_project(nonneg_project(x)), nonneg_project(x), 0.0);
}

TEST(TraceNorm, DiagonalAndLargeStep) {
  RowMatrix X = RowMatrix::Zero(2, 2);
  X(0, 0) = 3;
  X(1, 1) = 1;
  RowMatrix expected = RowMatrix::Zero(2, 2);
  expected(0, 0) = 1;
  EXPECT_LE((trace_norm_prox(X, 2.0) - expected).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LE(trace_norm_prox(X, 3.0).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(TraceNorm, SingularValuesAreSoftThresholded) {
  Rng rng(6);
  RowMatrix X(5, 4);
  for (Index i = 0; i < 20; ++i) X.data()[i] = rng.normal();
  const double gamma = 0.3;
  Vector s_in = Eigen::JacobiSVD<Matrix>(Matrix(X)).singularValues();
  Vector s_out = Eigen::JacobiSVD<Matrix>(Matrix(trace_norm_prox(X, gamma))).singularValues();
  expect_near(s_out, (s_in.array() - gamma).max(0.0).matrix(), 1e-10);
}

TEST(TrendFilter, RampUnchanged) {
  Vector x(10);
  for (Index i = 0; i < 10; ++i) x[i] = static_cast<double>(i);
  for (int phase : {0, 1, 2}) expect_near(trend_filter_block_prox(x, 5.0, phase), x, 1e-13);
}

TEST(TrendFilter, SemiOrthogonalRows) {
  for (Index p = 3; p <= 20; ++p) {
    for (int phase : {0, 1, 2}) {
      const Matrix L = trend_filter_phase_matrix(p, phase);
      if (L.rows() == 0) continue;
      const Matrix G = L * L.transpose();
      EXPECT_EQ((G - 6.0 * Matrix::Identity(L.rows(), L.rows())).cwiseAbs().maxCoeff(), 0.0)
          << "p=" << p << " phase=" << phase;
    }
  }
}

TEST(TrendFilter, LengthSevenMatchesDualOracle) {
  Rng rng(7);
  const Vector x = rng.normal_vector(7);
  const Matrix L = testing::phase_rows(7, 0);
  const Vector ref = oracle::dual_prox(x, L, Vector::Constant(L.rows(), -0.4),
                                       Vector::Constant(L.rows(), 0.4));
  expect_near(trend_filter_block_prox(x, 0.4, 0), ref, 1e-6);
}

TEST(LipschitzBound, Values) {
  PenaltyShape s;
  s.lambda = 2.0;
  s.groups = 9;
  EXPECT_DOUBLE_EQ(lipschitz_bound(PenaltyKind::GroupLasso, s), 6.0);
  PenaltyShape tv;
  tv.lambda = 1.0;
  tv.rows = 4;
  tv.cols = 4;
  EXPECT_DOUBLE_EQ(lipschitz_bound(PenaltyKind::TvHalf, tv), 8.0);
  PenaltyShape ni;
  ni.lambda = 1.0;
  ni.p = 25;
  EXPECT_DOUBLE_EQ(lipschitz_bound(PenaltyKind::NearlyIsotonic, ni), 10.0);
  EXPECT_DOUBLE_EQ(lipschitz_bound(PenaltyKind::L1Matrix, tv), 4.0);
}

TEST(LipschitzBound, UnknownKindThrows) {
  EXPECT_THROW(parse_penalty_kind("dispersive"), std::invalid_argument);
  EXPECT_EQ(parse_penalty_kind("tv_half"), PenaltyKind::TvHalf);
}

TEST(LipschitzBound, DominatesSampledSlopes) {
  Rng rng(8);
  const GroupPartition part({{0, 1, 2}, {3, 4, 5}, {6, 7, 8}}, 9);
  const ProxOperator g = make_group_lasso(part, 1.3);
  for (int rep = 0; rep < 200; ++rep) {
    const Vector a = rng.normal_vector(9), b = rng.normal_vector(9);
    EXPECT_LE(std::abs(g.value(a) - g.value(b)), *g.lipschitz_bound() * (a - b).norm() + 1e-12);
  }
}

// Catalog-wide properties.

class CatalogTest : public ::testing::TestWithParam<std::size_t> {
 protected:
  const CatalogEntry& entry() const { return catalog()[GetParam()]; }
};

TEST_P(CatalogTest, MatchesOracle) {
  const CatalogEntry& e = entry();
  Rng rng(100 + GetParam());
  for (int rep = 0; rep < 5; ++rep) {
    const Vector x = 2.0 * rng.normal_vector(e.op.dim());
    const double gamma = 0.1 + 2.0 * rng.uniform();
    EXPECT_LE(e.discrepancy(x, gamma, e.op.prox(x, gamma)), 1e-6) << e.name;
  }
}

TEST_P(CatalogTest, SubgradientInclusion) {
  const CatalogEntry& e = entry();
  Rng rng(200 + GetParam());
  const Index p = e.op.dim();
  for (int rep = 0; rep < 5; ++rep) {
    const Vector x = 2.0 * rng.normal_vector(p);
    const double gamma = 0.1 + 2.0 * rng.uniform();
    const Vector z = e.op.prox(x, gamma);
    const Vector sub = (x - z) / gamma;
    const double phiz = e.op.value(z);
    ASSERT_TRUE(std::isfinite(phiz)) << e.name;
    for (int k = 0; k < 50; ++k) {
      Vector y;
      switch (k % 3) {
        case 0: y = 3.0 * rng.normal_vector(p); break;
        case 1: y = e.op.prox(3.0 * rng.normal_vector(p), 0.5 + rng.uniform()); break;
        default: y = z + 1e-3 * rng.normal_vector(p); break;
      }
      const double phiy = e.op.value(y);
      if (std::isinf(phiy)) continue;
      EXPECT_GE(phiy - phiz - sub.dot(y - z), -1e-9) << e.name;
    }
  }
}

TEST_P(CatalogTest, MoreauIdentity) {
  const CatalogEntry& e = entry();
  Rng rng(300 + GetParam());
  for (int rep = 0; rep < 5; ++rep) {
    const Vector x = 2.0 * rng.normal_vector(e.op.dim());
    const double gamma = 0.1 + 2.0 * rng.uniform();
    const Vector dual = e.conjugate_prox_oracle ? e.conjugate_prox_oracle(x / gamma, 1.0 / gamma)
                                                : e.op.conjugate_prox(x / gamma, 1.0 / gamma);
    ASSERT_TRUE(e.conjugate_prox_oracle || e.op.has_conjugate_prox()) << e.name;
    const Vector lhs = e.op.prox(x, gamma) + gamma * dual;
    EXPECT_LE((lhs - x).cwiseAbs().maxCoeff(), 1e-10) << e.name;
  }
}

TEST_P(CatalogTest, FirmlyNonexpansive) {
  const CatalogEntry& e = entry();
  Rng rng(400 + GetParam());
  for (int rep = 0; rep < 20; ++rep) {
    const Vector x = 2.0 * rng.normal_vector(e.op.dim());
    const Vector y = 2.0 * rng.normal_vector(e.op.dim());
    const double gamma = 0.1 + 2.0 * rng.uniform();
    const Vector d = e.op.prox(x, gamma) - e.op.prox(y, gamma);
    EXPECT_LE(d.squaredNorm(), d.dot(x - y) + 1e-12) << e.name;
  }
}

TEST_P(CatalogTest, ProjectionsAreStepIndependentAndIdempotent) {
  const CatalogEntry& e = entry();
  if (!e.op.is_indicator()) GTEST_SKIP();
  Rng rng(500 + GetParam());
  const Vector x = 2.0 * rng.normal_vector(e.op.dim());
  const Vector z = e.op.prox(x, 0.3);
  expect_near(e.op.prox(x, 7.0), z, 0.0);
  expect_near(e.op.prox(z, 1.0), z, 1e-14);
}

TEST_P(CatalogTest, ValueAtProxIsFinite) {
  const CatalogEntry& e = entry();
  Rng rng(600 + GetParam());
  const Vector z = e.op.prox(5.0 * rng.normal_vector(e.op.dim()), 1.0);
  EXPECT_TRUE(std::isfinite(e.op.value(z))) << e.name;
}

std::string entry_name(const ::testing::TestParamInfo<std::size_t>& info) {
  return catalog()[info.param].name;
}

INSTANTIATE_TEST_SUITE_P(AllOperators, CatalogTest,
                         ::testing::Range<std::size_t>(0, prox_catalog(1).size()), entry_name);

}  // namespace
}  // namespace atos
