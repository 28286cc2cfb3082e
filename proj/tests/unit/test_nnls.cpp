#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "helpers.hpp"
#include "nnr/nnls.hpp"
#include "nnr/simplex_qp.hpp"

using namespace nnr;
using namespace nnr::test;

namespace {

// minimum over all sign-feasible least-squares faces, with beta = 0 included
double brute_force(const DenseMatrix& X, const Vector& y) {
  const std::size_t p = X.cols();
  const double n = static_cast<double>(X.rows());
  double best = dot(y, y) / n;
  for (std::size_t mask = 1; mask < (std::size_t{1} << p); ++mask) {
    IndexSet A;
    for (std::size_t j = 0; j < p; ++j)
      if (mask >> j & 1) A.push_back(j);
    if (A.size() > X.rows()) continue;
    const HouseholderQr qr(X.select_columns(A));
    if (!qr.full_column_rank()) continue;
    const Vector b = qr.solve_least_squares(y);
    if (std::any_of(b.begin(), b.end(), [](double v) { return v < 0.0; })) continue;
    Vector r = y;
    for (std::size_t k = 0; k < A.size(); ++k) axpy(-b[k], X.col(A[k]), r);
    best = std::min(best, dot(r, r) / n);
  }
  return best;
}

}  // namespace

TEST(Nnls, OrthonormalClosedForm) {
  Rng rng(1);
  for (std::uint64_t t = 0; t < 10; ++t) {
    const std::size_t n = 30, p = 12;
    const DenseMatrix X = orthonormal(n, p, 100 + t);
    const Vector y = normals(n, rng);
    const NnlsSolution sol = nnls_solve(X, y);
    const Vector c = matvec_transposed(X, y);
    for (std::size_t j = 0; j < p; ++j) EXPECT_NEAR(sol.beta[j], std::max(c[j], 0.0) / n, 1e-12);
  }
}

TEST(Nnls, NoiselessExactRecovery) {
  Rng rng(2);
  const std::size_t n = 40, p = 15;
  const DenseMatrix X = gaussian(n, p, 5);
  Vector beta(p, 0.0);
  for (std::size_t j = 0; j < p; j += 2) beta[j] = rng.uniform(0.5, 2.0);
  const NnlsSolution sol = nnls_solve(X, matvec(X, beta));
  for (std::size_t j = 0; j < p; ++j) EXPECT_NEAR(sol.beta[j], beta[j], 1e-8);
  EXPECT_EQ(sol.active_set, support_of(beta));
}

TEST(Nnls, NonPositiveCorrelationGivesZero) {
  // entries are non-negative, so X^T X >= 0 entrywise and X^T (-X c) <= 0
  const DenseMatrix X = ens_plus(20, 10, 3);
  Vector y = matvec(X, Vector(10, 0.3));
  for (double& v : y) v = -v;
  const NnlsSolution sol = nnls_solve(X, y);
  for (double b : sol.beta) EXPECT_EQ(b, 0.0);
  EXPECT_TRUE(sol.active_set.empty());
}

TEST(Nnls, IterationCapThrowsWithBestIterate) {
  Rng rng(4);
  const DenseMatrix X = gaussian(30, 20, 8);
  const Vector y = matvec(X, Vector(20, 1.0));
  try {
    nnls_solve(X, y, {.max_iter = 2});
    FAIL() << "expected NonConvergenceError";
  } catch (const NonConvergenceError& e) {
    EXPECT_EQ(e.best_iterate.size(), 20u);
  }
}

TEST(Nnls, RejectsBadShapes) {
  const DenseMatrix X = gaussian(5, 3, 1);
  EXPECT_THROW(nnls_solve(X, Vector(4, 1.0)), InvalidInputError);
  Vector y(5, 1.0);
  y[2] = std::numeric_limits<double>::infinity();
  EXPECT_THROW(nnls_solve(X, y), InvalidInputError);
}

TEST(KktCheck, Examples) {
  Rng rng(5);
  const DenseMatrix X = gaussian(25, 10, 11);
  const Vector y = normals(25, rng);
  const NnlsSolution sol = nnls_solve(X, y);
  EXPECT_TRUE(kkt_check(X, y, sol.beta, 1e-9).is_optimal);

  const Vector c = matvec_transposed(X, y);
  ASSERT_GT(*std::max_element(c.begin(), c.end()), 25 * 1e-9);
  const KktReport zero = kkt_check(X, y, Vector(10, 0.0), 1e-9);
  EXPECT_FALSE(zero.is_optimal);
  EXPECT_FALSE(zero.worst_in_active);

  const DenseMatrix Q = orthonormal(25, 10, 12);
  const Vector cq = matvec_transposed(Q, y);
  Vector closed(10);
  for (std::size_t j = 0; j < 10; ++j) closed[j] = std::max(cq[j], 0.0) / 25;
  EXPECT_TRUE(kkt_check(Q, y, closed, 1e-12).is_optimal);
}

TEST(NnlsProperty, SolverPassesKktOn500Instances) {
  Rng rng(6);
  for (int t = 0; t < 500; ++t) {
    const std::size_t n = 3 + rng.below(58);
    const std::size_t p = 1 + rng.below(60);
    const DenseMatrix X = gaussian(n, p, rng.next());
    Vector beta(p, 0.0);
    for (auto& b : beta)
      if (rng.bernoulli(0.3)) b = rng.uniform(0.0, 2.0);
    Vector y = matvec(X, beta);
    for (auto& v : y) v += rng.normal();
    const NnlsSolution sol = nnls_solve(X, y);
    ASSERT_TRUE(kkt_check(X, y, sol.beta, 1e-8).is_optimal) << "instance " << t << " n=" << n << " p=" << p;
    for (double b : sol.beta) ASSERT_GE(b, 0.0);
  }
}

TEST(NnlsProperty, MatchesBruteForceForTinyP) {
  Rng rng(7);
  for (int t = 0; t < 300; ++t) {
    const std::size_t p = 1 + rng.below(3);
    const std::size_t n = 2 + rng.below(8);
    const DenseMatrix X = gaussian(n, p, rng.next());
    const Vector y = normals(n, rng);
    EXPECT_NEAR(nnls_solve(X, y).objective, brute_force(X, y), 1e-6);
  }
}

TEST(NnlsProperty, ObjectiveTraceStrictlyDecreases) {
  Rng rng(8);
  for (int t = 0; t < 50; ++t) {
    const DenseMatrix X = gaussian(40, 60, rng.next());
    const Vector y = normals(40, rng);
    const NnlsSolution sol = nnls_solve(X, y);
    ASSERT_FALSE(sol.objective_trace.empty());
    for (std::size_t k = 1; k < sol.objective_trace.size(); ++k)
      EXPECT_LT(sol.objective_trace[k], sol.objective_trace[k - 1] + 1e-14);
  }
}

TEST(NnlsProperty, OrthonormalOverfitIsOrderPOverN) {
  Rng rng(9);
  const std::size_t n = 200, p = 200;
  const DenseMatrix X = orthonormal(n, p, 4242);
  double total = 0.0;
  const int draws = 100;
  for (int t = 0; t < draws; ++t) {
    const Vector eps = normals(n, rng);
    const NnlsSolution sol = nnls_solve(X, eps);
    const Vector fit = matvec(X, sol.beta);
    total += dot(fit, fit) / n;
  }
  const double m = total / draws;
  EXPECT_GE(m, 0.3);
  EXPECT_LE(m, 0.7);
}

TEST(Decouple, FullSupportNoiseless) {
  Rng rng(10);
  const std::size_t n = 50, p = 30, s = 4;
  const DenseMatrix X = gaussian(n, p, 13);
  Vector beta(p, 0.0);
  for (std::size_t j = 0; j < s; ++j) beta[j] = rng.uniform(1.0, 2.0);
  const DecoupledProblems d = decouple(X, matvec(X, beta), first(s));
  for (double b : d.beta_p1) EXPECT_NEAR(b, 0.0, 1e-10);
  for (std::size_t j = 0; j < s; ++j) EXPECT_NEAR(d.beta_p2[j], beta[j], 1e-9);
  EXPECT_TRUE(d.p2_all_positive);
}

TEST(Decouple, EmptySupportIsFullProblem) {
  Rng rng(11);
  const DenseMatrix X = gaussian(20, 35, 14);
  const Vector y = normals(20, rng);
  const DecoupledProblems d = decouple(X, y, IndexSet{});
  const NnlsSolution direct = nnls_solve(X, y);
  ASSERT_EQ(d.beta_p1.size(), 35u);
  for (std::size_t j = 0; j < 35; ++j) EXPECT_NEAR(d.beta_p1[j], direct.beta[j], 1e-9);
  EXPECT_EQ(d.xi, y);
}

TEST(Decouple, RankDeficientSupportThrows) {
  DenseMatrix X = gaussian(10, 4, 15);
  for (std::size_t i = 0; i < 10; ++i) X(i, 1) = X(i, 0);
  EXPECT_THROW(decouple(X, Vector(10, 1.0), IndexSet{0, 1}), RankDeficientError);
}

TEST(DecoupleProperty, CompositeMatchesDirectSolve) {
  Rng rng(12);
  int checked = 0;
  for (int t = 0; t < 200 && checked < 30; ++t) {
    const std::size_t n = 40, p = 60, s = 3;
    const DenseMatrix X = ens_plus(n, p, rng.next());
    Vector beta(p, 0.0);
    for (std::size_t j = 0; j < s; ++j) beta[j] = rng.uniform(1.0, 3.0);
    Vector y = matvec(X, beta);
    for (auto& v : y) v += 0.3 * rng.normal();
    const DecoupledProblems d = decouple(X, y, first(s));
    if (!d.p2_all_positive) continue;
    ++checked;
    const NnlsSolution direct = nnls_solve(X, y);
    for (std::size_t j = 0; j < p; ++j) EXPECT_NEAR(d.composite[j], direct.beta[j], 1e-6);
  }
  EXPECT_GE(checked, 20);
}

TEST(Uniqueness, Cases) {
  Rng rng(13);
  {
    const DenseMatrix X = gaussian(30, 10, 16);
    const Vector y = normals(30, rng);
    EXPECT_TRUE(uniqueness_report(X, nnls_solve(X, y)).unique_certified);
  }
  {
    // p > n with y inside the cone: zero residual
    const DenseMatrix X = ens_plus(10, 30, 17);
    const Vector y = matvec(X, Vector(30, 0.5));
    const NnlsSolution sol = nnls_solve(X, y);
    const UniquenessReport r = uniqueness_report(X, sol);
    EXPECT_FALSE(r.residual_positive);
    EXPECT_FALSE(r.unique_certified);
  }
  {
    Rng r2(18);
    const RegressionInstance inst = design_one_instance(50, 100, 3, 0.5, 1.0, r2);
    const NnlsSolution sol = nnls_solve(inst);
    const UniquenessReport r = uniqueness_report(inst.X, sol);
    EXPECT_TRUE(r.residual_positive);
    EXPECT_TRUE(r.unique_certified);
    EXPECT_LE(sol.active_set.size(), 49u);
  }
}

TEST(GlpCheck, Examples) {
  EXPECT_TRUE(glp_check(DenseMatrix::identity(5)));
  DenseMatrix dup = gaussian(10, 4, 19);
  for (std::size_t i = 0; i < 10; ++i) dup(i, 3) = dup(i, 1);
  EXPECT_FALSE(glp_check(dup));
  EXPECT_TRUE(glp_check(gaussian(8, 14, 20)));
}

TEST(SelfReg, RankOneDesign) {
  const std::size_t n = 9, p = 4;
  Vector w(n, 1.0 / 3.0);
  DenseMatrix X(n, p);
  for (std::size_t j = 0; j < p; ++j)
    for (std::size_t i = 0; i < n; ++i) X(i, j) = 3.0 * w[i];
  const SelfRegDecomposition d = self_reg_decompose(X, w, 0.5);
  for (std::size_t j = 0; j < p; ++j) {
    EXPECT_NEAR(d.h[j], 1.0, 1e-14);
    EXPECT_NEAR(d.d[j], 0.5, 1e-14);
  }
  EXPECT_LE(max_abs(d.Xtilde), 1e-14);
  EXPECT_LE(d.identity_max_residual, 1e-9);
}

TEST(SelfReg, EquicorrelatedCertificate) {
  const std::size_t p = 20;
  const DenseMatrix X = design_from_gram(equicorrelation_gram(p, 0.4), p);
  const MarginCertificate c = tau0(X);
  const double tau = std::sqrt(c.value);
  const SelfRegDecomposition d = self_reg_decompose(X, c.w, tau * (1 - 1e-9));
  for (double h : d.h) EXPECT_GE(h, tau * (1 - 1e-9));
  EXPECT_LE(d.identity_max_residual, 1e-9);
}

TEST(SelfReg, MarginViolationThrows) {
  const DenseMatrix X = gaussian(10, 5, 21);
  Vector w(10, 0.0);
  w[0] = 1.0;
  EXPECT_THROW(self_reg_decompose(X, w, 100.0), PreconditionError);
}

TEST(Instance, Validation) {
  DenseMatrix X = gaussian(6, 3, 22);
  EXPECT_TRUE(columns_normalized(X));
  EXPECT_NO_THROW(make_instance(X, Vector(6, 0.0)));
  EXPECT_THROW(make_instance(X, Vector(5, 0.0)), InvalidInputError);
  DenseMatrix raw = X;
  for (double& v : raw.col(1)) v *= 3.0;
  EXPECT_FALSE(columns_normalized(raw));
  EXPECT_THROW(make_instance(raw, Vector(6, 0.0)), InvalidInputError);
  const Vector c = normalize_columns(raw);
  EXPECT_NEAR(c[1], 3.0, 1e-12);
  EXPECT_TRUE(columns_normalized(raw));
  DenseMatrix zero(4, 2, 0.0);
  EXPECT_THROW(normalize_columns(zero), InvalidInputError);

  GroundTruth bad;
  bad.beta_star = {1.0, -1.0, 0.0};
  bad.support = {0};
  EXPECT_THROW(make_instance(X, Vector(6, 0.0), bad), InvalidInputError);
}

TEST(SupportOf, Threshold) {
  const Vector b{0.0, 0.3, 1e-12, 2.0};
  EXPECT_EQ(support_of(b), (IndexSet{1, 2, 3}));
  EXPECT_EQ(support_of(b, 1e-9), (IndexSet{1, 3}));
}
