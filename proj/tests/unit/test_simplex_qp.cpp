#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "helpers.hpp"
#include "nnr/designs.hpp"
#include "nnr/simplex_qp.hpp"

using namespace nnr;
using namespace nnr::test;

namespace {

double min_margin(const DenseMatrix& X, const Vector& w) {
  const Vector h = matvec_transposed(X, w);
  return *std::min_element(h.begin(), h.end()) / std::sqrt(static_cast<double>(X.rows()));
}

}  // namespace

TEST(ProjectSimplex, Examples) {
  const Vector a = project_simplex(Vector{0.2, 0.3, 0.5});
  EXPECT_NEAR(a[0], 0.2, 1e-15);
  EXPECT_NEAR(a[2], 0.5, 1e-15);
  const Vector b = project_simplex(Vector{2.0, 0.0});
  EXPECT_NEAR(b[0], 1.0, 1e-15);
  EXPECT_NEAR(b[1], 0.0, 1e-15);
  const Vector c = project_simplex(Vector{1.0, 1.0, 1.0, 1.0});
  for (double v : c) EXPECT_NEAR(v, 0.25, 1e-15);
}

TEST(ProjectSimplexProperty, OptimalityConditions) {
  // projection x of v satisfies x_j = max(v_j - t, 0) for a common t
  Rng rng(1);
  for (int k = 0; k < 200; ++k) {
    const Vector v = normals(1 + rng.below(20), rng, 2.0);
    const Vector x = project_simplex(v);
    EXPECT_NEAR(std::accumulate(x.begin(), x.end(), 0.0), 1.0, 1e-12);
    double t = 0.0;
    for (std::size_t j = 0; j < v.size(); ++j)
      if (x[j] > 0) t = v[j] - x[j];
    for (std::size_t j = 0; j < v.size(); ++j) EXPECT_NEAR(x[j], std::max(v[j] - t, 0.0), 1e-12);
  }
}

TEST(SimplexQp, Identity) {
  for (std::size_t p : {1u, 3u, 17u}) {
    const SimplexQpResult r = simplex_min_quadratic(DenseMatrix::identity(p));
    EXPECT_NEAR(r.value, 1.0 / p, 1e-12);
    for (double l : r.lambda) EXPECT_NEAR(l, 1.0 / p, 1e-9);
  }
}

TEST(SimplexQp, Equicorrelation) {
  const SimplexQpResult r = simplex_min_quadratic(equicorrelation_gram(4, 0.5));
  EXPECT_NEAR(r.value, 0.625, 1e-12);
}

TEST(SimplexQp, Scalar) {
  DenseMatrix q(1, 1, 3.7);
  const SimplexQpResult r = simplex_min_quadratic(q);
  EXPECT_DOUBLE_EQ(r.value, 3.7);
  ASSERT_EQ(r.lambda.size(), 1u);
  EXPECT_DOUBLE_EQ(r.lambda[0], 1.0);
}

TEST(SimplexQp, KktGapSmallOnRandomGram) {
  Rng rng(2);
  for (int t = 0; t < 20; ++t) {
    const DenseMatrix X = gaussian(30, 15 + rng.below(30), rng.next());
    const SimplexQpResult r = simplex_min_quadratic(gram(X, 1.0 / 30));
    EXPECT_LE(r.kkt_gap, 1e-9);
    EXPECT_NEAR(std::accumulate(r.lambda.begin(), r.lambda.end(), 0.0), 1.0, 1e-12);
  }
}

TEST(Tau0, Orthonormal) {
  for (std::size_t p : {4u, 25u}) EXPECT_NEAR(tau0(orthonormal(p, p, 3, false)).value, 1.0 / p, 1e-12);
  EXPECT_NEAR(tau0(orthonormal(40, 25, 4, true)).value, 1.0 / 25, 1e-10);
}

TEST(Tau0, PowerDecayUpperBound) {
  const std::size_t p = 50;
  const DenseMatrix X = design_from_gram(power_decay_gram(p, 0.5), p);
  const double v = tau0(X).value;
  EXPECT_GT(v, 0.0);
  EXPECT_LE(v, 4.0 / p);
}

TEST(Tau0, OppositeColumnsGiveZero) {
  DenseMatrix X = gaussian(10, 3, 5);
  for (std::size_t i = 0; i < 10; ++i) X(i, 2) = -X(i, 0);
  const MarginCertificate c = tau0(X);
  EXPECT_EQ(c.value, 0.0);
  for (double w : c.w) EXPECT_EQ(w, 0.0);
}

TEST(TauS, BlockGramClosedForm) {
  // S block identity, S^c block equicorrelated, off-diagonal blocks zero
  const std::size_t p = 12, s = 3;
  const double rho = 0.4;
  DenseMatrix G = DenseMatrix::identity(p);
  const DenseMatrix E = equicorrelation_gram(p - s, rho);
  for (std::size_t i = 0; i < p - s; ++i)
    for (std::size_t j = 0; j < p - s; ++j) G(s + i, s + j) = E(i, j);
  const DenseMatrix X = design_from_gram(G, p);
  const MarginCertificate c = tauS(X, first(s));
  EXPECT_NEAR(c.value, rho + (1 - rho) / static_cast<double>(p - s), 1e-9);
  EXPECT_LE(c.form_spread, 1e-9);
}

TEST(TauS, EmptySupportIsTau0) {
  const DenseMatrix X = ens_plus(30, 20, 6);
  EXPECT_NEAR(tauS(X, IndexSet{}).value, tau0(X).value, 1e-10);
}

TEST(TauS, RankDeficientSupportThrows) {
  DenseMatrix X = gaussian(10, 5, 7);
  for (std::size_t i = 0; i < 10; ++i) X(i, 1) = X(i, 0);
  EXPECT_THROW(tauS(X, IndexSet{0, 1}), RankDeficientError);
}

TEST(MarginProperty, PrimalDualConsistency) {
  Rng rng(8);
  for (int t = 0; t < 40; ++t) {
    const DenseMatrix X = ens_plus(30, 10 + rng.below(50), rng.next(), static_cast<Ensemble>(rng.below(4)),
                                   0.5);
    const MarginCertificate c = tau0(X);
    if (c.value <= 1e-10) continue;
    EXPECT_NEAR(norm2(c.w), 1.0, 1e-10);
    EXPECT_NEAR(std::sqrt(c.value), min_margin(X, c.w), 1e-6);
  }
}

TEST(MarginProperty, ThreeFormsAgree) {
  Rng rng(9);
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 20 + rng.below(81);
    const std::size_t p = 12 + rng.below(49);
    const std::size_t s = 1 + rng.below(std::min<std::size_t>(10, std::min(n, p) - 2));
    const DenseMatrix X = ens_plus(n, p, rng.next(), static_cast<Ensemble>(rng.below(4)), 0.5);
    const MarginCertificate c = tauS(X, first(s));
    EXPECT_LE(c.form_spread, 1e-7) << "n=" << n << " p=" << p << " s=" << s;
  }
}

TEST(MarginProperty, AddingColumnsNeverIncreasesTauS) {
  Rng rng(10);
  for (int t = 0; t < 20; ++t) {
    const DenseMatrix X = ens_plus(40, 50, rng.next());
    const IndexSet S = first(3);
    double prev = tauS(X.select_columns(first(20)), S).value;
    for (std::size_t p : {30u, 40u, 50u}) {
      const double v = tauS(X.select_columns(first(p)), S).value;
      EXPECT_LE(v, prev + 1e-10);
      prev = v;
    }
  }
}

TEST(MarginProperty, UpperBoundByMeanGram) {
  Rng rng(11);
  for (int t = 0; t < 40; ++t) {
    const std::size_t n = 25, p = 5 + rng.below(40);
    const DenseMatrix X = ens_plus(n, p, rng.next(), static_cast<Ensemble>(rng.below(4)), 0.5);
    const DenseMatrix G = gram(X, 1.0 / n);
    const double bound = std::accumulate(G.data().begin(), G.data().end(), 0.0) / static_cast<double>(p * p);
    EXPECT_LE(tau0(X).value, bound + 1e-12);
  }
}

TEST(SimplexQp, NearCollinearKernelColumns) {
  // densely placed narrow Gaussians: the optimal face is large and badly conditioned
  for (double sd : {0.02, 0.03, 0.05}) {
    DeconvSpec spec;
    spec.kappa = 2 * sd * sd;
    const DeconvProblem prob = make_deconv_problem(spec, 1);
    const DenseMatrix Q = gram(prob.X, 1.0 / 100);
    const SimplexQpResult r = simplex_min_quadratic(Q);
    const Vector ql = matvec(Q, r.lambda);
    EXPECT_NEAR(std::accumulate(r.lambda.begin(), r.lambda.end(), 0.0), 1.0, 1e-12);
    for (std::size_t j = 0; j < ql.size(); ++j) {
      EXPECT_GE(r.lambda[j], 0.0);
      EXPECT_GE(ql[j], r.value - 1e-8) << "sd=" << sd << " j=" << j;
    }
  }
}
