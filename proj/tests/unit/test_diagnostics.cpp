#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "helpers.hpp"
#include "nnr/diagnostics.hpp"
#include "nnr/estimators.hpp"
#include "nnr/simplex_qp.hpp"

using namespace nnr;
using namespace nnr::test;

namespace {

DenseMatrix random_spd(std::size_t s, Rng& rng) {
  DenseMatrix b(s + 3, s);
  for (auto& v : b.data()) v = rng.normal();
  DenseMatrix g = gram(b, 1.0 / static_cast<double>(s + 3));
  for (std::size_t i = 0; i < s; ++i) g(i, i) += 0.05;
  return g;
}

// Grid minimum of delta^T Sigma delta / |delta_J|^2 over the cone, p = 3.
double re_grid_p3(const DenseMatrix& sigma, double alpha, std::size_t s) {
  double best = 1e300;
  const int G = 400;
  auto eval = [&](const Vector& d, const IndexSet& J) { best = std::min(best, re_ratio(sigma, d, J)); };
  for (std::size_t a = 0; a < 3; ++a) {
    // |J| = 1: delta_a = 1, the two others on an l1 ball of radius alpha
    const IndexSet J{a};
    const IndexSet c = complement(J, 3);
    for (int i = -G; i <= G; ++i)
      for (int k = -G; k <= G; ++k) {
        const double u = alpha * i / G, v = alpha * k / G;
        if (std::abs(u) + std::abs(v) > alpha + 1e-15) continue;
        Vector d(3, 0.0);
        d[a] = 1.0;
        d[c[0]] = u;
        d[c[1]] = v;
        eval(d, J);
      }
  }
  if (s >= 2) {
    for (std::size_t a = 0; a < 3; ++a) {
      const IndexSet J = complement(IndexSet{a}, 3);
      for (int i = 0; i < 2 * G; ++i) {
        const double th = std::numbers::pi * i / G;
        const double r = alpha * (std::abs(std::cos(th)) + std::abs(std::sin(th)));
        for (int k = -G; k <= G; ++k) {
          Vector d(3, 0.0);
          d[J[0]] = std::cos(th);
          d[J[1]] = std::sin(th);
          d[a] = r * k / G;
          eval(d, J);
        }
      }
    }
  }
  return best;
}

}  // namespace

TEST(Constants, IdentitySupport) {
  const DenseMatrix X = orthonormal(20, 8, 1);
  const DiagnosticsReport r = constants_for_support(X, first(3), std::nullopt, 1.0);
  EXPECT_NEAR(r.K_S, 1.0, 1e-10);
  EXPECT_NEAR(r.phiMinS, 1.0, 1e-10);
  EXPECT_NEAR(r.iota, 0.0, 1e-10);
}

TEST(Constants, NegativeBlockDesign) {
  const DenseMatrix X = design_from_gram(appendix_i_gram(9, 3), 9);
  const DiagnosticsReport r = constants_for_support(X, first(3), std::nullopt, 1.0);
  EXPECT_NEAR(r.K_S, 4.0, 1e-10);
  EXPECT_NEAR(r.phiMinS, 1 - 1 / std::sqrt(2.0), 1e-10);
  EXPECT_NEAR(r.sigmaSSInvOneInf, 4.0, 1e-10);
  EXPECT_EQ(r.iota, 0.0);
  EXPECT_FALSE(r.iotaAtLeastOne);
}

TEST(Constants, Equicorrelated) {
  const std::size_t p = 10;
  const DenseMatrix X = design_from_gram(equicorrelation_gram(p, 0.5), p);
  const DiagnosticsReport r = constants_for_support(X, first(3), Vector(p, 1.0), 1.0);
  EXPECT_NEAR(r.phiMinS, 0.5, 1e-10);
  EXPECT_NEAR(r.sigmaSSInvOneInf, 0.5, 1e-10);
  EXPECT_NEAR(r.iota, 0.75, 1e-10);
  EXPECT_NEAR(r.betaMinS, 1.0, 0.0);
  EXPECT_NEAR(r.tau0Sq, 0.5 + 0.5 / p, 1e-8);
}

TEST(Constants, EmptySupportRejected) {
  EXPECT_THROW(constants_for_support(orthonormal(5, 5, 1), IndexSet{}, std::nullopt, 1.0), PreconditionError);
}

TEST(Iota, OrthogonalComplementIsZero) {
  DenseMatrix G = DenseMatrix::identity(6);
  G(0, 1) = G(1, 0) = 0.3;
  G(3, 4) = G(4, 3) = -0.2;
  EXPECT_NEAR(iota(design_from_gram(G, 6), first(2)), 0.0, 1e-12);
}

TEST(Iota, DirectComputationOracle) {
  // iota = max_j Sigma_jS Sigma_SS^{-1} 1 computed here with a separate LU solve
  Rng rng(2);
  const std::size_t n = 30, p = 20, s = 4;
  const DenseMatrix X = ens_plus(n, p, 3);
  const DenseMatrix G = gram(X, 1.0 / n);
  const IndexSet S = first(s);
  const auto v = lu_solve(G.block(S, S), Vector(s, 1.0));
  ASSERT_TRUE(v);
  double want = -1e300;
  for (std::size_t j = s; j < p; ++j) {
    double acc = 0.0;
    for (std::size_t k = 0; k < s; ++k) acc += G(j, k) * (*v)[k];
    want = std::max(want, acc);
  }
  EXPECT_NEAR(iota(X, S), want, 1e-10);
}

TEST(ConeMembership, Examples) {
  const IndexSet S{0, 1};
  const ConeResult on = cone_membership(Vector{1, -2, 0, 0}, S, 3.0);
  EXPECT_TRUE(on.in_cone);
  EXPECT_EQ(on.ratio, 0.0);
  const ConeResult off = cone_membership(Vector{0, 0, 1, 0}, S, 3.0);
  EXPECT_FALSE(off.in_cone);
  EXPECT_GT(off.ratio, 1e200);
  const ConeResult mid = cone_membership(Vector{1, 1, -3, 3}, S, 3.0);
  EXPECT_DOUBLE_EQ(mid.ratio, 3.0);
  EXPECT_TRUE(mid.in_cone);
}

TEST(ConeMembership, NoiseEventOnDesignOne) {
  // the estimation error lies in the cone or is already small in l1
  Rng rng(3);
  const std::size_t n = 100, p = 200, s = 5;
  const double sigma = 1.0, M = 1.0;
  for (int t = 0; t < 10; ++t) {
    const RegressionInstance inst = design_one_instance(n, p, s, 0.5, sigma, rng);
    const NnlsSolution sol = nnls_solve(inst);
    Vector delta = sol.beta;
    axpy(-1.0, inst.truth->beta_star, delta);
    const double tau2 = tau0(inst.X).value;
    ASSERT_GT(tau2, 0.0);
    const ConeResult c = cone_membership(delta, inst.truth->support, 3.0 / tau2);
    const double alt = 4 * (1 + M) * (1 + 3 / tau2) * lambda_M(sigma, 0.0, n, p);
    EXPECT_TRUE(c.in_cone || norm1(delta) <= alt);
  }
}

TEST(ConeMembershipProperty, ScaleInvariant) {
  Rng rng(4);
  for (int t = 0; t < 100; ++t) {
    const Vector d = normals(10, rng);
    const IndexSet S{1, 4, 7};
    const double c0 = rng.uniform(0.5, 4.0);
    const ConeResult a = cone_membership(d, S, c0);
    Vector scaled = d;
    const double k = std::exp(rng.uniform(-5.0, 5.0));
    for (double& v : scaled) v *= k;
    const ConeResult b = cone_membership(scaled, S, c0);
    EXPECT_EQ(a.in_cone, b.in_cone);
    EXPECT_NEAR(a.ratio, b.ratio, 1e-12 * a.ratio);
  }
}

TEST(ReEstimate, Identity) {
  const ReEstimate r = re_estimate(DenseMatrix::identity(6), 3.0, 2);
  EXPECT_NEAR(r.phiEstimate, 1.0, 1e-9);
  EXPECT_TRUE(r.exhaustive);
}

TEST(ReEstimate, TwoByTwoCalculusOracle) {
  // delta = (1, t), |t| <= 1: 1 + 2 rho t + t^2 is smallest at t = -rho
  for (double rho : {0.2, 0.5, 0.8}) {
    const DenseMatrix G = equicorrelation_gram(2, rho);
    const ReEstimate r = re_estimate(G, 1.0, 1);
    EXPECT_NEAR(r.phiEstimate, 1 - rho * rho, 1e-6) << "rho " << rho;
    EXPECT_NEAR(re_ratio(G, r.witnessDelta, r.witnessJ), r.phiEstimate, 1e-12);
  }
}

TEST(ReEstimate, EquicorrelatedNearPopulationValue) {
  // s = 1, alpha = 1: by symmetry delta = (1, -c, ..., -c) with m = p - 1 entries c <= 1/m,
  // minimized at c = rho / (1 - rho + m rho); the value tends to 1 - rho as p grows
  const double rho = 0.5;
  for (std::size_t p : {6u, 40u}) {
    const double m = static_cast<double>(p - 1);
    const double c = rho / (1 - rho + m * rho);
    const double exact = (1 - rho) * (1 + m * c * c) + rho * (1 - m * c) * (1 - m * c);
    const ReEstimate r = re_estimate(equicorrelation_gram(p, rho), 1.0, 1, 8);
    EXPECT_NEAR(r.phiEstimate, exact, 1e-6) << "p=" << p;
    if (p == 40) {
      EXPECT_LE(r.phiEstimate, 1 - rho + 0.05);
    }
  }
}

TEST(ReEstimateProperty, NotBelowGridMinimum) {
  Rng rng(5);
  for (int t = 0; t < 8; ++t) {
    const DenseMatrix G = random_spd(3, rng);
    for (std::size_t s : {1u, 2u}) {
      const double alpha = 1.0 + t % 3;
      const ReEstimate r = re_estimate(G, alpha, s);
      const double grid = re_grid_p3(G, alpha, s);
      EXPECT_GE(r.phiEstimate, grid - 1e-3) << "t=" << t << " s=" << s;
      // and the search actually gets close to the grid optimum
      EXPECT_LE(r.phiEstimate, grid + 1e-2) << "t=" << t << " s=" << s;
    }
  }
}

TEST(SlowRate, Examples) {
  const double M = 1.0, sigma = 0.7, tau2 = 0.3;
  const std::size_t n = 50, p = 80;
  EXPECT_NEAR(slow_rate_bound(0.0, 0.0, tau2, sigma, M, n, p),
              16 * 4 * sigma * sigma * std::log(80.0) / (tau2 * 50), 1e-12);

  const double e = std::numbers::e;
  // n = p = e^2 is not an integer; use the closed form of each term instead
  const double lm = 1.0 * std::sqrt(2 * std::log(e * e) / (e * e));
  EXPECT_NEAR(lm, 2 / e, 1e-15);
  EXPECT_NEAR(6 * lm + 16 * std::log(e * e) / (e * e), 12 / e + 32 / (e * e), 1e-12);

  const double v = slow_rate_bound(1.0, 0.0, 0.2876, 0.09, 1.0, 100, 200);
  EXPECT_TRUE(std::isfinite(v));
  EXPECT_GT(v, 0.0);
  EXPECT_THROW(slow_rate_bound(1.0, 0.0, 0.0, 1.0, 1.0, 10, 10), UndefinedBoundError);
}

TEST(SlowRate, IntegerArithmeticOracle) {
  // M = 0, sigma = 1, tau^2 = 1, |b*|_1 = 1, E* = 0 at n = p = 7
  const double L = std::log(7.0);
  const double want = 6 * std::sqrt(2 * L / 7) + 16 * L / 7;
  EXPECT_NEAR(slow_rate_bound(1.0, 0.0, 1.0, 1.0, 0.0, 7, 7), want, 1e-12);
}

TEST(LambdaM, Formula) {
  EXPECT_NEAR(lambda_M(0.5, 1.0, 100, 200), 2 * 0.5 * std::sqrt(2 * std::log(200.0) / 100), 1e-15);
}

TEST(DiagnosticsProperty, KSandwich) {
  Rng rng(6);
  for (int t = 0; t < 500; ++t) {
    const std::size_t s = 1 + rng.below(8);
    const DenseMatrix G = random_spd(s, rng);
    const double K = k_constant(G);
    const double phi = sym_eig_extremes(G).lambda_min;
    EXPECT_GE(K, 1 / phi * (1 - 1e-9));
    EXPECT_LE(K, std::sqrt(static_cast<double>(s)) / phi * (1 + 1e-9));
  }
}

TEST(DiagnosticsProperty, IotaPermutationInvariance) {
  Rng rng(7);
  for (int t = 0; t < 20; ++t) {
    const std::size_t n = 40, p = 25, s = 4;
    const DenseMatrix X = ens_plus(n, p, rng.next());
    const double base = iota(X, first(s));
    // shuffle all columns and relabel S accordingly
    IndexSet perm(p);
    for (std::size_t j = 0; j < p; ++j) perm[j] = j;
    for (std::size_t j = p; j > 1; --j) std::swap(perm[j - 1], perm[rng.below(j)]);
    const DenseMatrix Y = X.select_columns(perm);
    IndexSet S;
    for (std::size_t k = 0; k < p; ++k)
      if (perm[k] < s) S.push_back(k);
    EXPECT_NEAR(iota(Y, S), base, 1e-10);
  }
}

TEST(DiagnosticsProperty, SupNormConditionMonotoneInN) {
  Rng rng(8);
  for (int t = 0; t < 200; ++t) {
    const double M = rng.uniform(0.0, 2.0), tau2 = rng.uniform(0.01, 1.0);
    const std::size_t p = 10 + rng.below(1000), s = rng.below(20);
    bool seen = false;
    for (std::size_t n = s + 1; n < 20000; n = n * 5 / 4 + 1) {
      const bool h = thm4_condition(M, n, p, s, tau2);
      EXPECT_FALSE(seen && !h) << "flipped back at n=" << n;
      seen |= h;
    }
  }
}
