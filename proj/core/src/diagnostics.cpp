#include "nnr/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "nnr/rng.hpp"
#include "nnr/simplex_qp.hpp"

namespace nnr {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

IndexSet sorted_support(std::span<const std::size_t> S, std::size_t p) {
  IndexSet s(S.begin(), S.end());
  std::sort(s.begin(), s.end());
  if (std::adjacent_find(s.begin(), s.end()) != s.end()) throw InvalidInputError("repeated index in S");
  if (!s.empty() && s.back() >= p) throw InvalidInputError("support index out of range");
  return s;
}

Cholesky factor_support(const DenseMatrix& sigma_ss) {
  try {
    return Cholesky(sigma_ss);
  } catch (const SingularMatrixError&) {
    throw RankDeficientError("X_S is rank deficient");
  }
}

}  // namespace

double lambda_M(double sigma, double M, std::size_t n, std::size_t p) {
  return (1.0 + M) * sigma * std::sqrt(2.0 * std::log(static_cast<double>(p)) / static_cast<double>(n));
}

double k_constant(const DenseMatrix& sigma_ss) {
  const DenseMatrix inv = factor_support(sigma_ss).inverse();
  double k = 0.0;
  for (std::size_t i = 0; i < inv.rows(); ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < inv.cols(); ++j) row += std::abs(inv(i, j));
    k = std::max(k, row);
  }
  return k;
}

double iota(const DenseMatrix& X, std::span<const std::size_t> S) {
  const std::size_t p = X.cols();
  const IndexSet s = sorted_support(S, p);
  if (s.empty()) return 0.0;
  const IndexSet sc = complement(s, p);
  if (sc.empty()) return 0.0;
  const double inv_n = 1.0 / static_cast<double>(X.rows());
  const DenseMatrix xs = X.select_columns(s);
  const Vector v = factor_support(gram(xs, inv_n)).solve(Vector(s.size(), 1.0));
  const Vector xv = matvec(xs, v);  // Sigma_{jS} v = X_j^T X_S v / n
  double best = -kInf;
  for (std::size_t j : sc) best = std::max(best, dot(X.col(j), xv) * inv_n);
  return best;
}

bool thm4_condition(double M, std::size_t n, std::size_t p, std::size_t s, double tauSq) {
  if (!(tauSq > 0.0)) return false;
  const double lhs = 32.0 * (1.0 + M) * (1.0 + M) * std::log(static_cast<double>(p)) /
                     (tauSq * static_cast<double>(n));
  return lhs <= 1.0 - static_cast<double>(s) / static_cast<double>(n);
}

double slow_rate_bound(double bstarL1, double Estar, double tauSq, double sigma, double M, std::size_t n,
                       std::size_t p) {
  if (!(tauSq > 0.0)) throw UndefinedBoundError("slow_rate_bound: tau^2 must be positive");
  const double lm = lambda_M(sigma, M, n, p);
  return Estar + (6.0 * bstarL1 + 8.0 * std::sqrt(Estar)) / tauSq * lm +
         16.0 * (1.0 + M) * (1.0 + M) * sigma * sigma * std::log(static_cast<double>(p)) /
             (tauSq * static_cast<double>(n));
}

DiagnosticsReport constants_for_support(const DenseMatrix& X, std::span<const std::size_t> S,
                                        std::optional<Vector> beta_star, double sigma, double M) {
  const std::size_t n = X.rows();
  const std::size_t p = X.cols();
  const IndexSet s = sorted_support(S, p);
  if (s.empty()) throw PreconditionError("constants_for_support: S must be non-empty");
  if (beta_star && beta_star->size() != p) throw InvalidInputError("constants_for_support: beta* length mismatch");

  DiagnosticsReport r;
  r.n = n;
  r.p = p;
  r.s = s.size();
  r.sigma = sigma;
  r.M = M;
  const DenseMatrix xs = X.select_columns(s);
  const DenseMatrix sigma_ss = gram(xs, 1.0 / static_cast<double>(n));
  const Cholesky chol = factor_support(sigma_ss);

  r.K_S = k_constant(sigma_ss);
  const EigenExtremes ex = sym_eig_extremes(sigma_ss);
  r.phiMinS = ex.lambda_min;
  r.phiMaxS = ex.lambda_max;
  r.sigmaSSInvOneInf = norm_inf(chol.solve(Vector(s.size(), 1.0)));
  r.tau0Sq = tau0(X).value;
  r.tauSSq = s.size() < p ? tauS(X, s, {.cross_check = false}).value : 0.0;
  r.iota = iota(X, s);
  r.iotaAtLeastOne = r.iota >= 1.0;
  if (beta_star) {
    double mn = kInf;
    for (std::size_t j : s) mn = std::min(mn, (*beta_star)[j]);
    r.betaMinS = mn;
  }
  r.lambdaM = lambda_M(sigma, M, n, p);
  r.boundB = r.tauSSq > 0.0 ? 2.0 * r.lambdaM / r.tauSSq : kInf;
  r.boundBtilde = r.boundB * r.K_S + r.lambdaM / std::sqrt(r.phiMinS);
  r.thm4ConditionHolds = thm4_condition(M, n, p, s.size(), r.tauSSq);
  r.thm6Lambda = r.iota < 1.0 ? 2.0 * r.lambdaM / (1.0 - r.iota) : kInf;
  r.thm6BoundB = r.thm6Lambda / 2.0 * r.sigmaSSInvOneInf + r.lambdaM / std::sqrt(r.phiMinS);
  const double b1 = beta_star ? norm1(*beta_star) : 0.0;
  r.slowRateBound = r.tau0Sq > 0.0 ? slow_rate_bound(b1, 0.0, r.tau0Sq, sigma, M, n, p) : kInf;
  return r;
}

ConeResult cone_membership(std::span<const double> delta, std::span<const std::size_t> S, double c0) {
  std::vector<char> in_s(delta.size(), 0);
  for (std::size_t j : S) {
    if (j >= delta.size()) throw InvalidInputError("cone_membership: index out of range");
    in_s[j] = 1;
  }
  double on = 0.0;
  double off = 0.0;
  for (std::size_t j = 0; j < delta.size(); ++j) (in_s[j] ? on : off) += std::abs(delta[j]);
  ConeResult c;
  c.ratio = off / std::max(on, 1e-300);
  c.in_cone = c.ratio <= c0;
  return c;
}

double re_ratio(const DenseMatrix& sigma, std::span<const double> delta, std::span<const std::size_t> J) {
  double dj = 0.0;
  for (std::size_t j : J) dj += delta[j] * delta[j];
  return dot(delta, matvec(sigma, delta)) / dj;
}

namespace {

// Projection of v onto {x : |x|_1 <= r}.
void project_l1_ball(Vector& v, double r) {
  if (norm1(v) <= r) return;
  if (r <= 0.0) {
    std::fill(v.begin(), v.end(), 0.0);
    return;
  }
  Vector a(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) a[i] = std::abs(v[i]) / r;
  const Vector x = project_simplex(a);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::copysign(x[i] * r, v[i]);
}

struct ConeSearch {
  const DenseMatrix& sigma;
  double alpha;
  double step;

  // Projected gradient on delta^T Sigma delta with |delta_J|_2 = 1 and
  // |delta_{J^c}|_1 <= alpha |delta_J|_1. Returns the best feasible point.
  std::pair<double, Vector> run(const IndexSet& J, const IndexSet& Jc, Vector d, int iters) const {
    auto make_feasible = [&](Vector& x) {
      double nj = 0.0;
      for (std::size_t j : J) nj += x[j] * x[j];
      nj = std::sqrt(nj);
      if (nj == 0.0) {
        x[J[0]] = 1.0;
        nj = 1.0;
      }
      for (std::size_t j : J) x[j] /= nj;
      double l1 = 0.0;
      for (std::size_t j : J) l1 += std::abs(x[j]);
      Vector off(Jc.size());
      for (std::size_t k = 0; k < Jc.size(); ++k) off[k] = x[Jc[k]];
      project_l1_ball(off, alpha * l1 * (1.0 - 1e-12));
      for (std::size_t k = 0; k < Jc.size(); ++k) x[Jc[k]] = off[k];
    };
    make_feasible(d);
    double best = dot(d, matvec(sigma, d));
    Vector best_d = d;
    for (int it = 0; it < iters; ++it) {
      const Vector g = matvec(sigma, d);
      for (std::size_t i = 0; i < d.size(); ++i) d[i] -= step * 2.0 * g[i];
      make_feasible(d);
      const double f = dot(d, matvec(sigma, d));
      if (f < best) {
        best = f;
        best_d = d;
      }
    }
    return {best, best_d};
  }
};

}  // namespace

ReEstimate re_estimate(const DenseMatrix& sigma, double alpha, std::size_t s, std::size_t restarts,
                       std::uint64_t seed) {
  const std::size_t p = sigma.rows();
  if (sigma.cols() != p || p == 0) throw InvalidInputError("re_estimate: need a square Gram matrix");
  if (s == 0 || s > p) throw PreconditionError("re_estimate: need 1 <= s <= p");
  if (alpha < 0.0) throw PreconditionError("re_estimate: alpha must be non-negative");
  restarts = std::max<std::size_t>(restarts, 1);

  ReEstimate out;
  out.alpha = alpha;
  out.s = s;
  out.restarts = restarts;
  out.phiEstimate = kInf;

  const double lmax = std::max(power_iteration_max_eig(sigma, 300), 1e-12);
  const ConeSearch search{sigma, alpha, 0.5 / (2.0 * lmax)};
  Rng rng(seed);

  // count subsets of size 1..s, capped
  double count = 0.0;
  double c = 1.0;
  for (std::size_t k = 1; k <= s; ++k) {
    c = c * static_cast<double>(p - k + 1) / static_cast<double>(k);
    count += c;
  }
  constexpr double kEnumerateCap = 2000.0;
  out.exhaustive = count <= kEnumerateCap;

  auto consider = [&](const IndexSet& J) {
    const IndexSet Jc = complement(J, p);
    for (std::size_t r = 0; r < restarts; ++r) {
      Vector d(p, 0.0);
      if (r == 0) {
        for (std::size_t j : J) d[j] = 1.0;
      } else {
        for (std::size_t j : J) d[j] = rng.normal();
        for (std::size_t j : Jc) d[j] = rng.normal() * rng.uniform();
      }
      auto [f, dd] = search.run(J, Jc, std::move(d), 150);
      const double ratio = re_ratio(sigma, dd, J);
      (void)f;
      if (ratio < out.phiEstimate) {
        out.phiEstimate = ratio;
        out.witnessJ = J;
        out.witnessDelta = std::move(dd);
      }
    }
  };

  if (out.exhaustive) {
    for (std::size_t k = 1; k <= s; ++k) {
      IndexSet J(k);
      for (std::size_t i = 0; i < k; ++i) J[i] = i;
      for (;;) {
        consider(J);
        std::size_t i = k;
        while (i > 0 && J[i - 1] == p - k + i - 1) --i;
        if (i == 0) break;
        ++J[i - 1];
        for (std::size_t r = i; r < k; ++r) J[r] = J[r - 1] + 1;
      }
    }
  } else {
    const std::size_t samples = 32;
    IndexSet perm(p);
    for (std::size_t t = 0; t < samples; ++t) {
      for (std::size_t j = 0; j < p; ++j) perm[j] = j;
      for (std::size_t k = 0; k < s; ++k) std::swap(perm[k], perm[k + rng.below(p - k)]);
      IndexSet J(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(s));
      std::sort(J.begin(), J.end());
      consider(J);
    }
  }
  return out;
}

}  // namespace nnr
