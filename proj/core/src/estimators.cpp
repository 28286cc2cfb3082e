#include "nnr/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace nnr {

IndexSet rank_order(std::span<const double> beta) {
  IndexSet order(beta.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return beta[a] > beta[b]; });
  return order;
}

ThresholdedEstimate threshold_hard(const NnlsSolution& solution, double t) {
  if (t < 0.0) throw PreconditionError("threshold_hard: t must be non-negative");
  ThresholdedEstimate out;
  out.base = solution;
  out.order = rank_order(solution.beta);
  out.threshold = t;
  out.refit.assign(solution.beta.size(), 0.0);
  for (std::size_t j = 0; j < solution.beta.size(); ++j) {
    if (solution.beta[j] > t) {
      out.refit[j] = solution.beta[j];
      out.support.push_back(j);
    }
  }
  out.sHat = out.support.size();
  return out;
}

SHatResult select_s_hat(const DenseMatrix& X, std::span<const double> y, std::span<const std::size_t> order,
                        double sigmaHat, double M) {
  const std::size_t n = X.rows();
  const std::size_t p = X.cols();
  if (order.size() != p) throw PreconditionError("select_s_hat: ranks must be a permutation of the columns");
  {
    std::vector<char> seen(p, 0);
    for (std::size_t j : order) {
      if (j >= p || seen[j]) throw PreconditionError("select_s_hat: ranks must be a permutation of the columns");
      seen[j] = 1;
    }
  }
  SHatResult out;
  out.deltas.assign(p, 0.0);
  out.level = (1.0 + M) * sigmaHat * std::sqrt(2.0 * std::log(static_cast<double>(p)));
  const double floor = 1e-9 * norm2(y);
  IncrementalQr qr(n);
  for (std::size_t k = 0; k < p && qr.basis_dim() < n; ++k) {
    const auto u = qr.append(X.col(order[k]));
    if (!u) continue;
    const double d = std::abs(dot(*u, y));
    out.deltas[k] = d;
    if (d > floor && d >= out.level) out.sHat = k + 1;
  }
  return out;
}

double sigma_naive(const DenseMatrix& X, std::span<const double> y, std::span<const double> beta) {
  Vector r(y.begin(), y.end());
  axpy(-1.0, matvec(X, beta), r);
  return std::sqrt(dot(r, r) / static_cast<double>(X.rows()));
}

ThresholdedEstimate recover_support(const DenseMatrix& X, std::span<const double> y, std::optional<double> sigma,
                                    double M, const NnlsOptions& opts) {
  ThresholdedEstimate out;
  out.base = nnls_solve(X, y, opts);
  out.order = rank_order(out.base.beta);
  out.sigmaHat = sigma ? *sigma : sigma_naive(X, y, out.base.beta);
  SHatResult sh = select_s_hat(X, y, out.order, out.sigmaHat, M);
  out.sHat = sh.sHat;
  out.deltas = std::move(sh.deltas);
  out.support.assign(out.order.begin(), out.order.begin() + static_cast<std::ptrdiff_t>(out.sHat));
  std::sort(out.support.begin(), out.support.end());
  out.refit.assign(X.cols(), 0.0);
  if (!out.support.empty()) {
    const Vector b = nnls_solve(X.select_columns(out.support), y, opts).beta;
    for (std::size_t k = 0; k < out.support.size(); ++k) out.refit[out.support[k]] = b[k];
  }
  return out;
}

double nn_lasso_kkt(const DenseMatrix& X, std::span<const double> y, std::span<const double> beta, double lambda) {
  Vector r(y.begin(), y.end());
  axpy(-1.0, matvec(X, beta), r);
  const double two_n = 2.0 / static_cast<double>(X.rows());
  double worst = 0.0;
  for (std::size_t j = 0; j < X.cols(); ++j) {
    const double c = two_n * dot(X.col(j), r);
    const double v = beta[j] > 0.0 ? std::abs(c - lambda) : std::max(0.0, c - lambda);
    worst = std::max(worst, v);
  }
  return worst;
}

namespace {

// Lawson-Hanson for min (1/2n)|y - X beta|^2 + (lambda/2) 1^T beta over beta >= 0,
// started from a feasible point; faces are solved through QR of X_P.
// Returns nullopt on a rank-deficient face or when the pass cap is hit.
std::optional<Vector> finish_on_faces(const DenseMatrix& X, std::span<const double> y, double lambda, Vector beta,
                                      double tol) {
  const std::size_t n = X.rows();
  const std::size_t p = X.cols();
  const double inv_n = 1.0 / static_cast<double>(n);
  Vector b = matvec_transposed(X, y);
  for (double& v : b) v = v * inv_n - 0.5 * lambda;
  std::vector<char> in_p(p, 0);
  for (std::size_t j = 0; j < p; ++j) in_p[j] = beta[j] > 0.0;
  for (std::size_t outer = 0; outer < 3 * p + 10; ++outer) {
    for (std::size_t inner = 0; inner <= p; ++inner) {
      IndexSet P;
      for (std::size_t j = 0; j < p; ++j)
        if (in_p[j]) P.push_back(j);
      if (P.empty()) break;
      if (P.size() > n) return std::nullopt;
      Vector rhs(P.size());
      for (std::size_t k = 0; k < P.size(); ++k) rhs[k] = b[P[k]] * static_cast<double>(n);
      Vector z;
      try {
        z = HouseholderQr(X.select_columns(P)).solve_normal(rhs);
      } catch (const Error&) {
        return std::nullopt;
      }
      double alpha = 1.0;
      for (std::size_t k = 0; k < P.size(); ++k)
        if (z[k] <= 0.0) alpha = std::min(alpha, beta[P[k]] / (beta[P[k]] - z[k]));
      for (std::size_t k = 0; k < P.size(); ++k) {
        beta[P[k]] += alpha * (z[k] - beta[P[k]]);
        if (alpha < 1.0 && (beta[P[k]] <= 0.0 || (z[k] <= 0.0 && beta[P[k]] <= 1e-15))) {
          beta[P[k]] = 0.0;
          in_p[P[k]] = 0;
        }
      }
      if (alpha >= 1.0) break;
    }
    Vector r(y.begin(), y.end());
    axpy(-1.0, matvec(X, beta), r);
    const Vector xr = matvec_transposed(X, r);
    std::size_t best = p;
    double bw = tol;
    for (std::size_t j = 0; j < p; ++j) {
      if (in_p[j]) continue;
      const double w = xr[j] * inv_n - 0.5 * lambda;
      if (w > bw) {
        bw = w;
        best = j;
      }
    }
    if (best == p) return beta;
    in_p[best] = 1;
  }
  return std::nullopt;
}

}  // namespace

Vector nn_lasso(const DenseMatrix& X, std::span<const double> y, double lambda, const NnLassoOptions& opts,
                std::optional<Vector> warm) {
  const std::size_t n = X.rows();
  const std::size_t p = X.cols();
  if (lambda < 0.0) throw PreconditionError("nn_lasso: lambda must be non-negative");
  if (y.size() != n) throw InvalidInputError("nn_lasso: y length mismatch");
  const double inv_n = 1.0 / static_cast<double>(n);
  Vector colsq(p);
  for (std::size_t j = 0; j < p; ++j) colsq[j] = dot(X.col(j), X.col(j)) * inv_n;

  Vector beta = warm ? std::move(*warm) : Vector(p, 0.0);
  if (beta.size() != p) throw InvalidInputError("nn_lasso: warm start length mismatch");
  for (double& b : beta) b = std::max(b, 0.0);
  Vector r(y.begin(), y.end());
  axpy(-1.0, matvec(X, beta), r);

  auto update = [&](std::size_t j) {
    if (colsq[j] == 0.0) return;
    const double c = dot(X.col(j), r) * inv_n;
    const double nb = std::max(0.0, beta[j] + (c - 0.5 * lambda) / colsq[j]);
    const double d = nb - beta[j];
    if (d != 0.0) {
      axpy(-d, X.col(j), r);
      beta[j] = nb;
    }
  };

  for (std::size_t sweep = 0; sweep < opts.max_sweeps;) {
    for (std::size_t j = 0; j < p; ++j) update(j);
    ++sweep;
    // inner passes on the current support
    IndexSet act = support_of(beta);
    for (int inner = 0; inner < 100 && !act.empty() && sweep < opts.max_sweeps; ++inner, ++sweep) {
      double change = 0.0;
      for (std::size_t j : act) {
        const double before = beta[j];
        update(j);
        change = std::max(change, std::abs(beta[j] - before) * std::sqrt(colsq[j]));
      }
      if (change <= 0.1 * opts.tol) break;
    }
    r.assign(y.begin(), y.end());
    axpy(-1.0, matvec(X, beta), r);
    if (nn_lasso_kkt(X, y, beta, lambda) <= opts.tol) return beta;
    // CD crawls on correlated columns; finish with an exact active-set pass
    // a CD iterate can carry a cloud of tiny coefficients on a singular face,
    // in which case the pass is restarted from zero
    for (const Vector& start : {beta, Vector(p, 0.0)}) {
      auto fin = finish_on_faces(X, y, lambda, start, 0.25 * opts.tol);
      if (fin && nn_lasso_kkt(X, y, *fin, lambda) <= opts.tol) return *fin;
    }
  }
  throw NonConvergenceError("nn_lasso: sweep cap reached", beta, nn_lasso_kkt(X, y, beta, lambda));
}

LassoPath nn_lasso_path(const DenseMatrix& X, std::span<const double> y, double lambdaMin,
                        std::optional<double> sigma, std::optional<std::span<const double>> epsilon) {
  const std::size_t n = X.rows();
  const std::size_t p = X.cols();
  if (!(lambdaMin > 0.0)) throw PreconditionError("nn_lasso_path: lambdaMin must be positive");
  if (y.size() != n) throw InvalidInputError("nn_lasso_path: y length mismatch");
  const double inv_n = 1.0 / static_cast<double>(n);
  const double logp = std::log(static_cast<double>(p));

  LassoPath path;
  if (sigma) path.lambda0 = 2.0 * *sigma * std::sqrt(2.0 * logp / static_cast<double>(n));
  if (epsilon) {
    Vector xe = matvec_transposed(X, *epsilon);
    path.lambdaHatEmp = 2.0 * norm_inf(xe) * inv_n;
  }

  const DenseMatrix G = gram(X, inv_n);
  Vector xty = matvec_transposed(X, y);
  for (double& v : xty) v *= inv_n;

  auto correlations = [&](const Vector& beta) {
    Vector c(p);
    const Vector gb = matvec(G, beta);
    for (std::size_t j = 0; j < p; ++j) c[j] = 2.0 * (xty[j] - gb[j]);
    return c;
  };

  Vector beta(p, 0.0);
  Vector c = correlations(beta);
  std::size_t first = 0;
  for (std::size_t j = 1; j < p; ++j)
    if (c[j] > c[first]) first = j;
  double lambda = c[first];
  if (!(lambda > lambdaMin)) {
    path.breakpoints.push_back({lambdaMin, beta, {}});
    return path;
  }
  IndexSet active{first};
  std::vector<char> in_a(p, 0);
  in_a[first] = 1;
  path.breakpoints.push_back({lambda, beta, active});

  std::size_t no_enter = p;  // just dropped
  std::size_t no_exit = first;  // just added
  const std::size_t cap = 20 * (n + p);

  while (lambda > lambdaMin) {
    const DenseMatrix gaa = G.block(active, active);
    const Cholesky chol(gaa);
    const Vector ginv1 = chol.solve(Vector(active.size(), 1.0));
    Vector ba(active.size());
    for (std::size_t k = 0; k < active.size(); ++k) ba[k] = xty[active[k]];
    const Vector base = chol.solve(ba);
    // exact coefficients on this segment: beta_A(l) = base - (l / 2) G_AA^{-1} 1
    for (std::size_t k = 0; k < active.size(); ++k) beta[active[k]] = base[k] - 0.5 * lambda * ginv1[k];
    c = correlations(beta);

    double step = lambda - lambdaMin;
    std::size_t event = p;
    bool entering = false;
    for (std::size_t k = 0; k < active.size(); ++k) {
      const double g = 0.5 * ginv1[k];
      if (g < 0.0 && active[k] != no_exit) {
        const double d = -beta[active[k]] / g;
        if (d < step) {
          step = std::max(d, 0.0);
          event = active[k];
          entering = false;
        }
      }
    }
    Vector ga1(p, 0.0);
    {
      Vector tmp(p, 0.0);
      for (std::size_t k = 0; k < active.size(); ++k) tmp[active[k]] = ginv1[k];
      ga1 = matvec(G, tmp);
    }
    for (std::size_t j = 0; j < p; ++j) {
      if (in_a[j] || j == no_enter) continue;
      const double a = ga1[j];
      if (a >= 1.0) continue;
      const double d = (lambda - c[j]) / (1.0 - a);
      if (d < step) {
        step = std::max(d, 0.0);
        event = j;
        entering = true;
      }
    }

    lambda -= step;
    if (event == p) lambda = lambdaMin;
    for (std::size_t k = 0; k < active.size(); ++k) beta[active[k]] = base[k] - 0.5 * lambda * ginv1[k];
    no_enter = p;
    no_exit = p;
    if (event != p) {
      if (entering) {
        active.push_back(event);
        std::sort(active.begin(), active.end());
        in_a[event] = 1;
        no_exit = event;
      } else {
        beta[event] = 0.0;
        active.erase(std::find(active.begin(), active.end(), event));
        in_a[event] = 0;
        no_enter = event;
      }
    }
    Vector snap = beta;
    for (double& v : snap) v = std::max(v, 0.0);
    if (path.breakpoints.back().lambda - lambda > 1e-15 * path.breakpoints.front().lambda) {
      path.breakpoints.push_back({lambda, std::move(snap), active});
    } else {
      path.breakpoints.back().beta = std::move(snap);
      path.breakpoints.back().active = active;
    }
    if (path.breakpoints.size() > cap) throw RunawayPathError("nn_lasso_path: breakpoint count exceeds 20(n+p)");
    if (active.empty()) {
      // everything left the model: restart from the largest correlation
      c = correlations(beta);
      std::size_t j = 0;
      for (std::size_t i = 1; i < p; ++i)
        if (c[i] > c[j]) j = i;
      active.push_back(j);
      in_a[j] = 1;
    }
  }
  return path;
}

Vector path_at(const LassoPath& path, double lambda) {
  const auto& bp = path.breakpoints;
  if (bp.empty()) throw InvalidInputError("path_at: empty path");
  if (lambda >= bp.front().lambda) return bp.front().beta;
  if (lambda < bp.back().lambda) throw PreconditionError("path_at: lambda below the end of the path");
  for (std::size_t k = 0; k + 1 < bp.size(); ++k) {
    const double hi = bp[k].lambda;
    const double lo = bp[k + 1].lambda;
    if (lambda <= hi && lambda >= lo) {
      const double t = (hi - lambda) / (hi - lo);
      Vector b(bp[k].beta.size());
      for (std::size_t j = 0; j < b.size(); ++j) b[j] = (1.0 - t) * bp[k].beta[j] + t * bp[k + 1].beta[j];
      return b;
    }
  }
  return bp.back().beta;
}

OmpResult omp(const DenseMatrix& X, std::span<const double> y, std::size_t steps) {
  const std::size_t n = X.rows();
  const std::size_t p = X.cols();
  if (steps > std::min(n, p)) throw PreconditionError("omp: steps must not exceed min(n, p)");
  OmpResult out;
  out.beta.assign(p, 0.0);
  Vector r(y.begin(), y.end());
  std::vector<char> chosen(p, 0);
  Vector coef;
  for (std::size_t k = 0; k < steps; ++k) {
    std::size_t best = p;
    double bv = -1.0;
    for (std::size_t j = 0; j < p; ++j) {
      if (chosen[j]) continue;
      const double v = std::abs(dot(X.col(j), r));
      if (v > bv) {
        bv = v;
        best = j;
      }
    }
    out.support.push_back(best);
    const HouseholderQr qr(X.select_columns(out.support));
    if (!qr.full_column_rank()) {
      out.support.pop_back();
      out.early_stop = true;
      break;
    }
    chosen[best] = 1;
    coef = qr.solve_least_squares(y);
    r = qr.project_out(y);
  }
  for (std::size_t k = 0; k < out.support.size(); ++k) out.beta[out.support[k]] = coef[k];
  return out;
}

Vector ridge(const DenseMatrix& X, std::span<const double> y, double gamma) {
  if (!(gamma > 0.0)) throw PreconditionError("ridge: gamma must be positive");
  const double inv_n = 1.0 / static_cast<double>(X.rows());
  DenseMatrix a = gram(X, inv_n);
  for (std::size_t j = 0; j < a.rows(); ++j) a(j, j) += gamma;
  Vector b = matvec_transposed(X, y);
  for (double& v : b) v *= inv_n;
  return spd_solve(a, b);
}

}  // namespace nnr
