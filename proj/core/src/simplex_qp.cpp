#include "nnr/simplex_qp.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace nnr {

Vector project_simplex(std::span<const double> v) {
  const std::size_t m = v.size();
  if (m == 0) throw InvalidInputError("project_simplex: empty vector");
  Vector u(v.begin(), v.end());
  std::sort(u.begin(), u.end(), std::greater<>());
  double css = 0.0;
  double theta = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    css += u[k];
    const double t = (css - 1.0) / static_cast<double>(k + 1);
    if (u[k] - t > 0.0) theta = t;
  }
  Vector x(m);
  for (std::size_t j = 0; j < m; ++j) x[j] = std::max(v[j] - theta, 0.0);
  return x;
}

namespace {

double quad(const DenseMatrix& Q, std::span<const double> x, Vector& qx) {
  qx = matvec(Q, x);
  return dot(x, qx);
}

double fw_gap(std::span<const double> x, std::span<const double> qx) {
  const double mn = *std::min_element(qx.begin(), qx.end());
  return std::max(0.0, dot(x, qx) - mn);
}

// Primal active-set polish: exact face minimizers via the bordered system,
// stepping back to the feasibility boundary when a face solution goes negative.
std::optional<Vector> face_solve(const DenseMatrix& Q, const IndexSet& face) {
  const std::size_t k = face.size();
  DenseMatrix K(k + 1, k + 1);
  Vector rhs(k + 1, 0.0);
  for (std::size_t b = 0; b < k; ++b) {
    for (std::size_t a = 0; a < k; ++a) K(a, b) = Q(face[a], face[b]);
    K(b, k) = -1.0;
    K(k, b) = 1.0;
  }
  rhs[k] = 1.0;
  auto sol = lu_solve(K, rhs, 1e-13);
  if (!sol) {
    // near-collinear face; a tiny ridge picks one minimizer, the KKT test still judges it on Q
    double tr = 0.0;
    for (std::size_t a = 0; a < k; ++a) tr += K(a, a);
    for (std::size_t a = 0; a < k; ++a) K(a, a) += 1e-11 * tr / static_cast<double>(k);
    sol = lu_solve(std::move(K), std::move(rhs), 1e-15);
  }
  return sol;
}

std::optional<Vector> polish_face(const DenseMatrix& Q, std::span<const double> x, double tol) {
  const std::size_t m = Q.rows();
  double mx = 0.0;
  for (double v : x) mx = std::max(mx, v);
  Vector lam(m, 0.0);
  double mass = 0.0;
  IndexSet face;
  for (std::size_t j = 0; j < m; ++j)
    if (x[j] > 1e-9 * mx) {
      face.push_back(j);
      lam[j] = x[j];
      mass += x[j];
    }
  if (face.empty()) return std::nullopt;
  for (double& v : lam) v /= mass;

  std::size_t added = m;
  for (std::size_t step = 0; step < 4 * m + 50; ++step) {
    const auto sol = face_solve(Q, face);
    if (!sol) return std::nullopt;
    const std::size_t k = face.size();
    double alpha = 1.0;
    for (std::size_t a = 0; a < k; ++a) {
      const double z = (*sol)[a];
      if (z > 0.0) continue;
      if (face[a] == added) return std::nullopt;  // entering index cannot move: degenerate, give up
      const double l = lam[face[a]];
      alpha = std::min(alpha, l / (l - z));
    }
    for (std::size_t a = 0; a < k; ++a) lam[face[a]] += alpha * ((*sol)[a] - lam[face[a]]);
    if (alpha < 1.0) {
      IndexSet keep;
      for (std::size_t a = 0; a < k; ++a) {
        const std::size_t j = face[a];
        if ((*sol)[a] <= 0.0 && lam[j] <= 1e-15) {
          lam[j] = 0.0;
        } else {
          keep.push_back(j);
        }
      }
      if (keep.size() == k) return std::nullopt;
      face = std::move(keep);
      added = m;
      continue;
    }
    const double mu = (*sol)[k];
    const Vector ql = matvec(Q, lam);
    std::size_t worst = m;
    double worst_val = mu - tol;
    for (std::size_t j = 0; j < m; ++j) {
      if (lam[j] > 0.0) continue;
      if (ql[j] < worst_val) {
        worst_val = ql[j];
        worst = j;
      }
    }
    if (worst == m) return lam;
    face.push_back(worst);
    std::sort(face.begin(), face.end());
    added = worst;
  }
  return std::nullopt;
}

}  // namespace

SimplexQpResult simplex_min_quadratic(const DenseMatrix& Q, const SimplexQpOptions& opts) {
  const std::size_t m = Q.rows();
  if (m == 0 || Q.cols() != m) throw InvalidInputError("simplex_min_quadratic: need non-empty square matrix");
  if (!Q.all_finite()) throw InvalidInputError("simplex_min_quadratic: non-finite input");
  if (!is_symmetric(Q, 1e-9)) throw InvalidInputError("simplex_min_quadratic: matrix is not symmetric");

  SimplexQpResult res;
  if (m == 1) {
    res.value = Q(0, 0);
    res.lambda = {1.0};
    return res;
  }
  double diag_max = 0.0;
  for (std::size_t j = 0; j < m; ++j) diag_max = std::max(diag_max, Q(j, j));
  const double scale = std::max(1.0, diag_max);
  const double gap_tol = opts.tol * scale;
  const double lmax = std::max(diag_max, 1.05 * power_iteration_max_eig(Q, 300));
  if (lmax <= 0.0) {
    res.lambda.assign(m, 1.0 / static_cast<double>(m));
    return res;
  }
  const double step = 1.0 / (2.0 * lmax);

  Vector x(m, 1.0 / static_cast<double>(m));
  Vector qx;
  double fx = quad(Q, x, qx);
  Vector best = x;
  double fbest = fx;
  Vector yv = x;
  double t = 1.0;
  Vector qy;

  auto try_polish = [&]() -> bool {
    const auto lam = polish_face(Q, best, gap_tol);
    if (!lam) return false;
    Vector ql;
    const double fl = quad(Q, *lam, ql);
    if (fl > fbest + gap_tol) return false;
    res.lambda = *lam;
    res.value = fl;
    res.kkt_gap = fw_gap(*lam, ql);
    res.polished = true;
    return true;
  };

  for (std::size_t it = 1; it <= opts.max_iter; ++it) {
    quad(Q, yv, qy);
    Vector grad_step(m);
    for (std::size_t j = 0; j < m; ++j) grad_step[j] = yv[j] - step * 2.0 * qy[j];
    Vector xn = project_simplex(grad_step);
    Vector qxn;
    const double fxn = quad(Q, xn, qxn);

    double restart_dot = 0.0;
    for (std::size_t j = 0; j < m; ++j) restart_dot += (yv[j] - xn[j]) * (xn[j] - x[j]);
    const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    if (restart_dot > 0.0 || fxn > fx) {
      t = 1.0;
      yv = xn;
    } else {
      const double mom = (t - 1.0) / tn;
      for (std::size_t j = 0; j < m; ++j) yv[j] = xn[j] + mom * (xn[j] - x[j]);
      t = tn;
    }
    x = std::move(xn);
    fx = fxn;
    qx = std::move(qxn);
    if (fx < fbest) {
      fbest = fx;
      best = x;
    }
    res.iterations = it;

    if (fbest < kZeroMargin * 1e-2 * scale) {
      res.lambda = best;
      res.value = fbest;
      Vector qb;
      quad(Q, best, qb);
      res.kkt_gap = fw_gap(best, qb);
      return res;
    }
    if (it % 10 == 0) {
      Vector qb;
      quad(Q, best, qb);
      if (fw_gap(best, qb) <= gap_tol) {
        if (try_polish()) return res;
        res.lambda = best;
        res.value = fbest;
        res.kkt_gap = fw_gap(best, qb);
        return res;
      }
    }
    if (it % opts.polish_every == 0 || it == 50) {
      if (try_polish()) return res;
    }
  }
  Vector qb;
  quad(Q, best, qb);
  throw NonConvergenceError("simplex_min_quadratic: iteration cap reached", best, fw_gap(best, qb));
}

namespace {

MarginCertificate certificate_from(const DenseMatrix& Z, const SimplexQpResult& r, MarginKind kind) {
  MarginCertificate c;
  c.kind = kind;
  c.lambda = r.lambda;
  const std::size_t n = Z.rows();
  std::size_t face = 0;
  for (double v : r.lambda)
    if (v > 0.0) ++face;
  c.conditioning_note = "face size " + std::to_string(face) + ", kkt gap " + std::to_string(r.kkt_gap) +
                        (r.polished ? ", polished" : ", first-order");
  if (r.value < kZeroMargin) {
    c.value = 0.0;
    c.w.assign(n, 0.0);
    c.conditioning_note += "; half-space condition fails";
    return c;
  }
  c.value = r.value;
  c.w = matvec(Z, r.lambda);
  const double denom = std::sqrt(static_cast<double>(n)) * std::sqrt(r.value);
  for (double& v : c.w) v /= denom;
  return c;
}

void symmetrize(DenseMatrix& a) {
  for (std::size_t j = 0; j < a.cols(); ++j)
    for (std::size_t i = j + 1; i < a.rows(); ++i) {
      const double v = 0.5 * (a(i, j) + a(j, i));
      a(i, j) = v;
      a(j, i) = v;
    }
}

IndexSet checked_support(std::span<const std::size_t> S, std::size_t p) {
  IndexSet s(S.begin(), S.end());
  std::sort(s.begin(), s.end());
  if (std::adjacent_find(s.begin(), s.end()) != s.end()) throw InvalidInputError("tauS: repeated index in S");
  if (!s.empty() && s.back() >= p) throw InvalidInputError("tauS: index out of range");
  if (s.size() >= p) throw PreconditionError("tauS: need s < p");
  return s;
}

DenseMatrix projected_offsupport(const DenseMatrix& X, const IndexSet& s, const IndexSet& sc) {
  IncrementalQr qr(X.rows());
  for (std::size_t j : s)
    if (!qr.append(X.col(j))) throw RankDeficientError("tauS: X_S is rank deficient");
  DenseMatrix Z(X.rows(), sc.size());
  for (std::size_t k = 0; k < sc.size(); ++k) {
    const Vector r = qr.project_residual(X.col(sc[k]));
    std::copy(r.begin(), r.end(), Z.col(k).begin());
  }
  return Z;
}

}  // namespace

MarginCertificate tau0(const DenseMatrix& X) {
  if (X.cols() == 0) throw InvalidInputError("tau0: empty design");
  const DenseMatrix sigma = gram(X, 1.0 / static_cast<double>(X.rows()));
  return certificate_from(X, simplex_min_quadratic(sigma), MarginKind::tau0);
}

DenseMatrix tau_s_gram(const DenseMatrix& X, std::span<const std::size_t> S, TauSRoute route) {
  const std::size_t n = X.rows();
  const std::size_t p = X.cols();
  const IndexSet s = checked_support(S, p);
  const IndexSet sc = complement(s, p);
  const double inv_n = 1.0 / static_cast<double>(n);
  DenseMatrix g;

  switch (route) {
    case TauSRoute::projection: {
      g = gram(projected_offsupport(X, s, sc), inv_n);
      break;
    }
    case TauSRoute::schur: {
      const DenseMatrix sigma = gram(X, inv_n);
      g = sigma.block(sc, sc);
      if (!s.empty()) {
        const DenseMatrix sigma_ss = sigma.block(s, s);
        const DenseMatrix sigma_sc = sigma.block(s, sc);
        std::optional<Cholesky> chol;
        try {
          chol.emplace(sigma_ss);
        } catch (const SingularMatrixError&) {
          throw RankDeficientError("tauS: X_S is rank deficient");
        }
        for (std::size_t b = 0; b < sc.size(); ++b) {
          const Vector m = chol->solve(sigma_sc.col(b));
          for (std::size_t a = 0; a < sc.size(); ++a) g(a, b) -= dot(sigma_sc.col(a), m);
        }
      }
      break;
    }
    case TauSRoute::joint: {
      // theta eliminated by Householder least squares: rows s..n-1 of Q^T X_{S^c}
      if (s.empty()) {
        g = gram(X, inv_n);
        break;
      }
      const HouseholderQr qr(X.select_columns(s));
      if (!qr.full_column_rank()) throw RankDeficientError("tauS: X_S is rank deficient");
      DenseMatrix tail(n - s.size(), sc.size());
      for (std::size_t k = 0; k < sc.size(); ++k) {
        Vector c(X.col(sc[k]).begin(), X.col(sc[k]).end());
        qr.apply_qt(c);
        std::copy(c.begin() + static_cast<std::ptrdiff_t>(s.size()), c.end(), tail.col(k).begin());
      }
      g = gram(tail, inv_n);
      break;
    }
  }
  symmetrize(g);
  return g;
}

MarginCertificate tauS(const DenseMatrix& X, std::span<const std::size_t> S, const TauSOptions& opts) {
  const std::size_t p = X.cols();
  const IndexSet s = checked_support(S, p);
  const IndexSet sc = complement(s, p);
  const DenseMatrix Z = projected_offsupport(X, s, sc);
  const DenseMatrix ga = gram(Z, 1.0 / static_cast<double>(X.rows()));
  MarginCertificate c = certificate_from(Z, simplex_min_quadratic(ga), MarginKind::tauS);
  c.form_values = {c.value, c.value, c.value};
  if (opts.cross_check) {
    for (int route = 1; route < 3; ++route) {
      const DenseMatrix g = tau_s_gram(X, s, static_cast<TauSRoute>(route));
      const double v = simplex_min_quadratic(g).value;
      c.form_values[static_cast<std::size_t>(route)] = v < kZeroMargin ? 0.0 : v;
    }
    const auto [lo, hi] = std::minmax_element(c.form_values.begin(), c.form_values.end());
    c.form_spread = *hi - *lo;
  }
  return c;
}

}  // namespace nnr
