#include "nnr/nnls.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "nnr/rng.hpp"

namespace nnr {

bool columns_normalized(const DenseMatrix& X, double tol) {
  const double n = static_cast<double>(X.rows());
  for (std::size_t j = 0; j < X.cols(); ++j) {
    const double sq = dot(X.col(j), X.col(j));
    if (std::abs(sq - n) > tol * n) return false;
  }
  return true;
}

Vector normalize_columns(DenseMatrix& X) {
  const double sqrt_n = std::sqrt(static_cast<double>(X.rows()));
  Vector scale(X.cols());
  for (std::size_t j = 0; j < X.cols(); ++j) {
    const double c = norm2(X.col(j)) / sqrt_n;
    if (c == 0.0 || !std::isfinite(c))
      throw InvalidInputError("normalize_columns: column " + std::to_string(j) + " is zero or non-finite");
    for (double& v : X.col(j)) v /= c;
    scale[j] = c;
  }
  return scale;
}

RegressionInstance make_instance(DenseMatrix X, Vector y, std::optional<GroundTruth> truth) {
  if (X.rows() == 0 || X.cols() == 0) throw InvalidInputError("instance: empty design");
  if (y.size() != X.rows()) throw InvalidInputError("instance: y length differs from rows of X");
  if (!X.all_finite() || !all_finite(y)) throw InvalidInputError("instance: non-finite data");
  if (!columns_normalized(X)) throw InvalidInputError("instance: columns not normalized to |X_j|^2 = n");
  if (truth) {
    if (truth->beta_star.size() != X.cols()) throw InvalidInputError("instance: beta* length mismatch");
    for (double b : truth->beta_star)
      if (b < 0) throw InvalidInputError("instance: beta* has a negative entry");
    if (truth->support != support_of(truth->beta_star))
      throw InvalidInputError("instance: support does not match beta*");
    if (truth->support.size() >= X.rows()) throw InvalidInputError("instance: need s < n");
  }
  return RegressionInstance{std::move(X), std::move(y), std::move(truth)};
}

IndexSet support_of(std::span<const double> beta, double thresh) {
  IndexSet s;
  for (std::size_t j = 0; j < beta.size(); ++j)
    if (beta[j] > thresh) s.push_back(j);
  return s;
}

namespace {

// Thin QR of the active columns: append by Gram-Schmidt (two passes),
// delete by Givens re-triangularization.
class ActiveQr {
 public:
  ActiveQr(const DenseMatrix& X) : X_(X), n_(X.rows()) {}

  bool append(std::size_t j) {
    auto a = X_.col(j);
    const double an = norm2(a);
    if (an == 0.0 || q_.size() >= n_) return false;
    Vector v(a.begin(), a.end());
    Vector rcol(q_.size() + 1, 0.0);
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t k = 0; k < q_.size(); ++k) {
        const double c = dot(q_[k], v);
        rcol[k] += c;
        axpy(-c, q_[k], v);
      }
    }
    const double rho = norm2(v);
    if (rho <= 1e-10 * an) return false;
    for (double& x : v) x /= rho;
    rcol.back() = rho;
    q_.push_back(std::move(v));
    r_.push_back(std::move(rcol));
    cols_.push_back(j);
    return true;
  }

  void remove_index(std::size_t j) {
    const auto it = std::find(cols_.begin(), cols_.end(), j);
    const auto pos = static_cast<std::size_t>(it - cols_.begin());
    cols_.erase(it);
    r_.erase(r_.begin() + static_cast<std::ptrdiff_t>(pos));
    const std::size_t kk = cols_.size();
    for (std::size_t k = pos; k < kk; ++k) {
      const double a = r_[k][k];
      const double b = r_[k][k + 1];
      const double h = std::hypot(a, b);
      if (h != 0.0) {
        const double c = a / h;
        const double s = b / h;
        for (std::size_t m = k; m < kk; ++m) {
          const double x0 = r_[m][k];
          const double x1 = r_[m][k + 1];
          r_[m][k] = c * x0 + s * x1;
          r_[m][k + 1] = -s * x0 + c * x1;
        }
        Vector& qa = q_[k];
        Vector& qb = q_[k + 1];
        for (std::size_t i = 0; i < n_; ++i) {
          const double x0 = qa[i];
          const double x1 = qb[i];
          qa[i] = c * x0 + s * x1;
          qb[i] = -s * x0 + c * x1;
        }
      }
      r_[k].resize(k + 1);
    }
    q_.pop_back();
  }

  void refresh() {
    const IndexSet cols = cols_;
    q_.clear();
    r_.clear();
    cols_.clear();
    for (std::size_t j : cols) append(j);
  }

  // Least-squares coefficients on the active columns, in cols() order.
  Vector solve(std::span<const double> y) const {
    const std::size_t k = cols_.size();
    Vector z(k);
    for (std::size_t i = 0; i < k; ++i) z[i] = dot(q_[i], y);
    for (std::size_t ii = k; ii-- > 0;) {
      double s = z[ii];
      for (std::size_t m = ii + 1; m < k; ++m) s -= r_[m][ii] * z[m];
      z[ii] = s / r_[ii][ii];
    }
    return z;
  }

  const IndexSet& cols() const { return cols_; }

 private:
  const DenseMatrix& X_;
  std::size_t n_;
  std::vector<Vector> q_;
  std::vector<Vector> r_;  // r_[m] = column m of R, length m + 1
  IndexSet cols_;
};

double objective_of(const DenseMatrix& X, std::span<const double> y, std::span<const double> beta) {
  Vector r(y.begin(), y.end());
  axpy(-1.0, matvec(X, beta), r);
  return dot(r, r) / static_cast<double>(X.rows());
}

Vector gradient(const DenseMatrix& X, std::span<const double> y, std::span<const double> beta) {
  Vector r(y.begin(), y.end());
  axpy(-1.0, matvec(X, beta), r);
  Vector g = matvec_transposed(X, r);
  const double inv_n = 1.0 / static_cast<double>(X.rows());
  for (double& v : g) v *= inv_n;
  return g;
}

}  // namespace

NnlsSolution nnls_solve(const DenseMatrix& X, std::span<const double> y, const NnlsOptions& opts) {
  const std::size_t n = X.rows();
  const std::size_t p = X.cols();
  if (n == 0 || p == 0) throw InvalidInputError("nnls: empty design");
  if (y.size() != n) throw InvalidInputError("nnls: y length mismatch");
  if (!X.all_finite() || !all_finite(y)) throw InvalidInputError("nnls: non-finite data");

  const std::size_t max_iter = opts.max_iter ? opts.max_iter : 10 * (n + p);
  Vector g = gradient(X, y, Vector(p, 0.0));
  const double tol = opts.tol * std::max(1.0, norm_inf(g));

  NnlsSolution sol;
  sol.beta.assign(p, 0.0);
  Vector& beta = sol.beta;
  std::vector<char> in_p(p, 0);
  std::vector<char> excluded(p, 0);
  ActiveQr qr(X);
  std::set<IndexSet> visited;
  std::size_t changes = 0;
  std::size_t iter = 0;
  sol.objective_trace.push_back(dot(y, y) / static_cast<double>(n));

  auto bump = [&]() {
    if (++iter > max_iter) {
      throw NonConvergenceError("nnls: iteration cap " + std::to_string(max_iter) + " reached", beta,
                                norm_inf(gradient(X, y, beta)));
    }
  };
  auto note_change = [&]() {
    if (++changes % opts.refresh_every == 0) qr.refresh();
  };

  for (;;) {
    std::size_t t = p;
    double best = tol;
    for (std::size_t j = 0; j < p; ++j) {
      if (in_p[j] || excluded[j]) continue;
      if (g[j] > best) {
        best = g[j];
        t = j;
      }
    }
    if (t == p) break;
    bump();
    if (!qr.append(t)) {
      excluded[t] = 1;
      continue;
    }
    note_change();
    Vector z = qr.solve(y);
    const auto tpos = static_cast<std::size_t>(std::find(qr.cols().begin(), qr.cols().end(), t) - qr.cols().begin());
    if (!(z[tpos] > 0.0)) {
      qr.remove_index(t);
      note_change();
      excluded[t] = 1;
      continue;
    }
    in_p[t] = 1;
    std::fill(excluded.begin(), excluded.end(), 0);

    for (;;) {
      const IndexSet& cols = qr.cols();
      double alpha = 2.0;
      std::size_t leave = p;
      for (std::size_t k = 0; k < cols.size(); ++k) {
        if (z[k] > 0.0) continue;
        const double bj = beta[cols[k]];
        const double a = bj / (bj - z[k]);
        if (a < alpha) {
          alpha = a;
          leave = cols[k];
        }
      }
      if (leave == p) break;
      bump();
      for (std::size_t k = 0; k < cols.size(); ++k) beta[cols[k]] += alpha * (z[k] - beta[cols[k]]);
      beta[leave] = 0.0;
      IndexSet drop;
      for (std::size_t j : cols)
        if (beta[j] <= 0.0) drop.push_back(j);
      for (std::size_t j : drop) {
        beta[j] = 0.0;
        in_p[j] = 0;
        qr.remove_index(j);
        note_change();
      }
      z = qr.solve(y);
    }
    const IndexSet& cols = qr.cols();
    for (std::size_t k = 0; k < cols.size(); ++k) beta[cols[k]] = z[k];

    g = gradient(X, y, beta);
    sol.objective_trace.push_back(objective_of(X, y, beta));
    IndexSet key = cols;
    std::sort(key.begin(), key.end());
    if (!visited.insert(std::move(key)).second) {
      throw CyclingError("nnls: active set revisited after " + std::to_string(iter) + " iterations", beta);
    }
  }

  // final polish on a fresh factorization
  if (!qr.cols().empty()) {
    qr.refresh();
    const Vector z = qr.solve(y);
    if (std::all_of(z.begin(), z.end(), [](double v) { return v > 0.0; })) {
      for (std::size_t k = 0; k < z.size(); ++k) beta[qr.cols()[k]] = z[k];
    }
  }

  sol.iterations = iter;
  sol.active_set = support_of(beta);
  sol.objective = objective_of(X, y, beta);
  const KktReport kkt = kkt_check(X, y, beta, tol);
  sol.kkt_max_violation = kkt.max_violation;
  return sol;
}

KktReport kkt_check(const DenseMatrix& X, std::span<const double> y, std::span<const double> beta, double tol) {
  if (beta.size() != X.cols()) throw InvalidInputError("kkt_check: beta length mismatch");
  const Vector g = gradient(X, y, beta);
  KktReport rep;
  for (std::size_t j = 0; j < beta.size(); ++j) {
    const bool active = beta[j] > 0.0;
    if (active) rep.active_set.push_back(j);
    const double viol = active ? std::abs(g[j]) : std::max(0.0, g[j]);
    if (viol > rep.max_violation) {
      rep.max_violation = viol;
      rep.worst_index = j;
      rep.worst_in_active = active;
    }
  }
  rep.is_optimal = rep.max_violation <= tol;
  return rep;
}

DecoupledProblems decouple(const DenseMatrix& X, std::span<const double> y, std::span<const std::size_t> S,
                           const NnlsOptions& opts) {
  const std::size_t n = X.rows();
  const std::size_t p = X.cols();
  if (y.size() != n) throw InvalidInputError("decouple: y length mismatch");
  DecoupledProblems out;
  out.S.assign(S.begin(), S.end());
  std::sort(out.S.begin(), out.S.end());
  if (std::adjacent_find(out.S.begin(), out.S.end()) != out.S.end())
    throw InvalidInputError("decouple: repeated index in S");
  out.Sc = complement(out.S, p);
  const DenseMatrix XSc = X.select_columns(out.Sc);

  if (out.S.empty()) {
    out.Z = XSc;
    out.xi.assign(y.begin(), y.end());
    out.beta_p1 = nnls_solve(out.Z, out.xi, opts).beta;
    out.p2_all_positive = true;
    out.composite = out.beta_p1;
    return out;
  }
  const DenseMatrix XS = X.select_columns(out.S);
  const HouseholderQr qr(XS);
  if (!qr.full_column_rank()) throw RankDeficientError("decouple: X_S is rank deficient");

  out.Z = DenseMatrix(n, out.Sc.size());
  for (std::size_t k = 0; k < out.Sc.size(); ++k) {
    const Vector zc = qr.project_out(XSc.col(k));
    std::copy(zc.begin(), zc.end(), out.Z.col(k).begin());
  }
  out.xi = qr.project_out(y);
  out.beta_p1 = out.Sc.empty() ? Vector{} : nnls_solve(out.Z, out.xi, opts).beta;

  // target = Pi_S y - Pi_S X_{S^c} beta_p1
  Vector target(y.begin(), y.end());
  axpy(-1.0, out.xi, target);
  if (!out.Sc.empty()) {
    const Vector u = matvec(XSc, out.beta_p1);
    const Vector u_perp = qr.project_out(u);
    for (std::size_t i = 0; i < n; ++i) target[i] -= u[i] - u_perp[i];
  }
  out.beta_p2 = nnls_solve(XS, target, opts).beta;
  out.p2_all_positive =
      std::all_of(out.beta_p2.begin(), out.beta_p2.end(), [](double v) { return v > 1e-12; });

  out.composite.assign(p, 0.0);
  for (std::size_t k = 0; k < out.S.size(); ++k) out.composite[out.S[k]] = out.beta_p2[k];
  for (std::size_t k = 0; k < out.Sc.size(); ++k) out.composite[out.Sc[k]] = out.beta_p1[k];
  return out;
}

namespace {

// C(p, m) capped at `cap` + 1.
std::size_t binom_capped(std::size_t p, std::size_t m, std::size_t cap) {
  m = std::min(m, p - m);
  double c = 1.0;
  for (std::size_t i = 1; i <= m; ++i) {
    c = c * static_cast<double>(p - m + i) / static_cast<double>(i);
    if (c > static_cast<double>(cap)) return cap + 1;
  }
  return static_cast<std::size_t>(std::llround(c));
}

bool subset_full_rank(const DenseMatrix& X, const IndexSet& idx) {
  return HouseholderQr(X.select_columns(idx)).full_column_rank();
}

}  // namespace

bool glp_check(const DenseMatrix& X, std::size_t trials, std::uint64_t seed) {
  const std::size_t n = X.rows();
  const std::size_t p = X.cols();
  if (p == 0) return true;
  const std::size_t m = std::min(n, p);
  constexpr std::size_t kExactCap = 5000;
  if (binom_capped(p, m, kExactCap) <= kExactCap) {
    IndexSet idx(m);
    for (std::size_t k = 0; k < m; ++k) idx[k] = k;
    for (;;) {
      if (!subset_full_rank(X, idx)) return false;
      // next combination in lexicographic order
      std::size_t k = m;
      while (k > 0 && idx[k - 1] == p - m + k - 1) --k;
      if (k == 0) return true;
      ++idx[k - 1];
      for (std::size_t r = k; r < m; ++r) idx[r] = idx[r - 1] + 1;
    }
  }
  Rng rng(seed);
  IndexSet perm(p);
  for (std::size_t t = 0; t < trials; ++t) {
    for (std::size_t j = 0; j < p; ++j) perm[j] = j;
    for (std::size_t k = 0; k < m; ++k) std::swap(perm[k], perm[k + rng.below(p - k)]);
    IndexSet idx(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(m));
    std::sort(idx.begin(), idx.end());
    if (!subset_full_rank(X, idx)) return false;
  }
  return true;
}

UniquenessReport uniqueness_report(const DenseMatrix& X, const NnlsSolution& sol, std::size_t trials,
                                   std::uint64_t seed) {
  const std::size_t n = X.rows();
  const std::size_t p = X.cols();
  UniquenessReport rep;
  rep.glp_sampled = glp_check(X, trials, seed);
  rep.residual_positive = sol.objective > 1e-12;
  rep.active_card_ok = sol.active_set.size() <= std::min(n - 1, p);
  rep.unique_certified = rep.glp_sampled && (p <= n || rep.residual_positive);
  return rep;
}

SelfRegDecomposition self_reg_decompose(const DenseMatrix& X, std::span<const double> w, double tau,
                                        std::uint64_t seed) {
  const std::size_t n = X.rows();
  const std::size_t p = X.cols();
  if (w.size() != n) throw InvalidInputError("self_reg_decompose: w length mismatch");
  if (std::abs(norm2(w) - 1.0) > 1e-10) throw PreconditionError("self_reg_decompose: w must be a unit vector");
  if (!(tau > 0.0)) throw PreconditionError("self_reg_decompose: tau must be positive");
  const double sqrt_n = std::sqrt(static_cast<double>(n));

  SelfRegDecomposition out;
  out.w.assign(w.begin(), w.end());
  out.tau = tau;
  out.h = matvec_transposed(X, w);
  for (double& v : out.h) v /= sqrt_n;
  const double hmin = *std::min_element(out.h.begin(), out.h.end());
  if (hmin < tau) {
    throw PreconditionError("self_reg_decompose: margin violated, min_j h_j = " + std::to_string(hmin) +
                            " < tau = " + std::to_string(tau));
  }
  out.d.resize(p);
  for (std::size_t j = 0; j < p; ++j) out.d[j] = tau / out.h[j];

  // Xbar = (I - w w^T) X
  DenseMatrix xbar = X;
  for (std::size_t j = 0; j < p; ++j) {
    const double c = out.h[j] * sqrt_n;
    axpy(-c, w, xbar.col(j));
  }
  out.Xtilde = xbar;
  for (std::size_t j = 0; j < p; ++j)
    for (double& v : out.Xtilde.col(j)) v *= out.d[j];

  // (1/n)|e - X b|^2 = (1/n)|e - Xbar b|^2 + (h^T b)^2 - (2 e^T w / sqrt(n)) (h^T b)
  Rng rng(seed);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    Vector e(n);
    Vector b(p);
    for (double& v : e) v = rng.normal();
    for (double& v : b) v = rng.bernoulli(0.3) ? rng.uniform(0.0, 2.0) : 0.0;
    Vector r1 = e;
    axpy(-1.0, matvec(X, b), r1);
    Vector r2 = e;
    axpy(-1.0, matvec(xbar, b), r2);
    const double hb = dot(out.h, b);
    const double lhs = dot(r1, r1) / static_cast<double>(n);
    const double rhs = dot(r2, r2) / static_cast<double>(n) + hb * hb - 2.0 * dot(e, w) / sqrt_n * hb;
    worst = std::max(worst, std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs)));
  }
  out.identity_max_residual = worst;
  if (worst > 1e-9) throw Error("self_reg_decompose: objective identity failed, residual " + std::to_string(worst));
  return out;
}

}  // namespace nnr
