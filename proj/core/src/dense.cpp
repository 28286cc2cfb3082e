#include "nnr/dense.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace nnr {

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> col_major)
    : rows_(rows), cols_(cols), data_(std::move(col_major)) {
  if (data_.size() != rows * cols) {
    throw InvalidInputError("DenseMatrix: data length " + std::to_string(data_.size()) +
                            " does not match " + std::to_string(rows) + "x" + std::to_string(cols));
  }
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

bool DenseMatrix::all_finite() const { return nnr::all_finite(data_); }

DenseMatrix DenseMatrix::transpose() const {
  DenseMatrix t(cols_, rows_);
  for (std::size_t j = 0; j < cols_; ++j)
    for (std::size_t i = 0; i < rows_; ++i) t(j, i) = (*this)(i, j);
  return t;
}

DenseMatrix DenseMatrix::select_columns(std::span<const std::size_t> idx) const {
  DenseMatrix out(rows_, idx.size());
  for (std::size_t k = 0; k < idx.size(); ++k) {
    if (idx[k] >= cols_) throw InvalidInputError("select_columns: index out of range");
    std::copy_n(data_.begin() + static_cast<std::ptrdiff_t>(idx[k] * rows_), rows_,
                out.data_.begin() + static_cast<std::ptrdiff_t>(k * rows_));
  }
  return out;
}

DenseMatrix DenseMatrix::select_rows(std::span<const std::size_t> idx) const {
  DenseMatrix out(idx.size(), cols_);
  for (std::size_t j = 0; j < cols_; ++j)
    for (std::size_t k = 0; k < idx.size(); ++k) {
      if (idx[k] >= rows_) throw InvalidInputError("select_rows: index out of range");
      out(k, j) = (*this)(idx[k], j);
    }
  return out;
}

DenseMatrix DenseMatrix::block(std::span<const std::size_t> row_idx,
                               std::span<const std::size_t> col_idx) const {
  DenseMatrix out(row_idx.size(), col_idx.size());
  for (std::size_t b = 0; b < col_idx.size(); ++b)
    for (std::size_t a = 0; a < row_idx.size(); ++a) out(a, b) = (*this)(row_idx[a], col_idx[b]);
  return out;
}

void DenseMatrix::append_column(std::span<const double> c) {
  if (cols_ == 0 && rows_ == 0) rows_ = c.size();
  if (c.size() != rows_) throw InvalidInputError("append_column: length mismatch");
  data_.insert(data_.end(), c.begin(), c.end());
  ++cols_;
}

double dot(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) {
  // scaled to avoid overflow on large inputs
  double scale = 0.0;
  for (double v : a) scale = std::max(scale, std::abs(v));
  if (scale == 0.0 || !std::isfinite(scale)) return scale;
  double s = 0.0;
  for (double v : a) {
    const double t = v / scale;
    s += t * t;
  }
  return scale * std::sqrt(s);
}

double norm1(std::span<const double> a) {
  double s = 0.0;
  for (double v : a) s += std::abs(v);
  return s;
}

double norm_inf(std::span<const double> a) {
  double s = 0.0;
  for (double v : a) s = std::max(s, std::abs(v));
  return s;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  assert(x.size() == y.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double d) { return std::isfinite(d); });
}

Vector matvec(const DenseMatrix& a, std::span<const double> x) {
  if (x.size() != a.cols()) throw InvalidInputError("matvec: shape mismatch");
  Vector y(a.rows(), 0.0);
  for (std::size_t j = 0; j < a.cols(); ++j) {
    if (x[j] != 0.0) axpy(x[j], a.col(j), y);
  }
  return y;
}

Vector matvec_transposed(const DenseMatrix& a, std::span<const double> x) {
  if (x.size() != a.rows()) throw InvalidInputError("matvec_transposed: shape mismatch");
  Vector y(a.cols());
  for (std::size_t j = 0; j < a.cols(); ++j) y[j] = dot(a.col(j), x);
  return y;
}

DenseMatrix multiply(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) throw InvalidInputError("multiply: shape mismatch");
  DenseMatrix c(a.rows(), b.cols());
  for (std::size_t j = 0; j < b.cols(); ++j)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double bkj = b(k, j);
      if (bkj != 0.0) axpy(bkj, a.col(k), c.col(j));
    }
  return c;
}

DenseMatrix gram(const DenseMatrix& a, double scale) {
  const std::size_t p = a.cols();
  DenseMatrix g(p, p);
  for (std::size_t j = 0; j < p; ++j)
    for (std::size_t k = j; k < p; ++k) {
      const double v = scale * dot(a.col(j), a.col(k));
      g(j, k) = v;
      g(k, j) = v;
    }
  return g;
}

double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw InvalidInputError("max_abs_diff: shape mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i)
    m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

double max_abs(const DenseMatrix& a) { return norm_inf(a.data()); }

bool is_symmetric(const DenseMatrix& a, double tol) {
  if (a.rows() != a.cols()) return false;
  const double scale = std::max(1.0, max_abs(a));
  for (std::size_t j = 0; j < a.cols(); ++j)
    for (std::size_t i = j + 1; i < a.rows(); ++i)
      if (std::abs(a(i, j) - a(j, i)) > tol * scale) return false;
  return true;
}

IndexSet complement(std::span<const std::size_t> subset, std::size_t p) {
  std::vector<char> in(p, 0);
  for (auto j : subset) {
    if (j >= p) throw InvalidInputError("complement: index out of range");
    in[j] = 1;
  }
  IndexSet out;
  out.reserve(p - std::min(p, subset.size()));
  for (std::size_t j = 0; j < p; ++j)
    if (!in[j]) out.push_back(j);
  return out;
}

// ---------------------------------------------------------------------------
// IncrementalQr

std::optional<Vector> IncrementalQr::append(std::span<const double> column) {
  if (column.size() != n_) throw InvalidInputError("qr_append: column length mismatch");
  if (!nnr::all_finite(column)) throw InvalidInputError("qr_append: non-finite column");
  ++appended_;
  const double cn = norm2(column);
  if (cn == 0.0 || basis_dim_ == n_) return std::nullopt;

  Vector r(column.begin(), column.end());
  for (int pass = 0; pass < 2; ++pass) {
    const Vector c = coefficients(r);
    for (std::size_t k = 0; k < basis_dim_; ++k) axpy(-c[k], direction(k), r);
  }
  const double rn = norm2(r);
  if (rn <= kDependenceTol * cn) return std::nullopt;
  for (double& v : r) v /= rn;
  q_.insert(q_.end(), r.begin(), r.end());
  ++basis_dim_;
  return r;
}

Vector IncrementalQr::coefficients(std::span<const double> v) const {
  if (v.size() != n_) throw InvalidInputError("IncrementalQr: vector length mismatch");
  Vector c(basis_dim_);
  for (std::size_t k = 0; k < basis_dim_; ++k) c[k] = dot(direction(k), v);
  return c;
}

Vector IncrementalQr::project_residual(std::span<const double> v) const {
  const Vector c = coefficients(v);
  Vector r(v.begin(), v.end());
  for (std::size_t k = 0; k < basis_dim_; ++k) axpy(-c[k], direction(k), r);
  return r;
}

DenseMatrix IncrementalQr::basis() const { return DenseMatrix(n_, basis_dim_, q_); }

std::optional<Vector> qr_append(IncrementalQr& state, std::span<const double> column) {
  return state.append(column);
}

Vector project_residual(const IncrementalQr& basis, std::span<const double> v) {
  return basis.project_residual(v);
}

// ---------------------------------------------------------------------------
// HouseholderQr

HouseholderQr::HouseholderQr(DenseMatrix a) : a_(std::move(a)) {
  const std::size_t m = a_.rows();
  const std::size_t k = a_.cols();
  if (m < k) throw InvalidInputError("HouseholderQr: needs rows >= cols");
  if (!a_.all_finite()) throw InvalidInputError("HouseholderQr: non-finite input");
  tau_.assign(k, 0.0);
  rdiag_.assign(k, 0.0);
  for (std::size_t j = 0; j < k; ++j) {
    auto cj = a_.col(j).subspan(j);
    const double nrm = norm2(cj);
    if (nrm == 0.0) continue;
    const double alpha = cj[0] > 0 ? -nrm : nrm;
    cj[0] -= alpha;  // cj now holds v
    const double vv = dot(cj, cj);
    tau_[j] = 2.0 / vv;
    for (std::size_t c = j + 1; c < k; ++c) {
      auto cc = a_.col(c).subspan(j);
      const double s = tau_[j] * dot(cj, cc);
      axpy(-s, cj, cc);
    }
    rdiag_[j] = alpha;
  }
}

std::size_t HouseholderQr::rank(double tol) const {
  double mx = 0.0;
  for (double d : rdiag_) mx = std::max(mx, std::abs(d));
  if (mx == 0.0) return 0;
  return static_cast<std::size_t>(
      std::count_if(rdiag_.begin(), rdiag_.end(), [&](double d) { return std::abs(d) > tol * mx; }));
}

void HouseholderQr::apply_qt(std::span<double> v) const {
  if (v.size() != rows()) throw InvalidInputError("HouseholderQr: vector length mismatch");
  for (std::size_t j = 0; j < cols(); ++j) {
    if (tau_[j] == 0.0) continue;
    auto vj = a_.col(j).subspan(j);
    auto tail = v.subspan(j);
    axpy(-tau_[j] * dot(vj, tail), vj, tail);
  }
}

void HouseholderQr::apply_q(std::span<double> v) const {
  if (v.size() != rows()) throw InvalidInputError("HouseholderQr: vector length mismatch");
  for (std::size_t jj = cols(); jj-- > 0;) {
    if (tau_[jj] == 0.0) continue;
    auto vj = a_.col(jj).subspan(jj);
    auto tail = v.subspan(jj);
    axpy(-tau_[jj] * dot(vj, tail), vj, tail);
  }
}

Vector HouseholderQr::solve_least_squares(std::span<const double> b) const {
  if (!full_column_rank()) throw RankDeficientError("least squares: design is rank deficient");
  Vector c(b.begin(), b.end());
  apply_qt(c);
  const std::size_t k = cols();
  Vector x(k, 0.0);
  for (std::size_t ii = k; ii-- > 0;) {
    double s = c[ii];
    for (std::size_t j = ii + 1; j < k; ++j) s -= a_(ii, j) * x[j];
    x[ii] = s / rdiag_[ii];
  }
  return x;
}

Vector HouseholderQr::solve_normal(std::span<const double> rhs) const {
  if (!full_column_rank()) throw RankDeficientError("normal equations: design is rank deficient");
  const std::size_t k = cols();
  if (rhs.size() != k) throw InvalidInputError("HouseholderQr: rhs length mismatch");
  Vector w(k);
  for (std::size_t i = 0; i < k; ++i) {
    double s = rhs[i];
    for (std::size_t j = 0; j < i; ++j) s -= a_(j, i) * w[j];
    w[i] = s / rdiag_[i];
  }
  Vector x(k);
  for (std::size_t ii = k; ii-- > 0;) {
    double s = w[ii];
    for (std::size_t j = ii + 1; j < k; ++j) s -= a_(ii, j) * x[j];
    x[ii] = s / rdiag_[ii];
  }
  return x;
}

Vector HouseholderQr::project_out(std::span<const double> v) const {
  Vector c(v.begin(), v.end());
  apply_qt(c);
  std::fill_n(c.begin(), cols(), 0.0);
  apply_q(c);
  return c;
}

// ---------------------------------------------------------------------------
// Cholesky

Cholesky::Cholesky(const DenseMatrix& a) : l_(a.rows(), a.cols()) {
  if (a.rows() != a.cols()) throw InvalidInputError("Cholesky: matrix not square");
  if (!a.all_finite()) throw InvalidInputError("Cholesky: non-finite input");
  const std::size_t n = a.rows();
  double scale = 0.0;
  for (std::size_t i = 0; i < n; ++i) scale = std::max(scale, std::abs(a(i, i)));
  if (scale == 0.0) scale = 1.0;
  for (std::size_t j = 0; j < n; ++j) {
    double d = a(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= l_(j, k) * l_(j, k);
    if (!(d > kPivotTol * scale)) {
      throw SingularMatrixError("Cholesky: pivot " + std::to_string(d) + " at column " +
                                std::to_string(j) + " (matrix not numerically SPD)");
    }
    const double ljj = std::sqrt(d);
    l_(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l_(i, k) * l_(j, k);
      l_(i, j) = s / ljj;
    }
  }
}

Vector Cholesky::solve(std::span<const double> b) const {
  const std::size_t n = dim();
  if (b.size() != n) throw InvalidInputError("Cholesky::solve: length mismatch");
  Vector x(b.begin(), b.end());
  for (std::size_t i = 0; i < n; ++i) {
    double s = x[i];
    for (std::size_t k = 0; k < i; ++k) s -= l_(i, k) * x[k];
    x[i] = s / l_(i, i);
  }
  for (std::size_t ii = n; ii-- > 0;) {
    double s = x[ii];
    for (std::size_t k = ii + 1; k < n; ++k) s -= l_(k, ii) * x[k];
    x[ii] = s / l_(ii, ii);
  }
  return x;
}

DenseMatrix Cholesky::inverse() const {
  const std::size_t n = dim();
  DenseMatrix inv(n, n);
  Vector e(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    e[j] = 1.0;
    const Vector c = solve(e);
    std::copy(c.begin(), c.end(), inv.col(j).begin());
    e[j] = 0.0;
  }
  return inv;
}

Vector spd_solve(const DenseMatrix& a, std::span<const double> b) { return Cholesky(a).solve(b); }

std::optional<Vector> lu_solve(DenseMatrix a, Vector b, double tol) {
  const std::size_t n = a.rows();
  if (a.cols() != n || b.size() != n) throw InvalidInputError("lu_solve: shape mismatch");
  const double scale = std::max(max_abs(a), std::numeric_limits<double>::min());
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::abs(a(i, k)) > std::abs(a(piv, k))) piv = i;
    if (std::abs(a(piv, k)) <= tol * scale) return std::nullopt;
    if (piv != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a(k, j), a(piv, j));
      std::swap(b[k], b[piv]);
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      const double f = a(i, k) / a(k, k);
      if (f == 0.0) continue;
      for (std::size_t j = k; j < n; ++j) a(i, j) -= f * a(k, j);
      b[i] -= f * b[k];
    }
  }
  Vector x(n);
  for (std::size_t ii = n; ii-- > 0;) {
    double s = b[ii];
    for (std::size_t j = ii + 1; j < n; ++j) s -= a(ii, j) * x[j];
    x[ii] = s / a(ii, ii);
  }
  return x;
}

// ---------------------------------------------------------------------------
// Symmetric eigen-extremes

namespace {

EigenExtremes jacobi_extremes(DenseMatrix a) {
  const std::size_t n = a.rows();
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t i = 0; i < n; ++i) {
        total += a(i, j) * a(i, j);
        if (i != j) off += a(i, j) * a(i, j);
      }
    if (off <= 1e-30 * total || off == 0.0) break;
    for (std::size_t p = 0; p + 1 < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
      }
  }
  double lo = a(0, 0);
  double hi = a(0, 0);
  for (std::size_t i = 1; i < n; ++i) {
    lo = std::min(lo, a(i, i));
    hi = std::max(hi, a(i, i));
  }
  return {lo, hi};
}

// Reduces a symmetric matrix to tridiagonal form (diag d, off-diag e[1..n-1]).
void tridiagonalize(DenseMatrix a, Vector& d, Vector& e) {
  const std::size_t n = a.rows();
  d.assign(n, 0.0);
  e.assign(n, 0.0);
  Vector v(n);
  Vector w(n);
  for (std::size_t k = 0; k + 2 < n; ++k) {
    // reflector zeroing a(k+2:, k)
    double nrm = 0.0;
    for (std::size_t i = k + 1; i < n; ++i) nrm += a(i, k) * a(i, k);
    nrm = std::sqrt(nrm);
    if (nrm == 0.0) continue;
    const double alpha = a(k + 1, k) > 0 ? -nrm : nrm;
    std::fill(v.begin(), v.end(), 0.0);
    for (std::size_t i = k + 1; i < n; ++i) v[i] = a(i, k);
    v[k + 1] -= alpha;
    double vv = 0.0;
    for (std::size_t i = k + 1; i < n; ++i) vv += v[i] * v[i];
    if (vv == 0.0) continue;
    const double beta = 2.0 / vv;
    // A <- H A H with H = I - beta v v^T, restricted to the trailing block
    for (std::size_t i = k; i < n; ++i) {
      double s = 0.0;
      for (std::size_t j = k + 1; j < n; ++j) s += a(i, j) * v[j];
      w[i] = beta * s;
    }
    double vw = 0.0;
    for (std::size_t i = k + 1; i < n; ++i) vw += v[i] * w[i];
    const double kcoef = 0.5 * beta * vw;
    for (std::size_t i = k + 1; i < n; ++i) w[i] -= kcoef * v[i];
    for (std::size_t j = k + 1; j < n; ++j)
      for (std::size_t i = k + 1; i < n; ++i) a(i, j) -= v[i] * w[j] + w[i] * v[j];
    a(k + 1, k) = alpha;
    a(k, k + 1) = alpha;
    for (std::size_t i = k + 2; i < n; ++i) {
      a(i, k) = 0.0;
      a(k, i) = 0.0;
    }
  }
  for (std::size_t i = 0; i < n; ++i) d[i] = a(i, i);
  for (std::size_t i = 1; i < n; ++i) e[i] = a(i, i - 1);
}

// Number of eigenvalues of the tridiagonal matrix strictly less than x.
std::size_t sturm_count(const Vector& d, const Vector& e, double x) {
  std::size_t count = 0;
  double q = 1.0;
  const double tiny = std::numeric_limits<double>::min() * 1e4;
  for (std::size_t i = 0; i < d.size(); ++i) {
    q = d[i] - x - (i > 0 ? e[i] * e[i] / q : 0.0);
    if (q == 0.0) q = -tiny;
    if (q < 0) ++count;
  }
  return count;
}

double bisect_eigenvalue(const Vector& d, const Vector& e, std::size_t k, double lo, double hi) {
  // k-th smallest eigenvalue (0-based)
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (sturm_count(d, e, mid) > k)
      hi = mid;
    else
      lo = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

EigenExtremes sym_eig_extremes(const DenseMatrix& a) {
  const std::size_t n = a.rows();
  if (n == 0 || a.cols() != n) throw InvalidInputError("sym_eig_extremes: need non-empty square matrix");
  if (!a.all_finite()) throw InvalidInputError("sym_eig_extremes: non-finite input");
  if (!is_symmetric(a, 1e-10)) throw InvalidInputError("sym_eig_extremes: matrix is not symmetric");
  if (n == 1) return {a(0, 0), a(0, 0)};
  if (n <= 64) return jacobi_extremes(a);

  Vector d;
  Vector e;
  tridiagonalize(a, d, e);
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = (i > 0 ? std::abs(e[i]) : 0.0) + (i + 1 < n ? std::abs(e[i + 1]) : 0.0);
    lo = std::min(lo, d[i] - r);
    hi = std::max(hi, d[i] + r);
  }
  const double pad = 1e-12 * std::max({1.0, std::abs(lo), std::abs(hi)});
  lo -= pad;
  hi += pad;
  return {bisect_eigenvalue(d, e, 0, lo, hi), bisect_eigenvalue(d, e, n - 1, lo, hi)};
}

double power_iteration_max_eig(const DenseMatrix& a, int iters) {
  const std::size_t n = a.rows();
  if (n == 0) return 0.0;
  Vector v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = 1.0 + 0.1 * std::sin(static_cast<double>(i) + 1.0);
  double lambda = 0.0;
  for (int it = 0; it < iters; ++it) {
    const double nv = norm2(v);
    if (nv == 0.0) return 0.0;
    for (double& x : v) x /= nv;
    Vector av = matvec(a, v);
    const double next = dot(v, av);
    v = std::move(av);
    if (it > 5 && std::abs(next - lambda) <= 1e-12 * std::abs(next)) {
      lambda = next;
      break;
    }
    lambda = next;
  }
  return lambda;
}

}  // namespace nnr
