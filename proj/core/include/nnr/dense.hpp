#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "nnr/error.hpp"

namespace nnr {

using Vector = std::vector<double>;
using IndexSet = std::vector<std::size_t>;

/// Dense column-major matrix of doubles.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> col_major);

  static DenseMatrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[j * rows_ + i]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[j * rows_ + i]; }

  std::span<double> col(std::size_t j) { return {data_.data() + j * rows_, rows_}; }
  std::span<const double> col(std::size_t j) const { return {data_.data() + j * rows_, rows_}; }

  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  bool all_finite() const;
  DenseMatrix transpose() const;
  DenseMatrix select_columns(std::span<const std::size_t> idx) const;
  DenseMatrix select_rows(std::span<const std::size_t> idx) const;
  /// Principal-style block A[rows, cols].
  DenseMatrix block(std::span<const std::size_t> row_idx, std::span<const std::size_t> col_idx) const;

  void append_column(std::span<const double> c);

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Vector kernels.
double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);
double norm1(std::span<const double> a);
double norm_inf(std::span<const double> a);
/// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);
bool all_finite(std::span<const double> v);

// Matrix kernels.
Vector matvec(const DenseMatrix& a, std::span<const double> x);
Vector matvec_transposed(const DenseMatrix& a, std::span<const double> x);
DenseMatrix multiply(const DenseMatrix& a, const DenseMatrix& b);
/// scale * A^T A
DenseMatrix gram(const DenseMatrix& a, double scale = 1.0);
double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b);
double max_abs(const DenseMatrix& a);
bool is_symmetric(const DenseMatrix& a, double tol);

/// Complement of `subset` in {0, ..., p-1}; `subset` need not be sorted.
IndexSet complement(std::span<const std::size_t> subset, std::size_t p);

/// Thin Q of a growing column set, built one column at a time by classical
/// Gram-Schmidt with one reorthogonalization pass.
class IncrementalQr {
 public:
  explicit IncrementalQr(std::size_t n) : n_(n) {}

  /// Appends a column. Returns the new unit direction, or nullopt when the
  /// column lies in the current span (residual <= 1e-10 * |column|).
  std::optional<Vector> append(std::span<const double> column);

  /// v - Q (Q^T v).
  Vector project_residual(std::span<const double> v) const;
  /// Q^T v.
  Vector coefficients(std::span<const double> v) const;

  std::size_t dim() const { return n_; }
  std::size_t basis_dim() const { return basis_dim_; }
  std::size_t appended_count() const { return appended_; }
  std::span<const double> direction(std::size_t k) const { return {q_.data() + k * n_, n_}; }
  DenseMatrix basis() const;

  static constexpr double kDependenceTol = 1e-10;

 private:
  std::size_t n_;
  std::size_t basis_dim_ = 0;
  std::size_t appended_ = 0;
  std::vector<double> q_;
};

/// Free-function form: appends and returns the new direction.
std::optional<Vector> qr_append(IncrementalQr& state, std::span<const double> column);
Vector project_residual(const IncrementalQr& basis, std::span<const double> v);

/// Householder QR of an m x k matrix, m >= k. Used where a factorization
/// independent of Gram-Schmidt is wanted (least squares, projections).
class HouseholderQr {
 public:
  explicit HouseholderQr(DenseMatrix a);

  std::size_t rows() const { return a_.rows(); }
  std::size_t cols() const { return a_.cols(); }

  /// Numerical rank: |R_jj| > tol * max_j |R_jj|.
  std::size_t rank(double tol = 1e-10) const;
  bool full_column_rank(double tol = 1e-10) const { return rank(tol) == cols(); }

  /// Applies Q^T in place to a length-m vector.
  void apply_qt(std::span<double> v) const;
  /// Applies Q in place to a length-m vector.
  void apply_q(std::span<double> v) const;

  /// argmin |A x - b|_2. Throws RankDeficientError if A is rank deficient.
  Vector solve_least_squares(std::span<const double> b) const;
  /// Component of v orthogonal to range(A).
  Vector project_out(std::span<const double> v) const;
  /// Solves (A^T A) x = rhs through R^T R x = rhs. Throws RankDeficientError.
  Vector solve_normal(std::span<const double> rhs) const;

 private:
  DenseMatrix a_;  // R in the upper triangle, reflectors below
  Vector tau_;
  Vector rdiag_;
};

/// Cholesky factor L of an SPD matrix, A = L L^T.
class Cholesky {
 public:
  /// Throws SingularMatrixError when a pivot falls to <= 1e-12 (relative to
  /// the largest diagonal entry).
  explicit Cholesky(const DenseMatrix& a);

  std::size_t dim() const { return l_.rows(); }
  Vector solve(std::span<const double> b) const;
  DenseMatrix inverse() const;
  const DenseMatrix& lower() const { return l_; }

  static constexpr double kPivotTol = 1e-12;

 private:
  DenseMatrix l_;
};

Vector spd_solve(const DenseMatrix& a, std::span<const double> b);

/// General square solve with partial pivoting; nullopt when singular to `tol`.
std::optional<Vector> lu_solve(DenseMatrix a, Vector b, double tol = 1e-14);

struct EigenExtremes {
  double lambda_min;
  double lambda_max;
};

/// Smallest and largest eigenvalue of a symmetric matrix. Cyclic Jacobi up
/// to dimension 64, Householder tridiagonalization plus Sturm bisection above.
EigenExtremes sym_eig_extremes(const DenseMatrix& a);

/// Largest eigenvalue estimate of a symmetric PSD matrix by power iteration.
double power_iteration_max_eig(const DenseMatrix& a, int iters = 200);

}  // namespace nnr
