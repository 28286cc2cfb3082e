#pragma once

#include <cstdint>
#include <optional>
#include <span>

#include "nnr/dense.hpp"

namespace nnr {

struct GroundTruth {
  Vector beta_star;  // length p, non-negative
  IndexSet support;  // {j : beta_star_j > 0}, ascending
  double sigma = 0.0;
  std::optional<Vector> epsilon;  // noise draw when known
  double approx_error = 0.0;      // E* (zero when the model is exactly sparse)
};

/// y = X beta* + eps with columns scaled to |X_j|^2 = n.
struct RegressionInstance {
  DenseMatrix X;
  Vector y;
  std::optional<GroundTruth> truth;

  std::size_t n() const { return X.rows(); }
  std::size_t p() const { return X.cols(); }
};

/// True when every column has squared norm n to relative `tol`.
bool columns_normalized(const DenseMatrix& X, double tol = 1e-8);
/// Rescales columns in place to |X_j|^2 = n. Returns the scale c_j = |X_j| / sqrt(n)
/// each column was divided by. Zero columns throw InvalidInputError.
Vector normalize_columns(DenseMatrix& X);

/// Validating constructor: shapes, finiteness, column normalization, truth consistency.
RegressionInstance make_instance(DenseMatrix X, Vector y, std::optional<GroundTruth> truth = std::nullopt);

/// Support of a non-negative vector (entries > 0).
IndexSet support_of(std::span<const double> beta, double thresh = 0.0);

struct NnlsOptions {
  double tol = 1e-10;
  std::size_t max_iter = 0;  // 0 -> 10 (n + p)
  std::size_t refresh_every = 50;
};

struct NnlsSolution {
  Vector beta;
  IndexSet active_set;
  double objective = 0.0;  // (1/n)|y - X beta|^2
  double kkt_max_violation = 0.0;
  std::size_t iterations = 0;
  Vector objective_trace;  // after each outer iteration, starting at beta = 0
};

/// Lawson-Hanson active-set NNLS: min_{beta >= 0} (1/n)|y - X beta|^2.
NnlsSolution nnls_solve(const DenseMatrix& X, std::span<const double> y, const NnlsOptions& opts = {});
inline NnlsSolution nnls_solve(const RegressionInstance& inst, const NnlsOptions& opts = {}) {
  return nnls_solve(inst.X, inst.y, opts);
}

struct KktReport {
  bool is_optimal = false;
  double max_violation = 0.0;
  std::size_t worst_index = 0;
  bool worst_in_active = false;
  IndexSet active_set;
};

/// Optimality conditions with gradient g_j = (1/n) X_j^T (y - X beta):
/// |g_j| <= tol on the active set, g_j <= tol off it.
KktReport kkt_check(const DenseMatrix& X, std::span<const double> y, std::span<const double> beta,
                    double tol);

struct DecoupledProblems {
  IndexSet S;
  IndexSet Sc;
  DenseMatrix Z;  // Pi_S^perp X_{S^c}
  Vector xi;      // Pi_S^perp y
  Vector beta_p1;
  Vector beta_p2;
  bool p2_all_positive = false;
  Vector composite;  // beta_S = beta_p2, beta_{S^c} = beta_p1
};

/// Splits the NNLS problem into the off-support problem on (xi, Z) and the
/// on-support problem with the off-support fit removed.
DecoupledProblems decouple(const DenseMatrix& X, std::span<const double> y, std::span<const std::size_t> S,
                           const NnlsOptions& opts = {});

/// Every min(n, p)-subset of columns has full rank. Exhaustive when there are
/// at most 5000 subsets, otherwise `trials` random subsets.
bool glp_check(const DenseMatrix& X, std::size_t trials = 200, std::uint64_t seed = 0x9d1f5eedULL);

struct UniquenessReport {
  bool glp_sampled = false;
  bool residual_positive = false;
  bool active_card_ok = false;
  bool unique_certified = false;
};

UniquenessReport uniqueness_report(const DenseMatrix& X, const NnlsSolution& sol, std::size_t trials = 200,
                                   std::uint64_t seed = 0x9d1f5eedULL);

struct SelfRegDecomposition {
  Vector w;
  Vector h;  // X^T w / sqrt(n)
  Vector d;  // tau / h_j
  DenseMatrix Xtilde;  // (I - w w^T) X diag(d)
  double tau = 0.0;
  double identity_max_residual = 0.0;  // worst relative mismatch over the random checks
};

/// Requires h >= tau componentwise and |w| = 1.
SelfRegDecomposition self_reg_decompose(const DenseMatrix& X, std::span<const double> w, double tau,
                                        std::uint64_t seed = 1);

}  // namespace nnr
