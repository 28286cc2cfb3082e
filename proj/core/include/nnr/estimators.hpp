#pragma once

#include <optional>
#include <span>

#include "nnr/dense.hpp"
#include "nnr/nnls.hpp"

namespace nnr {

/// Column indices ordered by value descending, then index ascending.
IndexSet rank_order(std::span<const double> beta);

struct ThresholdedEstimate {
  NnlsSolution base;
  IndexSet order;  // order[k] = column with rank k + 1
  std::size_t sHat = 0;
  std::optional<double> threshold;
  IndexSet support;  // ascending
  Vector refit;      // length p, zero off the support
  Vector deltas;
  double sigmaHat = 0.0;
};

/// Keep coefficients strictly above t; refit is the thresholded vector.
ThresholdedEstimate threshold_hard(const NnlsSolution& solution, double t);

struct SHatResult {
  std::size_t sHat = 0;
  Vector deltas;  // delta(k), k = 0..p-1
  double level = 0.0;  // (1 + M) sigmaHat sqrt(2 log p)
};

/// Largest k whose incremental projection energy |<u_k, y>| clears the level,
/// plus one; 0 when none does. Values at or below 1e-9 |y| count as zero.
SHatResult select_s_hat(const DenseMatrix& X, std::span<const double> y, std::span<const std::size_t> order,
                        double sigmaHat, double M = 1.0);

/// sqrt((1/n)|y - X beta|^2)
double sigma_naive(const DenseMatrix& X, std::span<const double> y, std::span<const double> beta);

/// NNLS, rank, choose model size, refit NNLS on the selected columns.
ThresholdedEstimate recover_support(const DenseMatrix& X, std::span<const double> y,
                                    std::optional<double> sigma = std::nullopt, double M = 1.0,
                                    const NnlsOptions& opts = {});

/// Worst violation of the non-negative lasso optimality conditions at lambda,
/// with c_j = (2/n) X_j^T (y - X beta): c_j = lambda on the support, c_j <= lambda off it.
double nn_lasso_kkt(const DenseMatrix& X, std::span<const double> y, std::span<const double> beta, double lambda);

struct NnLassoOptions {
  double tol = 1e-10;
  std::size_t max_sweeps = 200000;
};

/// min_{beta >= 0} (1/n)|y - X beta|^2 + lambda 1^T beta by cyclic coordinate descent.
Vector nn_lasso(const DenseMatrix& X, std::span<const double> y, double lambda, const NnLassoOptions& opts = {},
                std::optional<Vector> warm = std::nullopt);

struct PathBreakpoint {
  double lambda;
  Vector beta;
  IndexSet active;  // active set on the segment just below lambda
};

struct LassoPath {
  std::vector<PathBreakpoint> breakpoints;  // lambda strictly decreasing
  double lambda0 = 0.0;
  std::optional<double> lambdaHatEmp;
};

/// Exact homotopy from lambda_max down to lambdaMin.
LassoPath nn_lasso_path(const DenseMatrix& X, std::span<const double> y, double lambdaMin,
                        std::optional<double> sigma = std::nullopt,
                        std::optional<std::span<const double>> epsilon = std::nullopt);

/// Linear interpolation on the path; zero above the first breakpoint.
Vector path_at(const LassoPath& path, double lambda);

struct OmpResult {
  IndexSet support;  // selection order
  Vector beta;
  bool early_stop = false;
};

OmpResult omp(const DenseMatrix& X, std::span<const double> y, std::size_t steps);

/// (Sigma + gamma I)^{-1} X^T y / n, gamma > 0.
Vector ridge(const DenseMatrix& X, std::span<const double> y, double gamma);

}  // namespace nnr
