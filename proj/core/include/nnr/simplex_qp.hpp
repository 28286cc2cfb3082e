#pragma once

#include <array>
#include <span>
#include <string>

#include "nnr/dense.hpp"

namespace nnr {

/// Euclidean projection onto {x >= 0, sum x = 1} (sort-based).
Vector project_simplex(std::span<const double> v);

struct SimplexQpOptions {
  double tol = 1e-9;
  std::size_t max_iter = 50000;
  std::size_t polish_every = 200;
};

struct SimplexQpResult {
  double value = 0.0;  // lambda^T Q lambda
  Vector lambda;
  double kkt_gap = 0.0;  // sum_j lambda_j (Q lambda)_j - min_j (Q lambda)_j
  std::size_t iterations = 0;
  bool polished = false;
};

/// min lambda^T Q lambda over the standard simplex, Q symmetric PSD.
/// Accelerated projected gradient with adaptive restart; every `polish_every`
/// iterations the current face is solved exactly and accepted when it passes
/// the simplex KKT test. Throws NonConvergenceError at the iteration cap.
SimplexQpResult simplex_min_quadratic(const DenseMatrix& Q, const SimplexQpOptions& opts = {});

enum class MarginKind { tau0, tauS };

struct MarginCertificate {
  double value = 0.0;  // tau^2
  Vector lambda;
  Vector w;  // unit separating direction, or 0 when value == 0
  MarginKind kind = MarginKind::tau0;
  std::string conditioning_note;
  /// tauS only: values from the projection, Schur-complement and joint forms.
  std::array<double, 3> form_values{};
  double form_spread = 0.0;
};

/// Values below this are reported as exactly zero.
inline constexpr double kZeroMargin = 1e-12;

MarginCertificate tau0(const DenseMatrix& X);

enum class TauSRoute { projection, schur, joint };

/// Reduced Gram (1/n) Z^T Z with Z = Pi_S^perp X_{S^c}, built by one of three
/// independent routes. Throws RankDeficientError if X_S is rank deficient.
DenseMatrix tau_s_gram(const DenseMatrix& X, std::span<const std::size_t> S, TauSRoute route);

struct TauSOptions {
  bool cross_check = true;
};

MarginCertificate tauS(const DenseMatrix& X, std::span<const std::size_t> S, const TauSOptions& opts = {});

}  // namespace nnr
