#pragma once

#include <cstdint>
#include <optional>
#include <span>

#include "nnr/dense.hpp"

namespace nnr {

struct DiagnosticsReport {
  std::size_t n = 0, p = 0, s = 0;
  double sigma = 0.0;
  double M = 1.0;
  double tau0Sq = 0.0;
  double tauSSq = 0.0;
  double iota = 0.0;
  bool iotaAtLeastOne = false;  // lasso support bound undefined
  double K_S = 0.0;
  double phiMinS = 0.0;
  double phiMaxS = 0.0;
  double betaMinS = 0.0;  // 0 when no truth supplied
  double lambdaM = 0.0;
  double boundB = 0.0;
  double boundBtilde = 0.0;
  bool thm4ConditionHolds = false;
  double thm6Lambda = 0.0;
  double thm6BoundB = 0.0;
  double slowRateBound = 0.0;
  double sigmaSSInvOneInf = 0.0;  // |Sigma_SS^{-1} 1|_inf
};

/// (1 + M) sigma sqrt(2 log p / n)
double lambda_M(double sigma, double M, std::size_t n, std::size_t p);

/// Max row-absolute-sum of Sigma_SS^{-1}.
double k_constant(const DenseMatrix& sigma_ss);

/// max_{j in S^c} Sigma_{jS} Sigma_SS^{-1} 1; 0 when S^c is empty.
double iota(const DenseMatrix& X, std::span<const std::size_t> S);

/// 32 (1+M)^2 log p / (tau^2 n) <= 1 - s/n, with E[eps^2] = sigma^2.
bool thm4_condition(double M, std::size_t n, std::size_t p, std::size_t s, double tauSq);

/// E* + ((6|b*|_1 + 8 sqrt(E*)) / tau^2) lambda_M + 16 (1+M)^2 sigma^2 log p / (tau^2 n).
double slow_rate_bound(double bstarL1, double Estar, double tauSq, double sigma, double M, std::size_t n,
                       std::size_t p);

DiagnosticsReport constants_for_support(const DenseMatrix& X, std::span<const std::size_t> S,
                                        std::optional<Vector> beta_star, double sigma, double M = 1.0);

struct ConeResult {
  bool in_cone = false;
  double ratio = 0.0;
};

/// ratio = |delta_{S^c}|_1 / max(|delta_S|_1, 1e-300).
ConeResult cone_membership(std::span<const double> delta, std::span<const std::size_t> S, double c0);

struct ReEstimate {
  double alpha = 1.0;
  std::size_t s = 0;
  double phiEstimate = 0.0;
  IndexSet witnessJ;
  Vector witnessDelta;
  std::size_t restarts = 0;
  bool exhaustive = false;
};

/// Upper estimate of the restricted eigenvalue phi(alpha, s) of a Gram matrix.
ReEstimate re_estimate(const DenseMatrix& sigma, double alpha, std::size_t s, std::size_t restarts = 64,
                       std::uint64_t seed = 0x4e5eedULL);

/// delta^T Sigma delta / |delta_J|_2^2
double re_ratio(const DenseMatrix& sigma, std::span<const double> delta, std::span<const std::size_t> J);

}  // namespace nnr
