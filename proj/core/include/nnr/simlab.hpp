#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nnr/designs.hpp"
#include "nnr/report.hpp"
#include "nnr/rng.hpp"

namespace nnr {

struct RunOptions {
  std::uint64_t seed = 20240601;
  std::size_t threads = 1;
};

/// Runs body(i) for i in [0, count) on up to `threads` workers. Results are
/// returned in index order, so output does not depend on the thread count.
template <class T>
std::vector<T> parallel_indexed(std::size_t count, std::size_t threads, const std::function<T(std::size_t)>& body);

struct Prop2Sample {
  std::size_t s = 0;
  double rho = 0.0;
  std::size_t pMinusS = 0;
  Vector z;            // drawn vector, length p - s
  Vector orderStats;   // z sorted decreasingly
  Vector zetas;        // zeta_j, j = 1..p-s-1
  double theta = 0.0;  // rho / (1 + (s-1) rho); rho / (1 - rho) for s = 0
  double gamma = 0.0;  // rho (1-rho) / (1 + (s-1) rho); rho for s = 0
  std::size_t cardF = 0;
};

Prop2Sample prop2_sample(std::size_t s, double rho, std::size_t p, Rng& rng);

struct Prop2Band {
  double q01 = 0.0;
  double q99 = 0.0;
  double mean = 0.0;
  double var = 0.0;
  std::size_t draws = 0;
};

Prop2Band prop2_band(std::size_t s, double rho, std::size_t p, std::size_t draws, Rng& rng);

struct Prop2Config {
  std::size_t n = 200;
  std::size_t p = 200;
  std::size_t s = 10;
  double rho = 0.5;
  double sigma = 1.0;
  double M = 1.0;
  std::size_t reps = 50;
  std::size_t sampler_draws = 10000;
  /// Overrides the on-support level; unset uses 3 (1+M) sigma sqrt(2 log p / n) / (1 - rho).
  std::optional<double> beta_level = std::nullopt;
};

/// Columns: rep, cardF, betaS_positive, in_band.
ExperimentReport prop2_empirical(const Prop2Config& cfg, const RunOptions& run);

struct ContourConfig {
  std::size_t n = 120;
  std::vector<double> p_ratios{1.5, 3.0};
  std::vector<double> s_ratios{0.05, 0.2};
  Ensemble ensemble = Ensemble::E1;
  double param = 1.0;
  std::size_t reps = 10;
};

/// Columns: p_ratio, s_ratio, rep, tauS_sq, log2_tauS_sq.
ExperimentReport tau_contour_study(const ContourConfig& cfg, const RunOptions& run);

struct DeconvConfig {
  DeconvSpec spec;
  double sigma = 0.09;
  std::size_t reps = 20;
  std::size_t folds = 10;
  std::size_t neighborhood = 3;  // grid steps for the mass-concentration summary
};

/// Columns: rep, mse_nnls, mse_nnlasso_l0, mse_nnlasso_cv, mse_ridge_cv, mse_oracle,
/// lambda_cv, gamma_cv, nnls_mass_near_spikes, nnls_active.
ExperimentReport deconv_experiment(const DeconvConfig& cfg, const RunOptions& run);

enum class RecoveryDesign { I, II };

struct PhaseCell {
  double p_ratio = 2.0;
  double s_ratio = 0.05;
  double b = 0.5;
};

struct PhaseConfig {
  RecoveryDesign design = RecoveryDesign::I;
  std::size_t n = 200;
  std::vector<PhaseCell> cells{{2.0, 0.05, 0.5}};
  std::size_t reps = 20;
  double sigma = 1.0;
  double M = 1.0;
};

/// Columns: p_ratio, s_ratio, b, rep, tnnls_star, tnnls, tnnl1, nnl1, omp,
/// linf_nnls, linf_nnl1, l2_nnls, l2_nnl1, shat, refit_linf_le_raw, iota.
ExperimentReport recovery_phase_experiment(const PhaseConfig& cfg, const RunOptions& run);

/// Per-replication success indicators used by the phase experiment.
struct RecoveryOutcome {
  bool tnnls_star = false;
  bool tnnls = false;
  bool tnnl1 = false;
  bool nnl1 = false;
  bool omp = false;
  double linf_nnls = 0.0;
  double linf_nnl1 = 0.0;
  double l2_nnls = 0.0;
  double l2_nnl1 = 0.0;
  std::size_t shat = 0;
  double refit_linf_le_raw = 0.0;  // 1, 0, or -1 when the estimated support differs from S
  double iota = 0.0;               // empirical non-negative irrepresentable constant of S
};

RecoveryOutcome evaluate_recovery(const RegressionInstance& inst, double M = 1.0);

/// min_S beta - max_{S^c} beta (positive means some threshold separates S).
double separation_margin(std::span<const double> beta, std::span<const std::size_t> S);

}  // namespace nnr

#include "nnr/detail/parallel.hpp"
