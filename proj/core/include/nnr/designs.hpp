#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nnr/dense.hpp"
#include "nnr/nnls.hpp"
#include "nnr/rng.hpp"

namespace nnr {

enum class DesignKind {
  orthonormal,
  powerDecay,
  gaussianIid,
  equiCorrExact,
  ensPlus,
  localizedGaussian,
  localizedExp,
  groupTesting,
  appendixI,
  explicitGram,
};

enum class Ensemble { E1, E2, E3, E4 };

std::string to_string(DesignKind k);
DesignKind parse_design_kind(const std::string& s);
std::string to_string(Ensemble e);
Ensemble parse_ensemble(const std::string& s);

/// Entry moments of an Ens+ distribution; rhoPop = mu^2 / mu2.
struct EnsPlusSpec {
  double mu = 0.0;
  double mu2 = 0.0;
  double rhoPop = 0.0;
};

/// E1: a U[0, sqrt(3/a)] + (1-a) delta_0.  E2: Bernoulli(pi) / sqrt(pi).
/// E3: |Z|, Z ~ a N(0,1) + (1-a) delta_0.   E4: a Poisson(3 / sqrt(12 a)) + (1-a) delta_0.
EnsPlusSpec ens_plus_moments(Ensemble e, double param);
double draw_ens_plus(Ensemble e, double param, Rng& rng);

struct DesignSpec {
  DesignKind kind = DesignKind::gaussianIid;
  std::size_t n = 0;
  std::size_t p = 0;
  std::uint64_t seed = 0;
  bool normalize = true;
  double rho = 0.0;                  // powerDecay, equiCorrExact
  Ensemble ensemble = Ensemble::E1;  // ensPlus
  double param = 1.0;                // ensPlus a or pi; groupTesting pi
  std::size_t s = 0;                 // appendixI, localizedExp
  double width = 0.0;                // localizedGaussian kappa (0 -> 2/n)
  bool rotate = false;               // orthonormal: random rotation of sqrt(n) [I; 0]
  std::optional<DenseMatrix> gram = std::nullopt;  // explicitGram
};

/// Deterministic in (spec, seed).
DenseMatrix generate(const DesignSpec& spec);

/// X = sqrt(n) [L^T; 0] with Sigma = L L^T, so X^T X / n = Sigma exactly. Needs n >= p.
DenseMatrix design_from_gram(const DenseMatrix& sigma, std::size_t n);

DenseMatrix equicorrelation_gram(std::size_t p, double rho);
DenseMatrix power_decay_gram(std::size_t p, double rho);
/// Block Gram with Sigma_SS = [1, -c 1^T; -c 1, I], c = 1/sqrt(2(s-1)), identity elsewhere.
DenseMatrix appendix_i_gram(std::size_t p, std::size_t s);

/// Bernoulli(pi) 0/1 membership matrix, normalized; zero columns are redrawn.
DenseMatrix group_testing_design(std::size_t n, std::size_t p, double pi, std::uint64_t seed);
/// The 5 x 10 pooling matrix of the group-testing illustration (unnormalized 0/1).
DenseMatrix cs_example_matrix();

/// sigma_0 / K where sigma_0 is the smallest entry over the diagonal blocks
/// (0 when that is not positive) and K the number of blocks.
double block_lower_bound(const DenseMatrix& sigma, const std::vector<IndexSet>& blocks);

/// Design I: U[0,1] entries (population rho = 3/4), normalized columns,
/// beta*_j = 6 b (1-rho)^{-1/2} sqrt(2 log p / n) (1 + U_j) on S = {0..s-1}.
RegressionInstance design_one_instance(std::size_t n, std::size_t p, std::size_t s, double b, double sigma,
                                       Rng& rng);

struct DesignTwoLayout {
  Vector centers;  // length p; the first s belong to S
  double h = 0.0;
  double delta = 0.0;
  double m_min = 0.0;
  double m_max = 0.0;
};

DesignTwoLayout design_two_layout(std::size_t n, std::size_t p, std::size_t s, Rng& rng);
/// X_ij = exp(-|u_i - m_j| / h) / c_j with u_i = i/n.
DenseMatrix design_two_matrix(std::size_t n, const DesignTwoLayout& layout);
/// Design II with beta_min = 4 sqrt(6 log 10 / n) and beta*_j = b beta_min (1 + U_j).
RegressionInstance design_two_instance(std::size_t n, std::size_t p, std::size_t s, double b, double sigma,
                                       Rng& rng);

struct DeconvSpec {
  std::size_t n = 100;
  std::size_t p = 200;
  double kappa = 0.0;  // kernel exp(-(u - m)^2 / kappa); 0 -> 2/n
  std::size_t spikes = 5;
  double amp_lo = 0.2;
  double amp_hi = 0.7;
  std::size_t min_separation = 10;  // in candidate-grid steps
};

struct DeconvProblem {
  DeconvSpec spec;
  DenseMatrix X;  // normalized
  Vector scale;   // c_j
  Vector u;
  Vector centers;
  IndexSet spike_index;  // ascending
  Vector amplitude;      // per spike
  Vector beta_star;      // amplitude * c_j at spike columns
  Vector f;              // X beta*
};

DeconvProblem make_deconv_problem(const DeconvSpec& spec, std::uint64_t seed);
RegressionInstance deconv_instance(const DeconvProblem& prob, double sigma, Rng& rng);

/// Standard normal quantile (rational approximation plus one Halley step).
double normal_quantile(double prob);

}  // namespace nnr
