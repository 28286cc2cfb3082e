#include "nnr/designs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace nnr {

std::string to_string(DesignKind k) {
  switch (k) {
    case DesignKind::orthonormal: return "orthonormal";
    case DesignKind::powerDecay: return "power-decay";
    case DesignKind::gaussianIid: return "gaussian";
    case DesignKind::equiCorrExact: return "equicorr";
    case DesignKind::ensPlus: return "ens-plus";
    case DesignKind::localizedGaussian: return "localized-gaussian";
    case DesignKind::localizedExp: return "localized-exp";
    case DesignKind::groupTesting: return "group-testing";
    case DesignKind::appendixI: return "appendix-i";
    case DesignKind::explicitGram: return "explicit-gram";
  }
  return "unknown";
}

DesignKind parse_design_kind(const std::string& s) {
  for (int k = 0; k <= static_cast<int>(DesignKind::explicitGram); ++k) {
    const auto kind = static_cast<DesignKind>(k);
    if (to_string(kind) == s) return kind;
  }
  throw InvalidInputError("unknown design kind '" + s + "'");
}

std::string to_string(Ensemble e) {
  switch (e) {
    case Ensemble::E1: return "E1";
    case Ensemble::E2: return "E2";
    case Ensemble::E3: return "E3";
    case Ensemble::E4: return "E4";
  }
  return "E?";
}

Ensemble parse_ensemble(const std::string& s) {
  if (s == "E1" || s == "e1") return Ensemble::E1;
  if (s == "E2" || s == "e2") return Ensemble::E2;
  if (s == "E3" || s == "e3") return Ensemble::E3;
  if (s == "E4" || s == "e4") return Ensemble::E4;
  throw InvalidInputError("unknown ensemble '" + s + "'");
}

double normal_quantile(double prob) {
  if (!(prob > 0.0 && prob < 1.0)) throw InvalidInputError("normal_quantile: probability must be in (0, 1)");
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                 1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                 6.680131188771972e+01,  -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                 -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                 3.754408661907416e+00};
  constexpr double plow = 0.02425;
  double x;
  if (prob < plow) {
    const double q = std::sqrt(-2.0 * std::log(prob));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (prob <= 1.0 - plow) {
    const double q = prob - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - prob));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  // Halley refinement
  const double e = 0.5 * std::erfc(-x / std::numbers::sqrt2) - prob;
  const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
  return x - u / (1.0 + 0.5 * x * u);
}

EnsPlusSpec ens_plus_moments(Ensemble e, double param) {
  EnsPlusSpec m;
  const double a = param;
  switch (e) {
    case Ensemble::E1: {
      if (!(a > 0.0 && a <= 1.0)) throw InvalidInputError("E1: a must be in (0, 1]");
      const double top = std::sqrt(3.0 / a);
      m.mu = a * top / 2.0;
      m.mu2 = a * top * top / 3.0;
      break;
    }
    case Ensemble::E2: {
      if (!(a > 0.0 && a <= 1.0)) throw InvalidInputError("E2: pi must be in (0, 1]");
      m.mu = a / std::sqrt(a);
      m.mu2 = 1.0;
      break;
    }
    case Ensemble::E3: {
      if (!(a > 0.0 && a <= 1.0)) throw InvalidInputError("E3: a must be in (0, 1]");
      m.mu = a * std::sqrt(2.0 / std::numbers::pi);
      m.mu2 = a;
      break;
    }
    case Ensemble::E4: {
      if (!(a > 0.0 && a <= 1.0)) throw InvalidInputError("E4: a must be in (0, 1]");
      const double lam = 3.0 / std::sqrt(12.0 * a);
      m.mu = a * lam;
      m.mu2 = a * (lam + lam * lam);
      break;
    }
  }
  m.rhoPop = m.mu * m.mu / m.mu2;
  return m;
}

namespace {

std::size_t poisson_inversion(double lam, Rng& rng) {
  const double u = rng.uniform();
  double pk = std::exp(-lam);
  double cdf = pk;
  std::size_t k = 0;
  while (u >= cdf && k < 1000) {
    ++k;
    pk *= lam / static_cast<double>(k);
    cdf += pk;
  }
  return k;
}

}  // namespace

double draw_ens_plus(Ensemble e, double a, Rng& rng) {
  switch (e) {
    case Ensemble::E1:
      return rng.uniform() < a ? rng.uniform() * std::sqrt(3.0 / a) : 0.0;
    case Ensemble::E2:
      return rng.uniform() < a ? 1.0 / std::sqrt(a) : 0.0;
    case Ensemble::E3:
      return rng.uniform() < a ? normal_quantile(0.5 + 0.5 * rng.uniform_open() * (1.0 - 1e-16)) : 0.0;
    case Ensemble::E4:
      return rng.uniform() < a ? static_cast<double>(poisson_inversion(3.0 / std::sqrt(12.0 * a), rng)) : 0.0;
  }
  return 0.0;
}

DenseMatrix equicorrelation_gram(std::size_t p, double rho) {
  DenseMatrix g(p, p, rho);
  for (std::size_t j = 0; j < p; ++j) g(j, j) = 1.0;
  return g;
}

DenseMatrix power_decay_gram(std::size_t p, double rho) {
  DenseMatrix g(p, p);
  for (std::size_t j = 0; j < p; ++j)
    for (std::size_t k = 0; k < p; ++k)
      g(j, k) = std::pow(rho, std::abs(static_cast<double>(j) - static_cast<double>(k)));
  return g;
}

DenseMatrix appendix_i_gram(std::size_t p, std::size_t s) {
  if (s < 2 || s > p) throw InvalidInputError("appendix-i: need 2 <= s <= p");
  DenseMatrix g = DenseMatrix::identity(p);
  const double c = -1.0 / std::sqrt(2.0 * static_cast<double>(s - 1));
  for (std::size_t k = 1; k < s; ++k) {
    g(0, k) = c;
    g(k, 0) = c;
  }
  return g;
}

DenseMatrix design_from_gram(const DenseMatrix& sigma, std::size_t n) {
  const std::size_t p = sigma.rows();
  if (sigma.cols() != p) throw InvalidInputError("design_from_gram: Gram must be square");
  if (n < p) throw InvalidInputError("design_from_gram: need n >= p for an exact Gram");
  const Cholesky chol(sigma);
  const DenseMatrix& L = chol.lower();
  const double sqrt_n = std::sqrt(static_cast<double>(n));
  DenseMatrix X(n, p);
  for (std::size_t j = 0; j < p; ++j)
    for (std::size_t i = 0; i <= j; ++i) X(i, j) = sqrt_n * L(j, i);
  return X;
}

namespace {

DenseMatrix random_orthonormal_columns(std::size_t n, std::size_t p, Rng& rng) {
  DenseMatrix g(n, p);
  for (double& v : g.data()) v = rng.normal();
  IncrementalQr qr(n);
  DenseMatrix q(n, p);
  std::size_t k = 0;
  for (std::size_t j = 0; j < p; ++j) {
    auto u = qr.append(g.col(j));
    while (!u) {
      Vector fresh(n);
      for (double& v : fresh) v = rng.normal();
      u = qr.append(fresh);
    }
    std::copy(u->begin(), u->end(), q.col(k++).begin());
  }
  return q;
}

void maybe_normalize(DenseMatrix& X, bool normalize) {
  if (normalize) normalize_columns(X);
}

}  // namespace

DenseMatrix generate(const DesignSpec& spec) {
  const std::size_t n = spec.n;
  const std::size_t p = spec.p;
  if (n == 0 || p == 0) throw InvalidInputError("generate: n and p must be positive");
  Rng rng(spec.seed);
  DenseMatrix X;
  switch (spec.kind) {
    case DesignKind::orthonormal: {
      if (n < p) throw InvalidInputError("orthonormal: need n >= p");
      const double sqrt_n = std::sqrt(static_cast<double>(n));
      if (spec.rotate) {
        X = random_orthonormal_columns(n, p, rng);
        for (double& v : X.data()) v *= sqrt_n;
      } else {
        X = DenseMatrix(n, p);
        for (std::size_t j = 0; j < p; ++j) X(j, j) = sqrt_n;
      }
      break;
    }
    case DesignKind::powerDecay:
      if (!(spec.rho >= 0.0 && spec.rho < 1.0)) throw InvalidInputError("power-decay: rho must be in [0, 1)");
      X = design_from_gram(power_decay_gram(p, spec.rho), n);
      break;
    case DesignKind::equiCorrExact:
      if (!(spec.rho >= 0.0 && spec.rho < 1.0)) throw InvalidInputError("equicorr: rho must be in [0, 1)");
      X = design_from_gram(equicorrelation_gram(p, spec.rho), n);
      break;
    case DesignKind::appendixI:
      X = design_from_gram(appendix_i_gram(p, spec.s), n);
      break;
    case DesignKind::explicitGram: {
      if (!spec.gram) throw InvalidInputError("explicit-gram: Gram matrix missing");
      if (spec.gram->rows() != p) throw InvalidInputError("explicit-gram: Gram dimension differs from p");
      X = design_from_gram(*spec.gram, n);
      maybe_normalize(X, spec.normalize);
      break;
    }
    case DesignKind::gaussianIid:
      X = DenseMatrix(n, p);
      for (double& v : X.data()) v = rng.normal();
      maybe_normalize(X, spec.normalize);
      break;
    case DesignKind::ensPlus: {
      const EnsPlusSpec m = ens_plus_moments(spec.ensemble, spec.param);
      const double inv = 1.0 / std::sqrt(m.mu2);
      X = DenseMatrix(n, p);
      for (std::size_t j = 0; j < p; ++j) {
        for (std::size_t i = 0; i < n; ++i) X(i, j) = inv * draw_ens_plus(spec.ensemble, spec.param, rng);
        while (spec.normalize && norm_inf(X.col(j)) == 0.0) {
          for (std::size_t i = 0; i < n; ++i) X(i, j) = inv * draw_ens_plus(spec.ensemble, spec.param, rng);
        }
      }
      maybe_normalize(X, spec.normalize);
      break;
    }
    case DesignKind::groupTesting:
      X = group_testing_design(n, p, spec.param, spec.seed);
      if (!spec.normalize) {
        for (double& v : X.data()) v = v > 0.0 ? 1.0 : 0.0;
      }
      break;
    case DesignKind::localizedGaussian: {
      const double kappa = spec.width > 0.0 ? spec.width : 2.0 / static_cast<double>(n);
      X = DenseMatrix(n, p);
      for (std::size_t j = 0; j < p; ++j) {
        const double m = p == 1 ? 0.5 : static_cast<double>(j) / static_cast<double>(p - 1);
        for (std::size_t i = 0; i < n; ++i) {
          const double u = static_cast<double>(i + 1) / static_cast<double>(n);
          X(i, j) = std::exp(-(u - m) * (u - m) / kappa);
        }
      }
      maybe_normalize(X, spec.normalize);
      break;
    }
    case DesignKind::localizedExp: {
      const DesignTwoLayout layout = design_two_layout(n, p, std::max<std::size_t>(spec.s, 1), rng);
      X = design_two_matrix(n, layout);
      break;
    }
  }
  return X;
}

DenseMatrix group_testing_design(std::size_t n, std::size_t p, double pi, std::uint64_t seed) {
  if (!(pi > 0.0 && pi <= 1.0)) throw InvalidInputError("group-testing: pi must be in (0, 1]");
  Rng rng(seed);
  DenseMatrix X(n, p);
  for (std::size_t j = 0; j < p; ++j) {
    do {
      for (std::size_t i = 0; i < n; ++i) X(i, j) = rng.uniform() < pi ? 1.0 : 0.0;
    } while (norm_inf(X.col(j)) == 0.0);
  }
  normalize_columns(X);
  return X;
}

DenseMatrix cs_example_matrix() {
  const int rows[5][10] = {
      {1, 1, 0, 0, 0, 1, 0, 0, 1, 0}, {0, 1, 0, 0, 0, 0, 1, 0, 0, 1}, {1, 0, 1, 0, 0, 0, 1, 1, 0, 0},
      {0, 0, 0, 1, 1, 1, 0, 1, 0, 0}, {0, 0, 1, 1, 1, 0, 0, 0, 1, 1},
  };
  DenseMatrix X(5, 10);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 10; ++j) X(i, j) = rows[i][j];
  return X;
}

double block_lower_bound(const DenseMatrix& sigma, const std::vector<IndexSet>& blocks) {
  const std::size_t p = sigma.rows();
  std::vector<int> covered(p, 0);
  for (const auto& b : blocks)
    for (std::size_t j : b) {
      if (j >= p) throw InvalidInputError("block_lower_bound: index out of range");
      ++covered[j];
    }
  if (std::any_of(covered.begin(), covered.end(), [](int c) { return c != 1; }))
    throw InvalidInputError("block_lower_bound: blocks must partition the columns");
  double s0 = std::numeric_limits<double>::infinity();
  for (const auto& b : blocks)
    for (std::size_t j : b)
      for (std::size_t k : b) s0 = std::min(s0, sigma(j, k));
  if (!(s0 > 0.0)) return 0.0;
  return s0 / static_cast<double>(blocks.size());
}

RegressionInstance design_one_instance(std::size_t n, std::size_t p, std::size_t s, double b, double sigma,
                                       Rng& rng) {
  if (s >= n || s > p) throw InvalidInputError("design I: need s < n and s <= p");
  constexpr double rho = 0.75;
  DenseMatrix X(n, p);
  for (double& v : X.data()) v = rng.uniform();
  normalize_columns(X);
  GroundTruth t;
  t.sigma = sigma;
  t.beta_star.assign(p, 0.0);
  const double base = 6.0 * b / std::sqrt(1.0 - rho) *
                      std::sqrt(2.0 * std::log(static_cast<double>(p)) / static_cast<double>(n));
  for (std::size_t j = 0; j < s; ++j) {
    t.beta_star[j] = base * (1.0 + rng.uniform());
    t.support.push_back(j);
  }
  Vector eps(n);
  for (double& v : eps) v = sigma * rng.normal();
  Vector y = matvec(X, t.beta_star);
  axpy(1.0, eps, y);
  t.epsilon = std::move(eps);
  return make_instance(std::move(X), std::move(y), std::move(t));
}

DesignTwoLayout design_two_layout(std::size_t n, std::size_t p, std::size_t s, Rng& rng) {
  if (s == 0 || s > p) throw InvalidInputError("design II: need 1 <= s <= p");
  DesignTwoLayout lay;
  const double nd = static_cast<double>(n);
  lay.h = 2.0 / nd;
  lay.delta = lay.h;
  const double u1 = 1.0 / nd;
  const double un = 1.0;
  // as printed: log(1/n) < 0 shrinks the range inward
  lay.m_min = u1 - lay.h * std::log(1.0 / nd);
  lay.m_max = un + lay.h * std::log(1.0 / nd);
  if (!(lay.m_max > lay.m_min)) throw InvalidInputError("design II: empty center range for this n");
  lay.centers.resize(p);
  const double width = (lay.m_max - lay.m_min) / static_cast<double>(s);
  for (std::size_t k = 0; k < s; ++k) lay.centers[k] = lay.m_min + width * (static_cast<double>(k) + rng.uniform());
  for (std::size_t j = s; j < p; ++j) {
    std::size_t tries = 0;
    for (;;) {
      const double m = rng.uniform(lay.m_min, lay.m_max);
      bool ok = true;
      for (std::size_t k = 0; k < s && ok; ++k) ok = std::abs(m - lay.centers[k]) > lay.delta;
      if (ok) {
        lay.centers[j] = m;
        break;
      }
      if (++tries >= 10000) throw InvalidInputError("design II: center sampling infeasible after 10000 rejections");
    }
  }
  return lay;
}

DenseMatrix design_two_matrix(std::size_t n, const DesignTwoLayout& layout) {
  const std::size_t p = layout.centers.size();
  DenseMatrix X(n, p);
  for (std::size_t j = 0; j < p; ++j)
    for (std::size_t i = 0; i < n; ++i) {
      const double u = static_cast<double>(i + 1) / static_cast<double>(n);
      X(i, j) = std::exp(-std::abs(u - layout.centers[j]) / layout.h);
    }
  normalize_columns(X);
  return X;
}

RegressionInstance design_two_instance(std::size_t n, std::size_t p, std::size_t s, double b, double sigma,
                                       Rng& rng) {
  const DesignTwoLayout lay = design_two_layout(n, p, s, rng);
  DenseMatrix X = design_two_matrix(n, lay);
  const double beta_min = 4.0 * std::sqrt(6.0 * std::log(10.0) / static_cast<double>(n));
  GroundTruth t;
  t.sigma = sigma;
  t.beta_star.assign(p, 0.0);
  for (std::size_t j = 0; j < s; ++j) {
    t.beta_star[j] = b * beta_min * (1.0 + rng.uniform());
    t.support.push_back(j);
  }
  Vector eps(n);
  for (double& v : eps) v = sigma * rng.normal();
  Vector y = matvec(X, t.beta_star);
  axpy(1.0, eps, y);
  t.epsilon = std::move(eps);
  return make_instance(std::move(X), std::move(y), std::move(t));
}

DeconvProblem make_deconv_problem(const DeconvSpec& spec, std::uint64_t seed) {
  if (spec.n == 0 || spec.p < 2) throw InvalidInputError("deconv: need n >= 1, p >= 2");
  if (spec.spikes > spec.p) throw InvalidInputError("deconv: more spikes than candidate centers");
  DeconvProblem prob;
  prob.spec = spec;
  const std::size_t n = spec.n;
  const std::size_t p = spec.p;
  const double kappa = spec.kappa > 0.0 ? spec.kappa : 2.0 / static_cast<double>(n);
  prob.u.resize(n);
  for (std::size_t i = 0; i < n; ++i) prob.u[i] = static_cast<double>(i + 1) / static_cast<double>(n);
  prob.centers.resize(p);
  for (std::size_t j = 0; j < p; ++j) prob.centers[j] = static_cast<double>(j) / static_cast<double>(p - 1);
  prob.X = DenseMatrix(n, p);
  for (std::size_t j = 0; j < p; ++j)
    for (std::size_t i = 0; i < n; ++i) {
      const double d = prob.u[i] - prob.centers[j];
      prob.X(i, j) = std::exp(-d * d / kappa);
    }
  prob.scale = normalize_columns(prob.X);

  Rng rng(seed);
  const std::size_t margin = std::min<std::size_t>(spec.min_separation / 2, p / 4);
  std::size_t attempts = 0;
  while (prob.spike_index.size() < spec.spikes) {
    if (++attempts > 100000) throw InvalidInputError("deconv: cannot place spikes with the requested separation");
    const std::size_t j = margin + rng.below(p - 2 * margin);
    bool ok = true;
    for (std::size_t k : prob.spike_index) {
      const std::size_t gap = j > k ? j - k : k - j;
      ok = ok && gap >= spec.min_separation;
    }
    if (ok) prob.spike_index.push_back(j);
  }
  std::sort(prob.spike_index.begin(), prob.spike_index.end());
  prob.beta_star.assign(p, 0.0);
  for (std::size_t j : prob.spike_index) {
    const double a = rng.uniform(spec.amp_lo, spec.amp_hi);
    prob.amplitude.push_back(a);
    prob.beta_star[j] = a * prob.scale[j];
  }
  prob.f = matvec(prob.X, prob.beta_star);
  return prob;
}

RegressionInstance deconv_instance(const DeconvProblem& prob, double sigma, Rng& rng) {
  GroundTruth t;
  t.sigma = sigma;
  t.beta_star = prob.beta_star;
  t.support = support_of(prob.beta_star);
  t.approx_error = 0.0;
  Vector eps(prob.spec.n);
  for (double& v : eps) v = sigma * rng.normal();
  Vector y = prob.f;
  axpy(1.0, eps, y);
  t.epsilon = std::move(eps);
  return make_instance(prob.X, std::move(y), std::move(t));
}

}  // namespace nnr
