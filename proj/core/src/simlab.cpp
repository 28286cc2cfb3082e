#include "nnr/simlab.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include "nnr/diagnostics.hpp"
#include "nnr/estimators.hpp"
#include "nnr/simplex_qp.hpp"

namespace nnr {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string list(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + num(v[i]);
  return s;
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

void finish(ExperimentReport& r, const Stopwatch& sw) {
  r.aggregates = aggregate(r.rows, r.columns, r.group_columns);
  r.wall_clock_seconds = sw.seconds();
}

double mse_of(const DenseMatrix& X, const Vector& f, const Vector& beta) {
  const Vector fit = matvec(X, beta);
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) s += (f[i] - fit[i]) * (f[i] - fit[i]);
  return s / static_cast<double>(f.size());
}

double linf_diff(const Vector& a, const Vector& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double l2_diff(const Vector& a, const Vector& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

}  // namespace

// ---------------------------------------------------------------------------
// active-set size sampler, equicorrelated design

Prop2Sample prop2_sample(std::size_t s, double rho, std::size_t p, Rng& rng) {
  if (!(rho >= 0.0 && rho < 1.0)) throw InvalidInputError("prop2_sample: rho must be in [0, 1)");
  if (p <= s) throw InvalidInputError("prop2_sample: need p > s");
  Prop2Sample out;
  out.s = s;
  out.rho = rho;
  out.pMinusS = p - s;
  const double sd = static_cast<double>(s);
  if (s == 0) {
    out.gamma = rho;
    out.theta = rho / (1.0 - rho);
  } else {
    out.gamma = rho * (1.0 - rho) / (1.0 + (sd - 1.0) * rho);
    out.theta = rho / (1.0 + (sd - 1.0) * rho);
  }
  const std::size_t m = out.pMinusS;
  const double g0 = rng.normal();
  const double a = std::sqrt(1.0 - rho);
  const double c = std::sqrt(out.gamma) * g0;
  out.z.resize(m);
  for (double& v : out.z) v = a * rng.normal() + c;
  out.orderStats = out.z;
  std::sort(out.orderStats.begin(), out.orderStats.end(), std::greater<>());
  const Vector& zs = out.orderStats;
  out.zetas.resize(m - 1);
  double prefix = 0.0;
  for (std::size_t j = 1; j < m; ++j) {
    prefix += zs[j - 1];
    const double denom = prefix - static_cast<double>(j) * zs[j];
    out.zetas[j - 1] = denom > 0.0 ? zs[j] / denom : (zs[j] > 0.0 ? kInf : (zs[j] < 0.0 ? -kInf : 0.0));
  }
  if (zs[0] <= 0.0) {
    out.cardF = s;
    return out;
  }
  std::size_t jmax = 0;
  for (std::size_t j = 1; j < m; ++j)
    if (out.zetas[j - 1] > out.theta) jmax = j;
  out.cardF = s + 1 + jmax;
  return out;
}

Prop2Band prop2_band(std::size_t s, double rho, std::size_t p, std::size_t draws, Rng& rng) {
  if (draws == 0) throw InvalidInputError("prop2_band: need at least one draw");
  std::vector<double> v(draws);
  for (auto& x : v) x = static_cast<double>(prop2_sample(s, rho, p, rng).cardF);
  Prop2Band b;
  b.draws = draws;
  b.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(draws);
  double ss = 0.0;
  for (double x : v) ss += (x - b.mean) * (x - b.mean);
  b.var = draws > 1 ? ss / static_cast<double>(draws - 1) : 0.0;
  std::sort(v.begin(), v.end());
  b.q01 = quantile_sorted(v, 0.01);
  b.q99 = quantile_sorted(v, 0.99);
  return b;
}

ExperimentReport prop2_empirical(const Prop2Config& cfg, const RunOptions& run) {
  const Stopwatch sw;
  if (cfg.n < cfg.p) throw InvalidInputError("prop2: exact equi-correlated design needs n >= p");
  if (cfg.s >= cfg.p) throw InvalidInputError("prop2: need s < p");
  ExperimentReport r;
  r.name = "prop2";
  r.seed = run.seed;
  r.config = {{"n", std::to_string(cfg.n)},         {"p", std::to_string(cfg.p)},
              {"s", std::to_string(cfg.s)},         {"rho", num(cfg.rho)},
              {"sigma", num(cfg.sigma)},            {"M", num(cfg.M)},
              {"reps", std::to_string(cfg.reps)},   {"sampler_draws", std::to_string(cfg.sampler_draws)}};
  if (cfg.beta_level) r.config.emplace_back("beta_level", num(*cfg.beta_level));
  r.columns = {"rep", "cardF", "betaS_positive", "in_band"};

  const DenseMatrix X = design_from_gram(equicorrelation_gram(cfg.p, cfg.rho), cfg.n);
  Vector beta_star(cfg.p, 0.0);
  const double level =
      cfg.beta_level ? *cfg.beta_level
                     : 3.0 * (1.0 + cfg.M) * cfg.sigma *
                           std::sqrt(2.0 * std::log(static_cast<double>(cfg.p)) / static_cast<double>(cfg.n)) /
                           (1.0 - cfg.rho);
  for (std::size_t j = 0; j < cfg.s; ++j) beta_star[j] = level;
  const Vector f = matvec(X, beta_star);

  Rng band_rng = Rng::substream(run.seed, 0xba4dULL);
  const Prop2Band band = prop2_band(cfg.s, cfg.rho, cfg.p, cfg.sampler_draws, band_rng);

  const auto rows = parallel_indexed<std::vector<double>>(cfg.reps, run.threads, [&](std::size_t rep) {
    Rng rng = Rng::substream(run.seed, rep);
    Vector y = f;
    for (double& v : y) v += cfg.sigma * rng.normal();
    const NnlsSolution sol = nnls_solve(X, y);
    bool pos = true;
    for (std::size_t j = 0; j < cfg.s; ++j) pos = pos && sol.beta[j] > 0.0;
    const auto card = static_cast<double>(sol.active_set.size());
    const bool in_band = card >= band.q01 && card <= band.q99;
    return std::vector<double>{static_cast<double>(rep), card, pos ? 1.0 : 0.0, in_band ? 1.0 : 0.0};
  });
  r.rows = rows;
  double inside = 0.0;
  for (const auto& row : r.rows) inside += row[3];
  r.scalars = {{"band_q01", band.q01},
               {"band_q99", band.q99},
               {"sampler_mean", band.mean},
               {"sampler_var", band.var},
               {"beta_star_level", level},
               {"fraction_in_band", cfg.reps ? inside / static_cast<double>(cfg.reps) : 0.0}};
  finish(r, sw);
  return r;
}

// ---------------------------------------------------------------------------
// tau^2(S) contour study

ExperimentReport tau_contour_study(const ContourConfig& cfg, const RunOptions& run) {
  const Stopwatch sw;
  ExperimentReport r;
  r.name = "tau_contour";
  r.seed = run.seed;
  r.config = {{"n", std::to_string(cfg.n)},
              {"p_ratios", list(cfg.p_ratios)},
              {"s_ratios", list(cfg.s_ratios)},
              {"ensemble", to_string(cfg.ensemble)},
              {"param", num(cfg.param)},
              {"reps", std::to_string(cfg.reps)}};
  r.columns = {"p_ratio", "s_ratio", "rep", "tauS_sq", "log2_tauS_sq"};
  r.group_columns = 2;

  struct Job {
    double pr, sr;
    std::size_t rep, global;
  };
  std::vector<Job> jobs;
  std::size_t g = 0;
  for (double pr : cfg.p_ratios)
    for (double sr : cfg.s_ratios)
      for (std::size_t rep = 0; rep < cfg.reps; ++rep) jobs.push_back({pr, sr, rep, g++});

  r.rows = parallel_indexed<std::vector<double>>(jobs.size(), run.threads, [&](std::size_t i) {
    const Job& jb = jobs[i];
    Rng rng = Rng::substream(run.seed, jb.global);
    DesignSpec ds;
    ds.kind = DesignKind::ensPlus;
    ds.n = cfg.n;
    ds.p = static_cast<std::size_t>(std::llround(jb.pr * static_cast<double>(cfg.n)));
    ds.ensemble = cfg.ensemble;
    ds.param = cfg.param;
    ds.seed = rng.next();
    const DenseMatrix X = generate(ds);
    const auto s = static_cast<std::size_t>(std::llround(jb.sr * static_cast<double>(cfg.n)));
    IndexSet S(s);
    std::iota(S.begin(), S.end(), std::size_t{0});
    double v;
    try {
      v = s == 0 ? tau0(X).value : tauS(X, S, {.cross_check = false}).value;
    } catch (const RankDeficientError&) {
      v = 0.0;
    }
    return std::vector<double>{jb.pr, jb.sr, static_cast<double>(jb.rep), v, v > 0.0 ? std::log2(v) : -kInf};
  });
  finish(r, sw);
  return r;
}

// ---------------------------------------------------------------------------
// Deconvolution

namespace {

std::vector<IndexSet> make_folds(std::size_t n, std::size_t folds, Rng& rng) {
  IndexSet perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
  std::vector<IndexSet> out(folds);
  for (std::size_t i = 0; i < n; ++i) out[i % folds].push_back(perm[i]);
  for (auto& f : out) std::sort(f.begin(), f.end());
  return out;
}

struct Split {
  DenseMatrix Xtr, Xte;
  Vector ytr, yte;
};

std::vector<Split> make_splits(const DenseMatrix& X, const Vector& y, const std::vector<IndexSet>& folds) {
  std::vector<Split> out;
  for (const auto& test : folds) {
    const IndexSet train = complement(test, X.rows());
    Split s;
    s.Xtr = X.select_rows(train);
    s.Xte = X.select_rows(test);
    for (std::size_t i : train) s.ytr.push_back(y[i]);
    for (std::size_t i : test) s.yte.push_back(y[i]);
    out.push_back(std::move(s));
  }
  return out;
}

double sq_error(const DenseMatrix& X, const Vector& y, const Vector& beta) {
  const Vector fit = matvec(X, beta);
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += (y[i] - fit[i]) * (y[i] - fit[i]);
  return s;
}

}  // namespace

ExperimentReport deconv_experiment(const DeconvConfig& cfg, const RunOptions& run) {
  const Stopwatch sw;
  const DeconvSpec& sp = cfg.spec;
  ExperimentReport r;
  r.name = "deconv";
  r.seed = run.seed;
  const double kappa = sp.kappa > 0.0 ? sp.kappa : 2.0 / static_cast<double>(sp.n);
  r.config = {{"n", std::to_string(sp.n)},
              {"p", std::to_string(sp.p)},
              {"kernel", "exp(-(u-m)^2/kappa)"},
              {"kappa", num(kappa)},
              {"spikes", std::to_string(sp.spikes)},
              {"amp_range", num(sp.amp_lo) + "," + num(sp.amp_hi)},
              {"min_separation", std::to_string(sp.min_separation)},
              {"sigma", num(cfg.sigma)},
              {"reps", std::to_string(cfg.reps)},
              {"folds", std::to_string(cfg.folds)},
              {"lasso_grid", "lambda0*2^k,k=-5..4"},
              {"ridge_grid", "logspace(-4,2,10)"}};
  r.columns = {"rep",          "mse_nnls",  "mse_nnlasso_l0", "mse_nnlasso_cv",        "mse_ridge_cv",
               "mse_oracle",   "lambda_cv", "gamma_cv",       "nnls_mass_near_spikes", "nnls_active"};

  const DeconvProblem prob = make_deconv_problem(sp, mix64(run.seed ^ 0xdec0ULL));
  const std::size_t n = sp.n;
  const std::size_t p = sp.p;
  const double lambda0 = 2.0 * cfg.sigma * std::sqrt(2.0 * std::log(static_cast<double>(p)) / static_cast<double>(n));
  std::vector<double> lgrid;
  for (int k = 4; k >= -5; --k) lgrid.push_back(lambda0 * std::ldexp(1.0, k));
  std::vector<double> ggrid;
  for (int k = 0; k < 10; ++k) ggrid.push_back(std::pow(10.0, -4.0 + 6.0 * k / 9.0));
  const NnLassoOptions lopt{.tol = 1e-9, .max_sweeps = 500000};

  const double t0 = tau0(prob.X).value;
  const HouseholderQr oracle_qr(prob.X.select_columns(prob.spike_index));

  r.rows = parallel_indexed<std::vector<double>>(cfg.reps, run.threads, [&](std::size_t rep) {
    Rng rng = Rng::substream(run.seed, rep);
    const RegressionInstance inst = deconv_instance(prob, cfg.sigma, rng);
    const Vector& y = inst.y;

    const NnlsSolution nn = nnls_solve(prob.X, y);
    const Vector b_l0 = lambda0 > 0.0 ? nn_lasso(prob.X, y, lambda0, lopt) : nn.beta;

    const auto folds = make_folds(n, cfg.folds, rng);
    const auto splits = make_splits(prob.X, y, folds);
    std::vector<double> lerr(lgrid.size(), 0.0);
    std::vector<double> gerr(ggrid.size(), 0.0);
    for (const auto& sp2 : splits) {
      std::optional<Vector> warm;
      for (std::size_t k = 0; k < lgrid.size(); ++k) {
        Vector b = nn_lasso(sp2.Xtr, sp2.ytr, lgrid[k], lopt, warm);
        lerr[k] += sq_error(sp2.Xte, sp2.yte, b);
        warm = std::move(b);
      }
      for (std::size_t k = 0; k < ggrid.size(); ++k) gerr[k] += sq_error(sp2.Xte, sp2.yte, ridge(sp2.Xtr, sp2.ytr, ggrid[k]));
    }
    const std::size_t lk = static_cast<std::size_t>(std::min_element(lerr.begin(), lerr.end()) - lerr.begin());
    const std::size_t gk = static_cast<std::size_t>(std::min_element(gerr.begin(), gerr.end()) - gerr.begin());
    const Vector b_cv = nn_lasso(prob.X, y, lgrid[lk], lopt);
    const Vector b_ridge = ridge(prob.X, y, ggrid[gk]);

    Vector b_oracle(p, 0.0);
    const Vector bo = oracle_qr.solve_least_squares(y);
    for (std::size_t k = 0; k < prob.spike_index.size(); ++k) b_oracle[prob.spike_index[k]] = bo[k];

    double near = 0.0;
    double total = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
      total += nn.beta[j];
      for (std::size_t k : prob.spike_index) {
        const std::size_t gap = j > k ? j - k : k - j;
        if (gap <= cfg.neighborhood) {
          near += nn.beta[j];
          break;
        }
      }
    }
    return std::vector<double>{static_cast<double>(rep),
                               mse_of(prob.X, prob.f, nn.beta),
                               mse_of(prob.X, prob.f, b_l0),
                               mse_of(prob.X, prob.f, b_cv),
                               mse_of(prob.X, prob.f, b_ridge),
                               mse_of(prob.X, prob.f, b_oracle),
                               lgrid[lk],
                               ggrid[gk],
                               total > 0.0 ? near / total : 1.0,
                               static_cast<double>(nn.active_set.size())};
  });
  r.scalars = {{"tau0_sq", t0}, {"lambda0", lambda0}};
  for (std::size_t k = 0; k < prob.spike_index.size(); ++k) {
    r.scalars.emplace_back("spike" + std::to_string(k) + "_index", static_cast<double>(prob.spike_index[k]));
    r.scalars.emplace_back("spike" + std::to_string(k) + "_amplitude", prob.amplitude[k]);
  }
  finish(r, sw);
  return r;
}

// ---------------------------------------------------------------------------
// Sparse recovery

double separation_margin(std::span<const double> beta, std::span<const std::size_t> S) {
  std::vector<char> in_s(beta.size(), 0);
  for (std::size_t j : S) in_s[j] = 1;
  double mn = kInf;
  double mx = -kInf;
  for (std::size_t j = 0; j < beta.size(); ++j) {
    if (in_s[j])
      mn = std::min(mn, beta[j]);
    else
      mx = std::max(mx, beta[j]);
  }
  return mn - mx;
}

namespace {

// max of the concave margin on the path between lambdas a >= b of one segment
double segment_best_margin(const PathBreakpoint& hi, const PathBreakpoint& lo, double a, double b,
                           const IndexSet& S) {
  const double span = hi.lambda - lo.lambda;
  auto at = [&](double lam) {
    const double t = span > 0.0 ? (hi.lambda - lam) / span : 0.0;
    Vector v(hi.beta.size());
    for (std::size_t j = 0; j < v.size(); ++j) v[j] = (1.0 - t) * hi.beta[j] + t * lo.beta[j];
    return separation_margin(v, S);
  };
  double best = std::max(at(a), at(b));
  double x0 = b;
  double x1 = a;
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = x1 - g * (x1 - x0);
  double d = x0 + g * (x1 - x0);
  double fc = at(c);
  double fd = at(d);
  for (int it = 0; it < 80 && x1 - x0 > 1e-14 * std::max(1.0, x1); ++it) {
    if (fc > fd) {
      x1 = d;
      d = c;
      fd = fc;
      c = x1 - g * (x1 - x0);
      fc = at(c);
    } else {
      x0 = c;
      c = d;
      fc = fd;
      d = x0 + g * (x1 - x0);
      fd = at(d);
    }
    best = std::max({best, fc, fd});
  }
  return best;
}

}  // namespace

RecoveryOutcome evaluate_recovery(const RegressionInstance& inst, double M) {
  if (!inst.truth) throw PreconditionError("evaluate_recovery: ground truth required");
  const GroundTruth& t = *inst.truth;
  const DenseMatrix& X = inst.X;
  const std::size_t n = inst.n();
  const std::size_t p = inst.p();
  const IndexSet& S = t.support;
  RecoveryOutcome o;

  const NnlsSolution sol = nnls_solve(X, inst.y);
  o.tnnls_star = separation_margin(sol.beta, S) > 0.0;
  const ThresholdedEstimate rec = recover_support(X, inst.y, std::nullopt, M);
  o.tnnls = rec.support == S;
  o.shat = rec.sHat;
  if (o.tnnls) {
    double raw = 0.0;
    double ref = 0.0;
    for (std::size_t j : S) {
      raw = std::max(raw, std::abs(sol.beta[j] - t.beta_star[j]));
      ref = std::max(ref, std::abs(rec.refit[j] - t.beta_star[j]));
    }
    o.refit_linf_le_raw = ref <= raw + 1e-12 ? 1.0 : 0.0;
  } else {
    o.refit_linf_le_raw = -1.0;
  }

  const double lambda0 = 2.0 * t.sigma * std::sqrt(2.0 * std::log(static_cast<double>(p)) / static_cast<double>(n));
  double lamhat = lambda0;
  if (t.epsilon) lamhat = 2.0 * norm_inf(matvec_transposed(X, *t.epsilon)) / static_cast<double>(n);
  double lo = std::min(lambda0, lamhat);
  const double hi = std::max(lambda0, lamhat);
  if (!(lo > 0.0)) {
    Vector c = matvec_transposed(X, inst.y);
    lo = 1e-8 * std::max(2.0 * norm_inf(c) / static_cast<double>(n), 1e-300);
  }
  const LassoPath path = nn_lasso_path(X, inst.y, lo, t.sigma,
                                       t.epsilon ? std::optional<std::span<const double>>(*t.epsilon) : std::nullopt);
  const auto& bp = path.breakpoints;
  for (std::size_t k = 0; k + 1 < bp.size() && !o.tnnl1; ++k) {
    const double a = std::min(bp[k].lambda, hi);
    const double b = std::max(bp[k + 1].lambda, lo);
    if (a < b) continue;
    o.tnnl1 = segment_best_margin(bp[k], bp[k + 1], a, b, S) > 0.0;
  }
  for (std::size_t k = 0; k < bp.size() && !o.nnl1; ++k) {
    if (bp[k].lambda < lo) continue;
    if (k + 1 < bp.size() && bp[k].active == S) o.nnl1 = true;
    if (support_of(bp[k].beta) == S) o.nnl1 = true;
  }
  const Vector b_l1 = path_at(path, std::max(lambda0, lo));

  o.linf_nnls = linf_diff(sol.beta, t.beta_star);
  o.l2_nnls = l2_diff(sol.beta, t.beta_star);
  o.linf_nnl1 = linf_diff(b_l1, t.beta_star);
  o.l2_nnl1 = l2_diff(b_l1, t.beta_star);

  const std::size_t steps = std::min({S.size(), n, p});
  OmpResult om = omp(X, inst.y, steps);
  std::sort(om.support.begin(), om.support.end());
  o.omp = om.support == S;
  o.iota = iota(X, S);
  return o;
}

ExperimentReport recovery_phase_experiment(const PhaseConfig& cfg, const RunOptions& run) {
  const Stopwatch sw;
  ExperimentReport r;
  r.name = cfg.design == RecoveryDesign::I ? "recovery_design1" : "recovery_design2";
  r.seed = run.seed;
  std::string cells;
  for (const auto& c : cfg.cells) cells += (cells.empty() ? "" : ";") + num(c.p_ratio) + "/" + num(c.s_ratio) + "/" + num(c.b);
  r.config = {{"design", cfg.design == RecoveryDesign::I ? "I" : "II"},
              {"n", std::to_string(cfg.n)},
              {"cells(p/n,s/n,b)", cells},
              {"reps", std::to_string(cfg.reps)},
              {"sigma", num(cfg.sigma)},
              {"M", num(cfg.M)}};
  r.columns = {"p_ratio", "s_ratio",  "b",         "rep",     "tnnls_star", "tnnls",   "tnnl1", "nnl1",
               "omp",     "linf_nnls", "linf_nnl1", "l2_nnls", "l2_nnl1",    "shat",    "refit_linf_le_raw", "iota"};
  r.group_columns = 3;

  const std::size_t total = cfg.cells.size() * cfg.reps;
  r.rows = parallel_indexed<std::vector<double>>(total, run.threads, [&](std::size_t i) {
    const PhaseCell& c = cfg.cells[i / cfg.reps];
    const std::size_t rep = i % cfg.reps;
    Rng rng = Rng::substream(run.seed, i);
    const auto p = static_cast<std::size_t>(std::llround(c.p_ratio * static_cast<double>(cfg.n)));
    const auto s = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(c.s_ratio * static_cast<double>(cfg.n))));
    const RegressionInstance inst = cfg.design == RecoveryDesign::I
                                        ? design_one_instance(cfg.n, p, s, c.b, cfg.sigma, rng)
                                        : design_two_instance(cfg.n, p, s, c.b, cfg.sigma, rng);
    const RecoveryOutcome o = evaluate_recovery(inst, cfg.M);
    return std::vector<double>{c.p_ratio,
                               c.s_ratio,
                               c.b,
                               static_cast<double>(rep),
                               o.tnnls_star ? 1.0 : 0.0,
                               o.tnnls ? 1.0 : 0.0,
                               o.tnnl1 ? 1.0 : 0.0,
                               o.nnl1 ? 1.0 : 0.0,
                               o.omp ? 1.0 : 0.0,
                               o.linf_nnls,
                               o.linf_nnl1,
                               o.l2_nnls,
                               o.l2_nnl1,
                               static_cast<double>(o.shat),
                               o.refit_linf_le_raw,
                               o.iota};
  });
  finish(r, sw);
  return r;
}

}  // namespace nnr
