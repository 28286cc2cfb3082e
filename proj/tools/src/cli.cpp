#include "cli.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "nnr/diagnostics.hpp"
#include "nnr/estimators.hpp"
#include "nnr/simlab.hpp"
#include "nnr/simplex_qp.hpp"

namespace nnr::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::pair<std::string, std::string> split_kv(const std::string& tok) {
  const auto eq = tok.find('=');
  if (eq == std::string::npos) throw ConfigError("expected key=value, got '" + tok + "'");
  std::string k = trim(tok.substr(0, eq));
  if (k.empty()) throw ConfigError("empty key in '" + tok + "'");
  return {k, trim(tok.substr(eq + 1))};
}

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string g6(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

using ojson = nlohmann::ordered_json;

ojson vec_json(std::span<const double> v) {
  auto a = ojson::array();
  for (double x : v) a.push_back(x);
  return a;
}

ojson echo_json(const Echo& e) {
  auto o = ojson::object();
  for (const auto& [k, v] : e) o[k] = v;
  return o;
}

struct Common {
  std::string config_path;
  std::string out_dir;
  std::string instance;
  std::string format = "both";
  std::vector<std::string> kv;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
};

Params make_params(const Common& c) {
  KeyValues kv;
  if (!c.config_path.empty()) kv = load_config_file(c.config_path);
  for (auto& [k, v] : parse_overrides(c.kv)) kv[k] = v;
  if (c.seed) kv["seed"] = std::to_string(*c.seed);
  if (c.threads) kv["threads"] = std::to_string(*c.threads);
  return Params(std::move(kv));
}

void emit_json(const ojson& j, const Common& c, const std::string& stem, std::ostream& out) {
  const std::string text = j.dump(2) + "\n";
  out << text;
  if (!c.out_dir.empty()) {
    std::filesystem::create_directories(c.out_dir);
    const auto path = std::filesystem::path(c.out_dir) / (stem + ".json");
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot write " + path.string());
    f << text;
  }
}

ojson truth_errors(const RegressionInstance& inst, std::span<const double> beta) {
  ojson e;
  if (!inst.truth) return e;
  const auto& b = inst.truth->beta_star;
  double li = 0.0, l2 = 0.0;
  for (std::size_t j = 0; j < b.size(); ++j) {
    li = std::max(li, std::abs(beta[j] - b[j]));
    l2 += (beta[j] - b[j]) * (beta[j] - b[j]);
  }
  e["linf_error"] = li;
  e["l2_error"] = std::sqrt(l2);
  e["support_equal"] = support_of(beta) == inst.truth->support;
  return e;
}

// ---------------------------------------------------------------------------

int cmd_gen(const Common& c, std::ostream& out) {
  Params P = make_params(c);
  P.allow({"design", "n", "p", "seed", "rho", "ensemble", "a", "pi", "s", "width", "rotate", "beta", "b", "sigma",
           "name", "kappa", "spikes", "min_separation", "threads"});
  const std::string design = P.required("design");
  const std::uint64_t seed = resolve_seed(P);
  const std::string name = P.str("name", "instance");
  const double sigma = P.num("sigma", 0.0);
  if (sigma < 0.0) throw ConfigError("sigma must be non-negative");
  Rng rng = Rng::substream(seed, 1);
  RegressionInstance inst;

  if (design == "design-one" || design == "design-two") {
    const std::size_t n = P.count("n", 200);
    const std::size_t p = P.count("p", 400);
    const std::size_t s = P.count("s", 10);
    const double b = P.num("b", 0.5);
    inst = design == "design-one" ? design_one_instance(n, p, s, b, sigma, rng) : design_two_instance(n, p, s, b, sigma, rng);
  } else if (design == "deconv") {
    DeconvSpec ds;
    ds.n = P.count("n", ds.n);
    ds.p = P.count("p", ds.p);
    ds.kappa = P.num("kappa", 0.0);
    ds.spikes = P.count("spikes", ds.spikes);
    ds.min_separation = P.count("min_separation", ds.min_separation);
    const DeconvProblem prob = make_deconv_problem(ds, seed);
    inst = deconv_instance(prob, sigma, rng);
  } else {
    DesignSpec ds;
    try {
      ds.kind = parse_design_kind(design);
    } catch (const InvalidInputError& e) {
      throw ConfigError(e.what());
    }
    if (ds.kind == DesignKind::explicitGram) throw ConfigError("explicit-gram designs are library-only");
    ds.n = P.count("n", 0);
    ds.p = P.count("p", 0);
    ds.seed = seed;
    ds.rho = P.num("rho", 0.0);
    ds.ensemble = parse_ensemble(P.str("ensemble", "E1"));
    ds.param = P.num(ds.kind == DesignKind::groupTesting ? "pi" : "a", ds.kind == DesignKind::groupTesting ? 0.5 : 1.0);
    ds.s = P.count("s", 0);
    ds.width = P.num("width", 0.0);
    ds.rotate = P.flag("rotate", false);
    DenseMatrix X = generate(ds);
    const double level = P.num("beta", 1.0);
    if (level < 0.0) throw ConfigError("beta must be non-negative");
    GroundTruth t;
    t.beta_star.assign(ds.p, 0.0);
    for (std::size_t j = 0; j < std::min(ds.s, ds.p) && level > 0.0; ++j) t.beta_star[j] = level;
    t.support = support_of(t.beta_star);
    t.sigma = sigma;
    Vector y = matvec(X, t.beta_star);
    Vector eps(ds.n);
    for (auto& e : eps) e = sigma * rng.normal();
    for (std::size_t i = 0; i < ds.n; ++i) y[i] += eps[i];
    t.epsilon = std::move(eps);
    inst = make_instance(std::move(X), std::move(y), std::move(t));
  }
  const auto paths = write_instance(c.out_dir.empty() ? "." : c.out_dir, name, inst, P.echo(), seed);
  out << "wrote " << paths.manifest.string() << " and " << paths.matrix.string() << " (n=" << inst.n()
      << ", p=" << inst.p() << ", hash=" << hex64(matrix_hash(inst.X)) << ")\n";
  return kExitOk;
}

int cmd_solve(const Common& c, std::ostream& out) {
  if (c.instance.empty()) throw ConfigError("solve needs --instance");
  Params P = make_params(c);
  P.allow({"method", "lambda", "steps", "gamma", "tol", "seed", "threads"});
  const LoadedInstance L = read_instance(c.instance);
  const auto& inst = L.inst;
  const std::string method = P.str("method", "nnls");
  ojson j;
  Vector beta;
  if (method == "nnls") {
    NnlsOptions o;
    o.tol = P.num("tol", o.tol);
    const NnlsSolution sol = nnls_solve(inst.X, inst.y, o);
    beta = sol.beta;
    j["objective"] = sol.objective;
    j["iterations"] = sol.iterations;
    j["active_set"] = sol.active_set;
    const KktReport k = kkt_check(inst.X, inst.y, sol.beta, 1e-8);
    j["kkt"] = {{"max_violation", k.max_violation}, {"is_optimal", k.is_optimal}};
  } else if (method == "nnlasso") {
    const double lambda = P.num("lambda", -1.0);
    if (!(lambda >= 0.0)) throw ConfigError("nnlasso needs lambda >= 0");
    NnLassoOptions o;
    o.tol = P.num("tol", o.tol);
    beta = nn_lasso(inst.X, inst.y, lambda, o);
    j["active_set"] = support_of(beta);
    j["kkt"] = {{"max_violation", nn_lasso_kkt(inst.X, inst.y, beta, lambda)}};
  } else if (method == "omp") {
    std::size_t def = inst.truth ? inst.truth->support.size() : 1;
    const std::size_t steps = P.count("steps", def);
    const OmpResult r = omp(inst.X, inst.y, steps);
    beta = r.beta;
    j["selection_order"] = r.support;
    j["early_stop"] = r.early_stop;
  } else if (method == "ridge") {
    const double gamma = P.num("gamma", 1.0);
    if (!(gamma > 0.0)) throw ConfigError("ridge needs gamma > 0");
    beta = ridge(inst.X, inst.y, gamma);
  } else {
    throw ConfigError("unknown method '" + method + "' (nnls, nnlasso, omp, ridge)");
  }
  ojson doc;
  doc["command"] = "solve";
  doc["method"] = method;
  doc["config"] = echo_json(P.echo());
  doc["instance"] = c.instance;
  doc["matrix_hash"] = hex64(L.hash);
  for (auto it = j.begin(); it != j.end(); ++it) doc[it.key()] = it.value();
  doc["beta"] = vec_json(beta);
  if (inst.truth) doc["truth"] = truth_errors(inst, beta);
  if (c.format == "csv") {
    out << "# solve method=" << method << " matrix_hash=" << hex64(L.hash) << "\nj,beta\n";
    for (std::size_t i = 0; i < beta.size(); ++i) out << i << "," << g17(beta[i]) << "\n";
    return kExitOk;
  }
  emit_json(doc, c, "solve_" + method, out);
  return kExitOk;
}

int cmd_diagnose(const Common& c, std::ostream& out) {
  if (c.instance.empty()) throw ConfigError("diagnose needs --instance");
  Params P = make_params(c);
  P.allow({"S", "sigma", "M", "seed", "threads"});
  const LoadedInstance L = read_instance(c.instance);
  const auto& inst = L.inst;
  IndexSet S = P.has("S") ? P.indices("S") : (inst.truth ? inst.truth->support : IndexSet{});
  for (std::size_t j : S)
    if (j >= inst.p()) throw ConfigError("support index " + std::to_string(j) + " out of range");
  const double sigma = P.num("sigma", inst.truth ? inst.truth->sigma : 1.0);
  const double M = P.num("M", 1.0);
  ojson doc;
  doc["command"] = "diagnose";
  doc["config"] = echo_json(P.echo());
  doc["matrix_hash"] = hex64(L.hash);
  doc["S"] = S;
  const MarginCertificate t0 = tau0(inst.X);
  doc["tau0Sq"] = t0.value;
  if (!S.empty()) {
    std::optional<Vector> bs;
    if (inst.truth) bs = inst.truth->beta_star;
    const DiagnosticsReport d = constants_for_support(inst.X, S, bs, sigma, M);
    doc["tauSSq"] = d.tauSSq;
    doc["iota"] = d.iota;
    doc["iotaAtLeastOne"] = d.iotaAtLeastOne;
    doc["K_S"] = d.K_S;
    doc["phiMinS"] = d.phiMinS;
    doc["phiMaxS"] = d.phiMaxS;
    doc["betaMinS"] = d.betaMinS;
    doc["lambdaM"] = d.lambdaM;
    doc["boundB"] = d.boundB;
    doc["boundBtilde"] = d.boundBtilde;
    doc["thm4ConditionHolds"] = d.thm4ConditionHolds;
    doc["thm6Lambda"] = d.thm6Lambda;
    doc["thm6BoundB"] = d.thm6BoundB;
    doc["slowRateBound"] = d.slowRateBound;
    doc["sigmaSSInvOneInf"] = d.sigmaSSInvOneInf;
  }
  emit_json(doc, c, "diagnose", out);
  return kExitOk;
}

int cmd_recover(const Common& c, std::ostream& out) {
  if (c.instance.empty()) throw ConfigError("recover needs --instance");
  Params P = make_params(c);
  P.allow({"sigma", "M", "seed", "threads"});
  const LoadedInstance L = read_instance(c.instance);
  const auto& inst = L.inst;
  std::optional<double> sigma;
  if (P.has("sigma")) sigma = P.num("sigma", 0.0);
  const double M = P.num("M", 1.0);
  const ThresholdedEstimate r = recover_support(inst.X, inst.y, sigma, M);
  ojson doc;
  doc["command"] = "recover";
  doc["config"] = echo_json(P.echo());
  doc["matrix_hash"] = hex64(L.hash);
  doc["sHat"] = r.sHat;
  doc["sigmaHat"] = r.sigmaHat;
  if (r.threshold)
    doc["threshold"] = *r.threshold;
  else
    doc["threshold"] = nullptr;
  doc["support"] = r.support;
  doc["refit"] = vec_json(r.refit);
  if (inst.truth) {
    doc["true_support"] = inst.truth->support;
    doc["exact_recovery"] = r.support == inst.truth->support;
  }
  emit_json(doc, c, "recover", out);
  return kExitOk;
}

void print_table(const ExperimentReport& r, std::ostream& out) {
  out << "experiment " << r.name << " seed=" << r.seed << " reps=" << r.rows.size()
      << " wall=" << g6(r.wall_clock_seconds) << "s\n";
  for (const auto& [k, v] : r.scalars) out << "  " << k << " = " << g6(v) << "\n";
  for (const auto& a : r.aggregates) {
    out << "  ";
    for (std::size_t g = 0; g < a.group.size(); ++g) out << r.columns[g] << "=" << g6(a.group[g]) << " ";
    out << a.column << ": mean " << g6(a.mean) << " se " << g6(a.stderr_) << " median " << g6(a.q50) << "\n";
  }
}

int cmd_experiment(const Common& c, const std::string& name, std::ostream& out) {
  if (c.format != "both" && c.format != "csv" && c.format != "json") throw ConfigError("format must be csv, json or both");
  Params P = make_params(c);
  RunOptions run;
  ExperimentReport r;
  if (name == "prop2") {
    P.allow({"n", "p", "s", "rho", "sigma", "M", "reps", "draws", "beta", "seed", "threads"});
    Prop2Config cfg;
    cfg.n = P.count("n", cfg.n);
    cfg.p = P.count("p", cfg.p);
    cfg.s = P.count("s", cfg.s);
    cfg.rho = P.num("rho", cfg.rho);
    cfg.sigma = P.num("sigma", cfg.sigma);
    cfg.M = P.num("M", cfg.M);
    cfg.reps = P.count("reps", cfg.reps);
    cfg.sampler_draws = P.count("draws", cfg.sampler_draws);
    if (P.has("beta")) cfg.beta_level = P.num("beta", 0.0);
    run.seed = resolve_seed(P);
    run.threads = P.count("threads", 1);
    r = prop2_empirical(cfg, run);
  } else if (name == "tau-contour") {
    P.allow({"n", "p_ratios", "s_ratios", "ensemble", "a", "reps", "seed", "threads"});
    ContourConfig cfg;
    cfg.n = P.count("n", cfg.n);
    cfg.p_ratios = P.list("p_ratios", cfg.p_ratios);
    cfg.s_ratios = P.list("s_ratios", cfg.s_ratios);
    cfg.ensemble = parse_ensemble(P.str("ensemble", "E1"));
    cfg.param = P.num("a", cfg.param);
    cfg.reps = P.count("reps", cfg.reps);
    run.seed = resolve_seed(P);
    run.threads = P.count("threads", 1);
    r = tau_contour_study(cfg, run);
  } else if (name == "deconv") {
    P.allow({"n", "p", "sigma", "reps", "folds", "spikes", "kappa", "min_separation", "neighborhood", "seed",
             "threads"});
    DeconvConfig cfg;
    cfg.spec.n = P.count("n", cfg.spec.n);
    cfg.spec.p = P.count("p", cfg.spec.p);
    cfg.spec.kappa = P.num("kappa", cfg.spec.kappa);
    cfg.spec.spikes = P.count("spikes", cfg.spec.spikes);
    cfg.spec.min_separation = P.count("min_separation", cfg.spec.min_separation);
    cfg.sigma = P.num("sigma", cfg.sigma);
    cfg.reps = P.count("reps", cfg.reps);
    cfg.folds = P.count("folds", cfg.folds);
    cfg.neighborhood = P.count("neighborhood", cfg.neighborhood);
    run.seed = resolve_seed(P);
    run.threads = P.count("threads", 1);
    r = deconv_experiment(cfg, run);
  } else if (name == "recovery-phase") {
    P.allow({"design", "n", "p_ratios", "s_ratios", "bs", "reps", "sigma", "M", "paper_scale", "seed", "threads"});
    PhaseConfig cfg;
    const bool paper = P.flag("paper_scale", false);
    const std::string d = P.str("design", "I");
    if (d == "I" || d == "1")
      cfg.design = RecoveryDesign::I;
    else if (d == "II" || d == "2")
      cfg.design = RecoveryDesign::II;
    else
      throw ConfigError("design must be I or II");
    cfg.n = P.count("n", paper ? 500 : cfg.n);
    cfg.reps = P.count("reps", paper ? 100 : cfg.reps);
    cfg.sigma = P.num("sigma", cfg.sigma);
    cfg.M = P.num("M", cfg.M);
    const auto prs = P.list("p_ratios", {2.0});
    const auto srs = P.list("s_ratios", {0.05, 0.1, 0.2, 0.3});
    const auto bs = P.list("bs", {0.5});
    cfg.cells.clear();
    for (double pr : prs)
      for (double sr : srs)
        for (double b : bs) cfg.cells.push_back({pr, sr, b});
    run.seed = resolve_seed(P);
    run.threads = P.count("threads", 1);
    r = recovery_phase_experiment(cfg, run);
  } else {
    throw ConfigError("unknown experiment '" + name + "' (prop2, tau-contour, deconv, recovery-phase)");
  }
  // the effective CLI config rides along with the experiment's own echo;
  // thread count stays out so outputs do not depend on it
  for (const auto& [k, v] : P.echo())
    if (k != "threads" && std::none_of(r.config.begin(), r.config.end(), [&](const auto& e) { return e.first == k; }))
      r.config.emplace_back("cli." + k, v);
  const std::string dir = c.out_dir.empty() ? "." : c.out_dir;
  const auto w = write_report(r, dir);
  if (c.format == "csv") std::filesystem::remove(w.json);
  if (c.format == "json") std::filesystem::remove(w.csv);
  print_table(r, out);
  if (c.format != "json") out << "wrote " << w.csv.string() << "\n";
  if (c.format != "csv") out << "wrote " << w.json.string() << "\n";
  return kExitOk;
}

}  // namespace

// ---------------------------------------------------------------------------

KeyValues parse_config_text(const std::string& text) {
  KeyValues kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    try {
      auto [k, v] = split_kv(line);
      kv[k] = v;
    } catch (const ConfigError& e) {
      throw ConfigError("config line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return kv;
}

KeyValues load_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read config file " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config_text(ss.str());
}

KeyValues parse_overrides(const std::vector<std::string>& tokens) {
  KeyValues kv;
  for (const auto& t : tokens) {
    auto [k, v] = split_kv(t);
    kv[k] = v;
  }
  return kv;
}

void Params::allow(const std::set<std::string>& allowed) const {
  for (const auto& [k, v] : kv_)
    if (!allowed.count(k)) throw ConfigError("unknown key '" + k + "'");
}

std::string Params::str(const std::string& k, const std::string& def) {
  const auto it = kv_.find(k);
  const std::string v = it == kv_.end() ? def : it->second;
  used_[k] = v;
  return v;
}

std::string Params::required(const std::string& k) {
  if (!has(k)) throw ConfigError("missing required key '" + k + "'");
  return str(k, "");
}

double Params::num(const std::string& k, double def) {
  const auto it = kv_.find(k);
  if (it == kv_.end()) {
    used_[k] = g17(def);
    return def;
  }
  std::size_t pos = 0;
  double v;
  try {
    v = std::stod(it->second, &pos);
  } catch (const std::exception&) {
    throw ConfigError("key '" + k + "' expects a number, got '" + it->second + "'");
  }
  if (pos != it->second.size() || !std::isfinite(v))
    throw ConfigError("key '" + k + "' expects a finite number, got '" + it->second + "'");
  used_[k] = it->second;
  return v;
}

std::uint64_t Params::u64(const std::string& k, std::uint64_t def) {
  const auto it = kv_.find(k);
  if (it == kv_.end()) {
    used_[k] = std::to_string(def);
    return def;
  }
  const std::string& s = it->second;
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
    throw ConfigError("key '" + k + "' expects a non-negative integer, got '" + s + "'");
  std::uint64_t v;
  try {
    v = std::stoull(s);
  } catch (const std::exception&) {
    throw ConfigError("key '" + k + "' is out of range: '" + s + "'");
  }
  used_[k] = s;
  return v;
}

std::size_t Params::count(const std::string& k, std::size_t def) { return static_cast<std::size_t>(u64(k, def)); }

bool Params::flag(const std::string& k, bool def) {
  const std::string v = str(k, def ? "true" : "false");
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("key '" + k + "' expects true/false, got '" + v + "'");
}

std::vector<double> Params::list(const std::string& k, const std::vector<double>& def) {
  const auto it = kv_.find(k);
  if (it == kv_.end()) {
    std::string s;
    for (std::size_t i = 0; i < def.size(); ++i) s += (i ? "," : "") + g17(def[i]);
    used_[k] = s;
    return def;
  }
  std::vector<double> out;
  std::stringstream ss(it->second);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    std::size_t pos = 0;
    double v;
    try {
      v = std::stod(item, &pos);
    } catch (const std::exception&) {
      throw ConfigError("key '" + k + "' expects a comma-separated list of numbers");
    }
    if (pos != item.size() || !std::isfinite(v)) throw ConfigError("key '" + k + "' has a bad entry '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw ConfigError("key '" + k + "' is empty");
  used_[k] = it->second;
  return out;
}

std::vector<std::size_t> Params::indices(const std::string& k) {
  const std::string v = str(k, "");
  std::vector<std::size_t> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    if (item.find_first_not_of("0123456789") != std::string::npos)
      throw ConfigError("key '" + k + "' expects comma-separated column indices");
    out.push_back(std::stoul(item));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

Echo Params::echo() const { return {used_.begin(), used_.end()}; }

std::uint64_t resolve_seed(Params& p) {
  if (p.has("seed")) return p.u64("seed", kDefaultSeed);
  if (const char* env = std::getenv("NNR_SEED"); env && *env) {
    const std::string s = env;
    if (s.find_first_not_of("0123456789") != std::string::npos)
      throw ConfigError("NNR_SEED must be a non-negative integer");
    try {
      return p.u64("seed", std::stoull(s));
    } catch (const std::out_of_range&) {
      throw ConfigError("NNR_SEED is out of range");
    }
  }
  return p.u64("seed", kDefaultSeed);
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"nnr: non-negative least squares for sparse high-dimensional models"};
  app.require_subcommand(1);
  Common c;
  std::string exp_name;
  auto add_common = [&](CLI::App* sub, bool with_instance) {
    sub->add_option("--config", c.config_path, "flat key=value config file");
    sub->add_option("--out", c.out_dir, "output directory");
    sub->add_option("--seed", c.seed, "master seed (overrides config and NNR_SEED)");
    sub->add_option("--threads", c.threads, "worker threads");
    sub->add_option("--format", c.format, "csv, json or both");
    if (with_instance) sub->add_option("--instance", c.instance, "instance manifest (.json)");
  };
  auto* gen = app.add_subcommand("gen", "generate a design and instance");
  add_common(gen, false);
  gen->add_option("params", c.kv, "key=value overrides");
  auto* solve = app.add_subcommand("solve", "solve an instance");
  add_common(solve, true);
  solve->add_option("params", c.kv, "key=value overrides");
  auto* diag = app.add_subcommand("diagnose", "design constants for a support");
  add_common(diag, true);
  diag->add_option("params", c.kv, "key=value overrides");
  auto* rec = app.add_subcommand("recover", "thresholded NNLS support recovery");
  add_common(rec, true);
  rec->add_option("params", c.kv, "key=value overrides");
  auto* exp = app.add_subcommand("experiment", "run a named experiment");
  add_common(exp, false);
  exp->add_option("name", exp_name, "prop2 | tau-contour | deconv | recovery-phase")->required();
  exp->add_option("params", c.kv, "key=value overrides");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (gen->parsed()) return cmd_gen(c, out);
    if (solve->parsed()) return cmd_solve(c, out);
    if (diag->parsed()) return cmd_diagnose(c, out);
    if (rec->parsed()) return cmd_recover(c, out);
    if (exp->parsed()) return cmd_experiment(c, exp_name, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const InvalidInputError& e) {
    err << "invalid input: " << e.what() << "\n";
    return kExitConfig;
  } catch (const Error& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitConfig;
}

}  // namespace nnr::cli
