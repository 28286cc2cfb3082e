#include <benchmark/benchmark.h>

#include "nnr/designs.hpp"
#include "nnr/estimators.hpp"
#include "nnr/nnls.hpp"
#include "nnr/simplex_qp.hpp"

using namespace nnr;

namespace {

RegressionInstance design_one(std::size_t n, std::size_t s) {
  Rng rng(17);
  return design_one_instance(n, 2 * n, s, 0.5, 1.0, rng);
}

DenseMatrix ens(std::size_t n, std::size_t p) {
  DesignSpec spec;
  spec.kind = DesignKind::ensPlus;
  spec.n = n;
  spec.p = p;
  spec.seed = 3;
  return generate(spec);
}

}  // namespace

static void BM_NnlsSolve(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const RegressionInstance inst = design_one(n, n / 20);
  for (auto _ : state) benchmark::DoNotOptimize(nnls_solve(inst.X, inst.y));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_NnlsSolve)->Arg(100)->Arg(200)->Arg(400)->Unit(benchmark::kMillisecond)->Complexity();

static void BM_Tau0(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const DenseMatrix X = ens(n, 2 * n);
  for (auto _ : state) benchmark::DoNotOptimize(tau0(X));
}
BENCHMARK(BM_Tau0)->Arg(50)->Arg(100)->Arg(200)->Unit(benchmark::kMillisecond);

static void BM_TauS(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const DenseMatrix X = ens(n, 2 * n);
  IndexSet S;
  for (std::size_t j = 0; j < n / 10; ++j) S.push_back(j);
  for (auto _ : state) benchmark::DoNotOptimize(tauS(X, S));
}
BENCHMARK(BM_TauS)->Arg(50)->Arg(100)->Arg(200)->Unit(benchmark::kMillisecond);

static void BM_NnLassoPath(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const RegressionInstance inst = design_one(n, n / 20);
  for (auto _ : state) benchmark::DoNotOptimize(nn_lasso_path(inst.X, inst.y, 1e-3));
}
BENCHMARK(BM_NnLassoPath)->Arg(100)->Arg(200)->Unit(benchmark::kMillisecond);

static void BM_NnLassoCd(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const RegressionInstance inst = design_one(n, n / 20);
  const double lambda = 2.0 * std::sqrt(2.0 * std::log(2.0 * static_cast<double>(n)) / static_cast<double>(n));
  for (auto _ : state) benchmark::DoNotOptimize(nn_lasso(inst.X, inst.y, lambda));
}
BENCHMARK(BM_NnLassoCd)->Arg(100)->Arg(200)->Unit(benchmark::kMillisecond);

static void BM_RecoverSupport(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const RegressionInstance inst = design_one(n, n / 20);
  for (auto _ : state) benchmark::DoNotOptimize(recover_support(inst.X, inst.y));
}
BENCHMARK(BM_RecoverSupport)->Arg(100)->Arg(200)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
