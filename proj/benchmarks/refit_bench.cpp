#include <benchmark/benchmark.h>

#include "refit/calibration.hpp"
#include "refit/influence.hpp"
#include "refit/paramnet.hpp"
#include "refit/sampling.hpp"
#include "refit/solver.hpp"
#include "refit/synthetic.hpp"
#include "refit/valuation.hpp"

using namespace refit;

namespace {

DataPool bench_pool(std::size_t n_train, int dim) {
  SyntheticConfig c;
  c.n_train = n_train;
  c.n_reserve = n_train / 2;
  c.dim = dim;
  c.seed = 1;
  return gaussian_pool(c);
}

const DataPool& shared_pool() {
  static const DataPool pool = bench_pool(60, 5);
  return pool;
}

const ParamNet& shared_net() {
  static const ParamNet net = [] {
    const auto& pool = shared_pool();
    const auto spec = spec_for(pool, ModelKind::kBinaryLogistic, 1.0);
    const auto phi = sample_phi(pool, spec, SolveConfig{}, {5, 1, false});
    TrainConfig tc;
    tc.epochs = 2;
    return train(pool, spec, phi.samples, default_arch(pool, spec), tc);
  }();
  return net;
}

void BM_NewtonSolve(benchmark::State& state) {
  const auto pool = bench_pool(static_cast<std::size_t>(state.range(0)), 10);
  const auto spec = spec_for(pool, ModelKind::kBinaryLogistic, 1.0);
  const Objective obj(spec, pool, pool.train_subset());
  for (auto _ : state) benchmark::DoNotOptimize(solve(obj, SolveConfig{}));
}
BENCHMARK(BM_NewtonSolve)->Arg(30)->Arg(100)->Arg(1000);

void BM_GdSolve(benchmark::State& state) {
  const auto pool = bench_pool(static_cast<std::size_t>(state.range(0)), 10);
  const auto spec = spec_for(pool, ModelKind::kBinaryLogistic, 1.0);
  const Objective obj(spec, pool, pool.train_subset());
  SolveConfig cfg;
  cfg.method = SolveMethod::kGd;
  for (auto _ : state) benchmark::DoNotOptimize(solve(obj, cfg));
}
BENCHMARK(BM_GdSolve)->Arg(30)->Arg(100)->Arg(1000);

void BM_Hvp(benchmark::State& state) {
  const auto pool = bench_pool(static_cast<std::size_t>(state.range(0)), 20);
  const auto spec = spec_for(pool, ModelKind::kBinaryLogistic, 1.0);
  const Objective obj(spec, pool, pool.train_subset());
  const Eigen::VectorXd theta = Eigen::VectorXd::Constant(20, 0.1);
  const Eigen::VectorXd v = Eigen::VectorXd::Ones(20);
  for (auto _ : state) benchmark::DoNotOptimize(obj.hvp(theta, v));
}
BENCHMARK(BM_Hvp)->Arg(100)->Arg(1000);

void BM_InfluenceRefit(benchmark::State& state) {
  const auto pool = bench_pool(200, 10);
  const auto spec = spec_for(pool, ModelKind::kBinaryLogistic, 1.0);
  const auto base = solve(spec, pool, pool.train_subset(), SolveConfig{});
  const auto target = pool.train_subset().without(Subset::range(0, 20));
  const auto mode = state.range(0) == 0 ? InfluenceSolveMode::kDense : InfluenceSolveMode::kCg;
  for (auto _ : state) {
    benchmark::DoNotOptimize(influence_refit(base, pool, pool.train_subset(), target, mode));
  }
}
BENCHMARK(BM_InfluenceRefit)->Arg(0)->Arg(1);

void BM_NetEstimate(benchmark::State& state) {
  const auto& pool = shared_pool();
  const auto& net = shared_net();
  const Subset s = Subset::range(0, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(estimate(net, pool, s));
}
BENCHMARK(BM_NetEstimate)->Arg(5)->Arg(30)->Arg(60);

void BM_SubsetSolve(benchmark::State& state) {
  const auto& pool = shared_pool();
  const auto spec = spec_for(pool, ModelKind::kBinaryLogistic, 1.0);
  const Subset s = Subset::range(0, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(solve(spec, pool, s, SolveConfig{}));
}
BENCHMARK(BM_SubsetSolve)->Arg(5)->Arg(30)->Arg(60);

void BM_ShapleyPermutation(benchmark::State& state) {
  const auto& pool = shared_pool();
  const auto spec = spec_for(pool, ModelKind::kBinaryLogistic, 1.0);
  const UtilitySpec us{pool.reserve_subset(), UtilityMeasure::kNegAvgLoss};
  const auto backend = state.range(0) == 0 ? UtilityBackend::solver(spec, SolveConfig{})
                                           : UtilityBackend::paramnet(shared_net());
  for (auto _ : state) {
    auto b = backend;
    benchmark::DoNotOptimize(shapley_permutation(pool, us, b, 2, 3));
  }
}
BENCHMARK(BM_ShapleyPermutation)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_Ece(benchmark::State& state) {
  const auto& pool = shared_pool();
  const auto spec = spec_for(pool, ModelKind::kBinaryLogistic, 1.0);
  const auto fit = solve(spec, pool, pool.train_subset(), SolveConfig{});
  const auto probs = member_probabilities(fit.params, pool, pool.reserve_subset());
  const auto labels = labels_of(pool, pool.reserve_subset());
  for (auto _ : state) benchmark::DoNotOptimize(ece(probs, labels));
}
BENCHMARK(BM_Ece);

}  // namespace

BENCHMARK_MAIN();
