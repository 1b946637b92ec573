#include "stsae/estimators.hpp"
#include "stsae/sampler.hpp"

#include <benchmark/benchmark.h>

#include <vector>

using namespace stsae;

namespace {

Dataset lattice_data(int rows, int cols, int T, int plots_per_cell) {
  const int J = rows * cols;
  Rng rng(17);
  Eigen::MatrixXd x = Eigen::MatrixXd::Ones(2, J * T);
  for (int c = 0; c < J * T; ++c) x(1, c) = 50.0 + 15.0 * rng.normal();
  std::vector<Observation> obs;
  for (int ti = 0; ti < T; ++ti)
    for (int j = 0; j < J; ++j)
      for (int i = 0; i < plots_per_cell; ++i) obs.push_back({j, ti, 60.0 + 20.0 * rng.normal()});
  return Dataset(J, T, x, x.bottomRows(1), std::move(obs));
}

void BM_EigenSystem(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  const auto graph = lattice_graph(side, side);
  for (auto _ : state) benchmark::DoNotOptimize(CarEigenSystem(graph).eigenvalues().sum());
  state.SetComplexityN(side * side);
}
BENCHMARK(BM_EigenSystem)->RangeMultiplier(2)->Range(4, 32)->Complexity();

void BM_GibbsSweep(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  const int T = 10;
  const auto data = lattice_data(side, side, T, 4);
  const CarEigenSystem sys(lattice_graph(side, side));
  const auto hyper = Hyperparameters::defaults(1, 1, T);
  const ModelContext ctx{data, sys, hyper};
  auto s = initial_state(ctx);
  Rng rng(1);
  McmcConfig cfg;
  auto stats = MetropolisStats::create(1, cfg);
  for (auto _ : state) gibbs_sweep(s, ctx, rng, stats);
  state.SetComplexityN(side * side);
}
BENCHMARK(BM_GibbsSweep)->RangeMultiplier(2)->Range(4, 16)->Complexity();

void BM_Waic(benchmark::State& state) {
  const int S = static_cast<int>(state.range(0));
  const int J = 50, T = 10;
  const auto data = lattice_data(5, 10, T, 5);
  Rng rng(3);
  std::vector<double> mu(static_cast<std::size_t>(S) * J * T), sig(static_cast<std::size_t>(S) * T);
  for (auto& m : mu) m = 60.0 + rng.normal();
  for (auto& v : sig) v = 400.0 + 10.0 * rng.normal();
  for (auto _ : state) benchmark::DoNotOptimize(waic(data, mu, sig, S).waic.estimate);
}
BENCHMARK(BM_Waic)->Arg(500)->Arg(2500);

}  // namespace
BENCHMARK_MAIN();
