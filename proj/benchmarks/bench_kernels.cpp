#include <benchmark/benchmark.h>

#include <vector>

#include "motifset/evolution.hpp"
#include "motifset/network.hpp"
#include "motifset/topology.hpp"

using namespace motifset;

namespace {

// desk-profile shapes: 784 -> 256 -> 256 -> 10, epsilon 17
MotifTopology desk_topology(std::size_t m) {
  return build_topology(std::vector<std::size_t>{784, 256, 256, 10}, m, BlockDensitySpec::erdos_renyi(17), 42);
}

Matrix<double> batch(std::size_t rows, std::size_t cols) {
  Rng rng(7);
  Matrix<double> x(rows, cols);
  for (auto& v : x.values()) v = rng.uniform(-1.0, 1.0);
  return x;
}

Matrix<double> labels(std::size_t rows, std::size_t classes) {
  Matrix<double> y(rows, classes);
  for (std::size_t r = 0; r < rows; ++r) y(r, r % classes) = 1.0;
  return y;
}

NetworkOptions options(std::int64_t mode) {
  return NetworkOptions{Activation::relu, InitScheme::he_uniform, mode == 0 ? WeightMode::shared : WeightMode::independent};
}

void BM_Forward(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const Network net = init_network(desk_topology(m), options(state.range(1)), 1);
  const auto x = batch(64, 784);
  for (auto _ : state) benchmark::DoNotOptimize(forward(net, x));
  state.SetItemsProcessed(state.iterations() * 64);
}

void BM_TrainStep(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  Network net = init_network(desk_topology(m), options(state.range(1)), 1);
  const auto x = batch(64, 784);
  const auto y = labels(64, 10);
  for (auto _ : state) {
    const auto cache = forward(net, x);
    sgd_step(net, backward(net, cache, y), 0.01);
  }
  state.SetItemsProcessed(state.iterations() * 64);
}

void BM_BuildTopology(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const std::vector<std::size_t> sizes{784, 3000, 3000, 3000, 10};
  for (auto _ : state) benchmark::DoNotOptimize(build_topology(sizes, m, BlockDensitySpec::erdos_renyi(20), 3));
}

void BM_EvolveMagnitude(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  Network net = init_network(desk_topology(m), NetworkOptions{}, 1);
  EvolutionPolicy policy;
  policy.rng_seed = 5;
  Evolver<double> evolver(policy, net.layer_count());
  for (auto _ : state) benchmark::DoNotOptimize(evolver.evolve(net));
}

}  // namespace

BENCHMARK(BM_Forward)->ArgsProduct({{1, 2, 4}, {0, 1}})->ArgNames({"m", "independent"});
BENCHMARK(BM_TrainStep)->ArgsProduct({{1, 2, 4}, {0, 1}})->ArgNames({"m", "independent"});
BENCHMARK(BM_BuildTopology)->Arg(1)->Arg(2)->Arg(4)->ArgName("m")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EvolveMagnitude)->Arg(1)->Arg(2)->Arg(4)->ArgName("m");

BENCHMARK_MAIN();
