#include <benchmark/benchmark.h>

#include "sparcs/linalg.hpp"
#include "sparcs/network.hpp"
#include "sparcs/rng.hpp"
#include "sparcs/spectral.hpp"

namespace {

sparcs::SpectralParams make_params(std::size_t width, std::size_t hidden_layers) {
  std::vector<std::size_t> sizes(hidden_layers + 2, width);
  sparcs::Rng rng(7);
  return sparcs::random_params(sparcs::LayerSizes(sizes), rng, 0.3);
}

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  sparcs::Rng rng(1);
  const auto a = sparcs::Matrix::gaussian(n, n, rng);
  const auto b = sparcs::Matrix::gaussian(n, n, rng);
  for (auto _ : state) benchmark::DoNotOptimize(sparcs::matmul(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n * n));
}
BENCHMARK(BM_Matmul)->Arg(32)->Arg(64)->Arg(128);

void BM_WeightBlocks(benchmark::State& state) {
  const auto p = make_params(static_cast<std::size_t>(state.range(0)), static_cast<std::size_t>(state.range(1)));
  for (auto _ : state) benchmark::DoNotOptimize(sparcs::weight_blocks(p));
}
BENCHMARK(BM_WeightBlocks)->Args({50, 2})->Args({200, 2})->Args({50, 5});

void BM_ForwardBackward(benchmark::State& state) {
  const auto p = make_params(static_cast<std::size_t>(state.range(0)), 2);
  sparcs::Rng rng(3);
  const auto x = sparcs::Matrix::gaussian(static_cast<std::size_t>(state.range(1)), p.layers[0], rng);
  const auto y = sparcs::Matrix::gaussian(x.rows(), p.layers[p.layers.depth()], rng);
  for (auto _ : state) {
    const auto trace = sparcs::forward(p, x);
    benchmark::DoNotOptimize(sparcs::backward(p, trace, sparcs::mse_gradient(trace.output(), y)));
  }
}
BENCHMARK(BM_ForwardBackward)->Args({50, 128})->Args({200, 1024});

void BM_DenseAdjacency(benchmark::State& state) {
  const auto p = make_params(8, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(sparcs::assemble_dense_adjacency(p));
}
BENCHMARK(BM_DenseAdjacency)->Arg(2)->Arg(5);

}  // namespace
BENCHMARK_MAIN();
