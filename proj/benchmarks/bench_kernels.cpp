#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "mlmcuq/estimators.hpp"
#include "mlmcuq/random.hpp"
#include "mlmcuq/sparse_quad.hpp"

namespace {

void BM_PhiloxFill(benchmark::State& state) {
  std::vector<double> buf(static_cast<std::size_t>(state.range(0)));
  std::uint32_t sample = 0;
  for (auto _ : state) {
    mlmcuq::RandomStream rs(42, {3, 1, sample++, 0});
    rs.fill_symmetric(buf.data(), buf.size());
    benchmark::DoNotOptimize(buf.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_PhiloxFill)->Arg(16)->Arg(1024);

void BM_RLejaNodes(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(mlmcuq::rleja_nodes(static_cast<std::size_t>(state.range(0))));
}
BENCHMARK(BM_RLejaNodes)->Arg(16)->Arg(128);

void BM_AllocateSamples(benchmark::State& state) {
  std::vector<double> v, w;
  for (int l = 0; l <= 8; ++l) {
    v.push_back(4.5e-4 * std::ldexp(1.0, -4 * l));
    w.push_back(160.0 * std::ldexp(1.0, l));
  }
  for (auto _ : state) benchmark::DoNotOptimize(mlmcuq::allocate_samples(1e-5, v, w));
}
BENCHMARK(BM_AllocateSamples);

}  // namespace

BENCHMARK_MAIN();
