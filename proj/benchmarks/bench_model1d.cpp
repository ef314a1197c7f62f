#include <benchmark/benchmark.h>

#include <array>
#include <vector>

#include "mlmcuq/model1d.hpp"
#include "mlmcuq/param_space.hpp"

namespace {

mlmcuq::Transmission1D default_problem() {
  mlmcuq::Transmission1D p;
  p.kappa2_left = p.kappa2_right = 4.0;
  p.interface_betas = mlmcuq::CoefficientSequence::paired_power_law(0.1, 3.0, 8, 1.0).betas;
  return p;
}

void BM_FemPointQoi(benchmark::State& state) {
  const auto problem = default_problem();
  const auto y = mlmcuq::ParamVector::constant(problem.dim(), 0.25);
  const std::array<double, 1> points{0.5};
  std::array<double, 1> out{};
  const int level = static_cast<int>(state.range(0));
  for (auto _ : state) {
    mlmcuq::point_qoi_into(problem, y, mlmcuq::QoiLevel::fem(level), points, out);
    benchmark::DoNotOptimize(out);
  }
  state.counters["dofs"] = static_cast<double>(mlmcuq::dofs_at_level(problem, level));
}
BENCHMARK(BM_FemPointQoi)->DenseRange(0, 8, 2);

void BM_ExactPointQoi(benchmark::State& state) {
  const auto problem = default_problem();
  const auto y = mlmcuq::ParamVector::constant(problem.dim(), -0.3);
  const std::array<double, 1> points{0.5};
  std::array<double, 1> out{};
  for (auto _ : state) {
    mlmcuq::point_qoi_into(problem, y, mlmcuq::QoiLevel::exact_solution(), points, out);
    benchmark::DoNotOptimize(out);
  }
}
BENCHMARK(BM_ExactPointQoi);

}  // namespace
