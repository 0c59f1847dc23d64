#include <benchmark/benchmark.h>

#include "linimp/integrator.hpp"
#include "linimp/lift.hpp"
#include "linimp/problems.hpp"

namespace {

void BM_LiftFloat(benchmark::State& state) {
  const int s = static_cast<int>(state.range(0));
  const auto nodes = linimp::NodeSet::gauss(s);
  linimp::SpectrumSpec spec;
  for (int k = 0; k < s; ++k) spec.lambda.emplace_back(0.9 * (k + 0.5) / s - 0.45, 0.0);
  for (auto _ : state) benchmark::DoNotOptimize(linimp::solve_placement(nodes, spec));
}
BENCHMARK(BM_LiftFloat)->Arg(1)->Arg(2)->Arg(4)->Arg(6)->Arg(8);

void BM_LiftExact(benchmark::State& state) {
  const int s = static_cast<int>(state.range(0));
  const auto nodes = linimp::NodeSet::uniform(s);
  std::vector<linimp::Rational> lambda;
  for (int k = 0; k < s; ++k) lambda.emplace_back(k, s + 1);
  for (auto _ : state) benchmark::DoNotOptimize(linimp::solve_placement_exact(nodes, lambda));
}
BENCHMARK(BM_LiftExact)->Arg(2)->Arg(4)->Arg(6)->Arg(8);

void BM_StepNls1d(benchmark::State& state) {
  const linimp::Grid1D grid{-50.0, 50.0, static_cast<int>(state.range(0))};
  const auto problem = linimp::nls_1d(grid, 4.0);
  const auto method = linimp::preset(linimp::Preset::order2_gauss);
  linimp::LinimpStepper<linimp::cplx> stepper(method, problem, 0.01);
  linimp::Vector<linimp::cplx> u = problem.initial;
  linimp::GammaMatrix<linimp::cplx> gamma(method.stages(), problem.dim());
  const auto n0 = problem.multiplier(u);
  for (int i = 0; i < method.stages(); ++i) gamma.row(i) = n0.transpose();
  std::int64_t k = 0;
  for (auto _ : state) {
    stepper.step(u, gamma, k++);
    benchmark::DoNotOptimize(u.data());
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_StepNls1d)->Arg(256)->Arg(1024)->Arg(4096)->Unit(benchmark::kMicrosecond);

void BM_StepNls2d(benchmark::State& state) {
  const auto problem = linimp::nls_2d(static_cast<int>(state.range(0)));
  const auto method = linimp::preset(linimp::Preset::order2_gauss);
  linimp::LinimpStepper<linimp::cplx> stepper(method, problem, 0.01);
  linimp::Vector<linimp::cplx> u = problem.initial;
  linimp::GammaMatrix<linimp::cplx> gamma(method.stages(), problem.dim());
  const auto n0 = problem.multiplier(u);
  for (int i = 0; i < method.stages(); ++i) gamma.row(i) = n0.transpose();
  std::int64_t k = 0;
  for (auto _ : state) {
    stepper.step(u, gamma, k++);
    benchmark::DoNotOptimize(u.data());
  }
}
BENCHMARK(BM_StepNls2d)->Arg(10)->Arg(20)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
