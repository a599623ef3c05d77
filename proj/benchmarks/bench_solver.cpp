#include <benchmark/benchmark.h>

#include "bilstab/design.hpp"
#include "bilstab/lmi.hpp"
#include "bilstab/maxdet.hpp"

using namespace bilstab;

namespace {

void BM_BuildDataLmi(benchmark::State& state) {
  const DataRecord record = run_experiment(example_system(), 10, 1);
  for (auto _ : state) {
    auto problem = build_data_lmi(record, {0.7637, 0.8, 1.0});
    benchmark::DoNotOptimize(problem);
  }
}
BENCHMARK(BM_BuildDataLmi);

void BM_SolveModel(benchmark::State& state) {
  const MaxDetProblem problem = build_model_lmi(example_system(), 0.8);
  for (auto _ : state) {
    auto solution = solve(problem);
    benchmark::DoNotOptimize(solution);
  }
}
BENCHMARK(BM_SolveModel);

void BM_SolveData(benchmark::State& state) {
  const DataRecord record = run_experiment(example_system(), 10, 1);
  const MaxDetProblem problem = build_data_lmi(record, {0.7637, 0.8, 1.0});
  for (auto _ : state) {
    auto solution = solve(problem);
    benchmark::DoNotOptimize(solution);
  }
}
BENCHMARK(BM_SolveData);

void BM_DesignDataBased(benchmark::State& state) {
  const DataRecord record = run_experiment(example_system(), 10, 1);
  const DesignConfig cfg = DesignConfig::single(0.7637, 0.8);
  for (auto _ : state) {
    auto result = design_data_based(record, cfg);
    benchmark::DoNotOptimize(result);
  }
}
BENCHMARK(BM_DesignDataBased);

}  // namespace
