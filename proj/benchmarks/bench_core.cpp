#include <benchmark/benchmark.h>

#include <Eigen/Dense>

#include "bilstab/closed_loop.hpp"
#include "bilstab/data_record.hpp"
#include "bilstab/ellipsoid.hpp"
#include "bilstab/system.hpp"

using namespace bilstab;

namespace {

DataRecord demo_record() { return run_experiment(example_system(), 10, 1); }

void BM_Step(benchmark::State& state) {
  const BilinearSystem sys = example_system();
  Eigen::VectorXd x(2);
  x << 0.3, -0.2;
  for (auto _ : state) {
    x = step(sys, x, 0.1);
    benchmark::DoNotOptimize(x);
    x *= 0.5;  // keep the state bounded across iterations
  }
}
BENCHMARK(BM_Step);

void BM_Simulate(benchmark::State& state) {
  const BilinearSystem sys = example_system();
  Eigen::VectorXd x0(2);
  x0 << 0.1, -0.1;
  const std::vector<double> inputs(state.range(0), 0.05);
  for (auto _ : state) {
    auto trajectory = simulate(sys, x0, inputs);
    benchmark::DoNotOptimize(trajectory);
  }
}
BENCHMARK(BM_Simulate)->Arg(10)->Arg(200);

void BM_RunExperiment(benchmark::State& state) {
  const BilinearSystem sys = example_system();
  for (auto _ : state) {
    auto record = run_experiment(sys, 10, 1);
    benchmark::DoNotOptimize(record);
  }
}
BENCHMARK(BM_RunExperiment);

void BM_NdMatrix(benchmark::State& state) {
  const DataRecord record = demo_record();
  Eigen::MatrixXd gram = record.X0 * record.X0.transpose();
  const Eigen::MatrixXd gk = record.X0.transpose() * gram.inverse();
  const ClosedLoopData cl = make_closed_loop(record, gk);
  const Ellipsoid e{Eigen::MatrixXd::Identity(2, 2)};
  const Eigen::MatrixXd d = example_system().D;
  Eigen::VectorXd x(2);
  x << 0.4, 0.2;
  for (auto _ : state) {
    auto nd = nd_matrix(cl, e, d, x);
    benchmark::DoNotOptimize(nd);
  }
}
BENCHMARK(BM_NdMatrix);

void BM_SampleEllipsoid(benchmark::State& state) {
  const Ellipsoid e{Eigen::MatrixXd::Identity(2, 2)};
  for (auto _ : state) {
    auto samples = sample_ellipsoid(e, state.range(0), SampleMode::kBoundary, 7);
    benchmark::DoNotOptimize(samples);
  }
}
BENCHMARK(BM_SampleEllipsoid)->Arg(100)->Arg(1000);

}  // namespace

BENCHMARK_MAIN();
