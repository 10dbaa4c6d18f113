#include <benchmark/benchmark.h>

#include "codim/lqoc.hpp"

namespace {

using namespace codim::lqoc;

LQProblem wave_problem(int N, int K) {
  LQProblem p;
  p.N = N;
  p.K = K;
  p.y1 = Eigen::VectorXd::Zero(p.state_dim());
  p.y1(0) = 0.1;
  return p;
}

void BM_Discretize(benchmark::State& state) {
  const auto p = wave_problem(6, static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(discretize(p));
}
BENCHMARK(BM_Discretize)->Arg(100)->Arg(200)->Arg(400);

void BM_KktSolve(benchmark::State& state) {
  const auto qp = discretize(wave_problem(static_cast<int>(state.range(0)), 200));
  for (auto _ : state) benchmark::DoNotOptimize(solve_endpoint_lq(qp));
}
BENCHMARK(BM_KktSolve)->Arg(4)->Arg(6)->Arg(12)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
