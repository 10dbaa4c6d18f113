#include <random>

#include <benchmark/benchmark.h>

#include "codim/findim.hpp"

namespace {

using namespace codim::findim;

void BM_ControllabilityGramian(benchmark::State& state) {
  std::mt19937_64 rng(3);
  RandomFamilyOptions opts;
  opts.n_max = static_cast<int>(state.range(0));
  const auto rs = random_system(rng, opts);
  for (auto _ : state) benchmark::DoNotOptimize(controllability_gramian(rs.system, 200));
}
BENCHMARK(BM_ControllabilityGramian)->Arg(4)->Arg(6)->Arg(12);

void BM_VerifyEquivalences(benchmark::State& state) {
  std::mt19937_64 rng(5);
  const auto rs = random_system(rng, {});
  for (auto _ : state) benchmark::DoNotOptimize(verify_equivalences(rs.system, 200, 0.0, 1, 20));
}
BENCHMARK(BM_VerifyEquivalences);

}  // namespace

BENCHMARK_MAIN();
