#include <benchmark/benchmark.h>

#include "codim/geometry.hpp"
#include "codim/pde.hpp"

namespace {

using namespace codim::pde;

void BM_WaveGramian1D(benchmark::State& state) {
  const int N = static_cast<int>(state.range(0));
  const GridSpec g = GridSpec::wave(Box::interval(1.0), std::max(64, 8 * N), 1);
  const auto omega = Region::intervals({{0.2, 0.8}});
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        observability_gramian(Equation::Wave, g, PotentialField::zero(), omega, 2.5, N));
  }
}
BENCHMARK(BM_WaveGramian1D)->Arg(10)->Arg(20)->Arg(40)->Unit(benchmark::kMillisecond);

void BM_HeatGramian1D(benchmark::State& state) {
  const GridSpec g = GridSpec::interval(1.0, 160, 0.0, Scheme::ImplicitTrapezoid);
  const auto omega = Region::intervals({{0.2, 0.8}});
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        observability_gramian(Equation::Heat, g, PotentialField::zero(), omega, 2.5, 20));
  }
}
BENCHMARK(BM_HeatGramian1D)->Unit(benchmark::kMillisecond);

void BM_VelocityGramian2D(benchmark::State& state) {
  const auto sq = codim::geometry::Domain2D::rectangle({0, 0}, {1, 1});
  const GridSpec g = GridSpec::wave(Box::rectangle(1, 1), 32, 32);
  const auto omega = Region::planar(codim::geometry::ControlRegion::frame(sq, 0.1));
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        velocity_observability_gramian(g, PotentialField::zero(), omega, 4.0, 6));
  }
}
BENCHMARK(BM_VelocityGramian2D)->Unit(benchmark::kMillisecond);

void BM_SpectralWaveEvaluate(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  SpectralWave sw(Box::rectangle(1, 1), n, n);
  const Eigen::MatrixXd y0 = Eigen::MatrixXd::Random(n, n);
  sw.set_data(y0, Eigen::MatrixXd::Zero(n, n));
  Eigen::MatrixXd y, yt;
  for (auto _ : state) {
    sw.evaluate(0.37, &y, &yt);
    benchmark::DoNotOptimize(y.data());
  }
}
BENCHMARK(BM_SpectralWaveEvaluate)->Arg(64)->Arg(256);

}  // namespace

BENCHMARK_MAIN();
