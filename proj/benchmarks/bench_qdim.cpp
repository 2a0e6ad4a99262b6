#include <benchmark/benchmark.h>

#include <cmath>

#include "qdim/estimator.hpp"
#include "qdim/fields.hpp"
#include "qdim/measure.hpp"
#include "qdim/tree.hpp"
#include "qdim/ultrametric.hpp"

using namespace qdim;

static void BM_CirculantFbm(benchmark::State& state) {
  const auto grid = Grid::uniform(1, static_cast<std::size_t>(state.range(0)), 0.0, 1.0);
  const auto spec = FieldSpec::fbm(0.5);
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(sample_field(spec, grid, seed++, SamplingMethod::Circulant1d));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_CirculantFbm)->RangeMultiplier(4)->Range(1 << 12, 1 << 20)->Complexity(benchmark::oNLogN);

static void BM_CholeskyFbm(benchmark::State& state) {
  const auto grid = Grid::uniform(1, static_cast<std::size_t>(state.range(0)), 0.0, 1.0);
  const auto spec = FieldSpec::fbm(0.5);
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(sample_field(spec, grid, seed++, SamplingMethod::ExactCholesky));
}
BENCHMARK(BM_CholeskyFbm)->Arg(64)->Arg(256)->Arg(1024);

static void BM_ImageMomentCurve(benchmark::State& state) {
  const int K = static_cast<int>(state.range(0));
  const auto atoms = discretize(MeasureModel::multinomial(2, {0.7, 0.3}), K);
  const auto grid = Grid::uniform(1, std::size_t{1} << K, 0.0, 1.0);
  const auto field = sample_field(FieldSpec::fbm(0.8), grid, 1, SamplingMethod::Circulant1d);
  const auto im = image_measure(field, atoms);
  for (auto _ : state) benchmark::DoNotOptimize(image_moment_curve(im, 2.0, 0, 16));
}
BENCHMARK(BM_ImageMomentCurve)->Arg(12)->Arg(16);

static void BM_PartialJ(benchmark::State& state) {
  const auto tm = TreeMeasure::from_model(MeasureModel::multinomial(2, {0.7, 0.3}), static_cast<int>(state.range(0)));
  const auto f = [](int l) { return std::pow(2.0, 0.6 * l); };
  for (auto _ : state) benchmark::DoNotOptimize(partial_J(tm, f, 2.0, 2));
}
BENCHMARK(BM_PartialJ)->DenseRange(8, 14, 2);

static void BM_EnumerateOrbits(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(enumerate_orbits(2, static_cast<int>(state.range(0)), 3));
}
BENCHMARK(BM_EnumerateOrbits)->DenseRange(2, 4);

static void BM_ExceptionCount(benchmark::State& state) {
  const std::vector<double> x{0.1234, 0.3}, y{0.1235, 0.3001};
  for (auto _ : state) benchmark::DoNotOptimize(exception_count(x, y, 10));
}
BENCHMARK(BM_ExceptionCount);
BENCHMARK_MAIN();
