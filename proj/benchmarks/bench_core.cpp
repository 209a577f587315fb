#include <benchmark/benchmark.h>

#include <random>

#include "cvxint/applications.hpp"
#include "cvxint/hulls.hpp"
#include "cvxint/integrator.hpp"
#include "cvxint/matcore.hpp"
#include "cvxint/oscillation.hpp"

using namespace cvxint;

namespace {

Mat random_matrix(std::mt19937_64& rng, std::size_t m, std::size_t n) {
  std::normal_distribution<double> d;
  Mat a(m, n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) a(i, j) = d(rng);
  return a;
}

void BM_SvdSmall(benchmark::State& state) {
  const auto k = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(1);
  const Mat a = random_matrix(rng, k, k);
  for (auto _ : state) benchmark::DoNotOptimize(svd_small(a));
}
BENCHMARK(BM_SvdSmall)->Arg(2)->Arg(3)->Arg(4)->Arg(8);

void BM_PatchEvaluate(benchmark::State& state) {
  const LinearConstraint c(Mat::identity(2), 0.0);
  const RankOnePair pair = RankOnePair::from_factors(Mat(2, 2), Vec{0, 1}, Vec{1, 0});
  const OscillationPatch p = make_patch(c, pair, 0.4, Box::unit(2), 0.1);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Vec x(2);
  for (auto _ : state) {
    x[0] = u(rng);
    x[1] = u(rng);
    benchmark::DoNotOptimize(p.evaluate(x));
  }
}
BENCHMARK(BM_PatchEvaluate);

void BM_EnvelopeSweep(benchmark::State& state) {
  const double h = 1.0 / static_cast<double>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(t4_envelope_comparison(-4.0, 4.0, h));
}
BENCHMARK(BM_EnvelopeSweep)->Arg(5)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_FieldSampling(benchmark::State& state) {
  T4Problem p;
  p.v.eta = Mat(2, 2);
  p.v.gamma = Vec(2, 0.0);
  p.grid = static_cast<std::size_t>(state.range(0));
  p.depth = 4;
  const T4Solution s = solve_t4(p);
  for (auto _ : state)
    benchmark::DoNotOptimize(s.field.with_construction(s.field.construction_ptr(), SampleOptions{}));
}
BENCHMARK(BM_FieldSampling)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
