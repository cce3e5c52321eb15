#include <benchmark/benchmark.h>

#include "bicx/rng.hpp"
#include "bicx/tilt.hpp"

using namespace bicx;

static void BM_BuildTilt(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  const int l = 3;
  RngStream rng(3);
  Matrix z(m, l);
  for (int i = 0; i < m / 2; ++i) {
    for (int k = 0; k < l; ++k) {
      z(i, k) = rng.normal();
      z(m / 2 + i, k) = -z(i, k) + 0.05 * rng.normal();
    }
  }
  const Vector w = Vector::Constant(m, 1.0 / m);
  for (auto _ : state) {
    auto tilt = build_tilt(z, w, 0.2, 1.0);
    benchmark::DoNotOptimize(tilt.f_values.data());
  }
}
BENCHMARK(BM_BuildTilt)->Arg(200)->Arg(2000)->Arg(8000)->Unit(benchmark::kMillisecond);

static void BM_EvalTiltBatch(benchmark::State& state) {
  RngStream rng(5);
  TiltFunction tilt;
  const int m = 4000;
  tilt.z_points = Matrix(m, 2);
  tilt.f_values = Vector(m);
  for (int i = 0; i < m; ++i) {
    tilt.z_points(i, 0) = rng.normal();
    tilt.z_points(i, 1) = rng.normal();
    tilt.f_values[i] = rng.uniform(0.1, 1.0);
  }
  tilt.weights = Vector::Constant(m, 1.0 / m);
  tilt.lower_bound = 0.1;
  Matrix q(static_cast<int>(state.range(0)), 2);
  for (int i = 0; i < q.rows(); ++i) {
    q(i, 0) = rng.normal();
    q(i, 1) = rng.normal();
  }
  for (auto _ : state) {
    auto f = eval_tilt_batch(tilt, q);
    benchmark::DoNotOptimize(f.data());
  }
}
BENCHMARK(BM_EvalTiltBatch)->Arg(1000)->Arg(8000);

BENCHMARK_MAIN();
