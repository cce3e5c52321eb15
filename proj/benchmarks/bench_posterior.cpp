#include <benchmark/benchmark.h>

#include "bicx/posterior.hpp"
#include "bicx/rng.hpp"

using namespace bicx;

namespace {

ParticleCloud make_cloud(int n, int d, std::uint64_t seed) {
  RngStream rng(seed);
  Matrix pts(n, d);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < d; ++k) pts(i, k) = rng.normal();
  }
  return cloud_from_points(std::move(pts), seed);
}

}  // namespace

static void BM_ReweightSignThreshold(benchmark::State& state) {
  const auto cloud = make_cloud(static_cast<int>(state.range(0)), 3, 1);
  SignThreshold st;
  st.coef = 2.0 * Vector::Unit(3, 1);
  st.noise_sd = 1.5;
  st.sign = +1;
  for (auto _ : state) {
    auto out = reweight(cloud, st);
    benchmark::DoNotOptimize(out.log_weights.data());
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_ReweightSignThreshold)->RangeMultiplier(4)->Range(1000, 64000)->Complexity();

static void BM_ZMap(benchmark::State& state) {
  const auto cloud = make_cloud(static_cast<int>(state.range(0)), 3, 2);
  Matrix basis(3, 2);
  basis.setZero();
  basis(0, 0) = 1;
  basis(1, 1) = 1;
  const Vector nv = Vector::Constant(2, 0.02);
  const Vector y = Vector::Constant(2, 0.3);
  for (auto _ : state) {
    auto z = z_map(y, cloud, basis, nv);
    benchmark::DoNotOptimize(z.data());
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_ZMap)->RangeMultiplier(4)->Range(1000, 64000)->Complexity();

static void BM_TiltLikelihood(benchmark::State& state) {
  const auto cloud = make_cloud(static_cast<int>(state.range(0)), 3, 3);
  Matrix basis(3, 1);
  basis.setZero();
  basis(0, 0) = 1;
  TiltFunction tilt;
  RngStream rng(4);
  tilt.z_points = Matrix(256, 1);
  tilt.f_values = Vector(256);
  for (int i = 0; i < 256; ++i) {
    tilt.z_points(i, 0) = rng.normal();
    tilt.f_values[i] = rng.uniform(0.2, 1.0);
  }
  tilt.weights = Vector::Constant(256, 1.0 / 256.0);
  tilt.lower_bound = 0.2;
  const Vector nv = Vector::Constant(1, 0.05);
  for (auto _ : state) {
    auto lik = tilt_likelihood(cloud, tilt, basis, nv, 4, 7);
    benchmark::DoNotOptimize(lik.data());
  }
}
BENCHMARK(BM_TiltLikelihood)->Arg(500)->Arg(2000)->Arg(8000);
