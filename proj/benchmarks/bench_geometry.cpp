#include <benchmark/benchmark.h>

#include "bicx/geometry.hpp"
#include "bicx/rng.hpp"

using namespace bicx;

static void BM_Eigendecompose(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  RngStream rng(1);
  GramState g = gram_init(d);
  for (int k = 0; k < 3 * d; ++k) {
    Vector v(d);
    for (int i = 0; i < d; ++i) v[i] = rng.normal();
    g = gram_update(g, UnitVector::normalized(v));
  }
  for (auto _ : state) {
    auto out = eigendecompose(g);
    benchmark::DoNotOptimize(out.eigvals.data());
  }
}
BENCHMARK(BM_Eigendecompose)->Arg(2)->Arg(8)->Arg(32)->Arg(64);

static void BM_RankOneTailGain(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  RngStream rng(2);
  std::vector<UnitVector> dirs;
  for (int k = 0; k < d / 2; ++k) {
    Vector v = Vector::Unit(d, k);
    v[d - 1] = 0.1;
    dirs.push_back(UnitVector::normalized(v));
  }
  const Vector u = Vector::Unit(d, d - 2);
  for (auto _ : state) {
    auto rep = rank_one_tail_gain_check(dirs, u, 0.5);
    benchmark::DoNotOptimize(&rep);
  }
}
BENCHMARK(BM_RankOneTailGain)->Arg(4)->Arg(8);
