#include <benchmark/benchmark.h>

#include <random>

#include <stretchchaos/flows.hpp>
#include <stretchchaos/geometry.hpp>
#include <stretchchaos/symdyn.hpp>

using namespace sc;

namespace {

void bm_perron_golden(benchmark::State& state) {
  const auto m = SymbolMatrix::from_rows({{0, 1}, {1, 1}});
  for (auto _ : state) {
    benchmark::DoNotOptimize(perron_eigenvalue(m));
  }
}
BENCHMARK(bm_perron_golden);

void bm_perron_dense(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  SymbolMatrix m = SymbolMatrix::zero(n);
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> entry(0, 2);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m.at(i, j) = entry(rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(perron_eigenvalue(m));
  }
}
BENCHMARK(bm_perron_dense)->Arg(8)->Arg(32)->Arg(128);

void bm_grid_cut(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  GridMask m = GridMask::empty(n, n);
  std::mt19937_64 rng(5);
  std::bernoulli_distribution cell(0.5);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) m.set(i, j, cell(rng));
  for (auto _ : state) {
    benchmark::DoNotOptimize(grid_cut_check(m, CutDirection::LeftRight));
  }
}
BENCHMARK(bm_grid_cut)->Arg(64)->Arg(256);

void bm_volterra_step(benchmark::State& state) {
  VolterraParams p;
  const auto ph = volterra_phase(p, false);
  IntegratorOptions opts;
  opts.rel_tol = 1e-8;
  opts.abs_tol = 1e-10;
  const Point z0{2.0, 1.0};
  for (auto _ : state) {
    benchmark::DoNotOptimize(advance(ph.field, z0, 10.0, opts));
  }
}
BENCHMARK(bm_volterra_step);

void bm_orbit_period(benchmark::State& state) {
  VolterraParams p;
  const auto ph = volterra_phase(p, false);
  for (auto _ : state) {
    benchmark::DoNotOptimize(orbit_period(ph, ph.chi + 0.25));
  }
}
BENCHMARK(bm_orbit_period);

}  // namespace

BENCHMARK_MAIN();
