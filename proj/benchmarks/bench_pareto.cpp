#include <benchmark/benchmark.h>

#include "blmol/pareto.hpp"
#include "blmol/rng.hpp"

using namespace blmol;

namespace {

std::vector<ObjectiveVector> random_points(std::size_t n, std::size_t m, std::uint64_t seed) {
  RandomStream rng = derive_stream(seed, "bench");
  std::vector<ObjectiveVector> pts;
  pts.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> v(m);
    for (double& x : v) x = rng.next_double();
    pts.emplace_back(std::move(v));
  }
  return pts;
}

void BM_NonDominatedSort(benchmark::State& state) {
  const auto pts = random_points(static_cast<std::size_t>(state.range(0)), 3, 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(non_dominated_sort(pts));
  }
}
BENCHMARK(BM_NonDominatedSort)->Arg(50)->Arg(200)->Arg(800);

void BM_Hypervolume2D(benchmark::State& state) {
  const auto pts = random_points(static_cast<std::size_t>(state.range(0)), 2, 2);
  const ObjectiveVector ref({1.2, 1.2});
  for (auto _ : state) {
    benchmark::DoNotOptimize(hypervolume(pts, ref));
  }
}
BENCHMARK(BM_Hypervolume2D)->Arg(20)->Arg(100);

void BM_Hypervolume3D(benchmark::State& state) {
  const auto pts = random_points(static_cast<std::size_t>(state.range(0)), 3, 3);
  const ObjectiveVector ref({1.2, 1.2, 1.2});
  for (auto _ : state) {
    benchmark::DoNotOptimize(hypervolume(pts, ref));
  }
}
BENCHMARK(BM_Hypervolume3D)->Arg(20)->Arg(100);

void BM_CrowdingDistance(benchmark::State& state) {
  const auto pts = random_points(static_cast<std::size_t>(state.range(0)), 2, 4);
  for (auto _ : state) {
    benchmark::DoNotOptimize(crowding_distance(pts));
  }
}
BENCHMARK(BM_CrowdingDistance)->Arg(100);

}  // namespace

BENCHMARK_MAIN();
