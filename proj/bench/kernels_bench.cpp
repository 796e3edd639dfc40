#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "worldkit/kernels.hpp"

using namespace worldkit;

namespace {

struct Arena {
  int side;
  std::vector<std::uint8_t> cells;
  BlockedView view() const { return {side, side, cells}; }
};

Arena make_arena(int side) {
  Arena a{side, std::vector<std::uint8_t>(static_cast<std::size_t>(side * side), 0)};
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0, 1);
  for (int y = 0; y < side; ++y)
    for (int x = 0; x < side; ++x) {
      const bool border = x == 0 || y == 0 || x == side - 1 || y == side - 1;
      a.cells[static_cast<std::size_t>(y * side + x)] = border || (u(rng) < 0.05 && (x != side / 2 || y != side / 2));
    }
  return a;
}

template <auto Fn>
void BM_cast_rays(benchmark::State& state) {
  const auto arena = make_arena(64);
  const int rays = static_cast<int>(state.range(0));
  for (auto _ : state) {
    auto d = Fn(arena.view(), 32.5, 32.5, 17.0, 360.0, rays);
    benchmark::DoNotOptimize(d.data());
  }
  state.SetItemsProcessed(state.iterations() * rays);
}

struct Records {
  std::vector<Feature> features;
  std::vector<std::uint64_t> steps;
};

Records make_records(std::size_t n) {
  Records r;
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g(0, 1);
  for (std::size_t i = 0; i < n; ++i) {
    Feature f{};
    for (auto& v : f) v = g(rng);
    r.features.push_back(f);
    r.steps.push_back(i);
  }
  return r;
}

template <auto Fn>
void BM_score_records(benchmark::State& state) {
  const auto recs = make_records(static_cast<std::size_t>(state.range(0)));
  MemoryScoreInputs in{recs.features, recs.steps, recs.features.front(), recs.steps.size(), 0.7, 0.05};
  for (auto _ : state) {
    auto s = Fn(in);
    benchmark::DoNotOptimize(s.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <auto Fn>
void BM_power_spectrum(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<float> x(n);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<float> u(-1, 1);
  for (auto& v : x) v = u(rng);
  for (auto _ : state) {
    auto s = Fn(x, n);
    benchmark::DoNotOptimize(s.data());
  }
}

}  // namespace

BENCHMARK(BM_cast_rays<kernels::serial::cast_rays>)->Name("cast_rays/serial")->Arg(64)->Arg(1024)->Arg(16384);
BENCHMARK(BM_cast_rays<kernels::parallel::cast_rays>)->Name("cast_rays/parallel")->Arg(64)->Arg(1024)->Arg(16384);
BENCHMARK(BM_score_records<kernels::serial::score_records>)->Name("score_records/serial")->Arg(256)->Arg(4096)->Arg(65536);
BENCHMARK(BM_score_records<kernels::parallel::score_records>)->Name("score_records/parallel")->Arg(256)->Arg(4096)->Arg(65536);
BENCHMARK(BM_power_spectrum<kernels::serial::power_spectrum>)->Name("power_spectrum/serial")->Arg(1024)->Arg(4096);
BENCHMARK(BM_power_spectrum<kernels::parallel::power_spectrum>)->Name("power_spectrum/parallel")->Arg(1024)->Arg(4096);

BENCHMARK_MAIN();
