#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "wipt/allocate.hpp"
#include "wipt/channel.hpp"
#include "wipt/multiuser.hpp"
#include "wipt/region.hpp"

using namespace wipt;

namespace {

ChannelRealization channel(int n) {
  const FrequencyGrid grid{5.18e9, 1e6, n, 1e6};
  return random_channel(11, grid, 1, 1, 18);
}

void BM_Waterfill(benchmark::State& state) {
  const auto g = channel(static_cast<int>(state.range(0))).siso_gains();
  for (auto _ : state) benchmark::DoNotOptimize(waterfill(g, 0.01, 1.0));
}
BENCHMARK(BM_Waterfill)->RangeMultiplier(4)->Range(4, 256);

void BM_ModifiedWaterfill(benchmark::State& state) {
  const auto g = channel(static_cast<int>(state.range(0))).siso_gains();
  double top = 0.0;
  for (double x : g) top = std::max(top, x);
  for (auto _ : state) benchmark::DoNotOptimize(modified_waterfill(g, 0.01, 1.0, 0.7 * top, 1.0));
}
BENCHMARK(BM_ModifiedWaterfill)->RangeMultiplier(4)->Range(4, 256);

void BM_Superposed(benchmark::State& state) {
  const auto ch = channel(static_cast<int>(state.range(0)));
  const auto g = ch.siso_gains();
  const double floor = 0.5 * waterfill(g, 0.01, 1.0).rate;
  const DiodeNonlinearParams hv{0.17, 19.145};
  for (auto _ : state) {
    benchmark::DoNotOptimize(superposed_waveform_allocate(ch, 0.01, 1.0, floor, hv));
  }
}
BENCHMARK(BM_Superposed)->Arg(2)->Arg(4)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_GridSearch(benchmark::State& state) {
  const SaturationParams s(5365.0, 0.2308e-3, 10.73e-3);
  const auto sc = random_scenario(3, 2, 1, static_cast<int>(state.range(0)), 1.0, 1e-5, 1e-4, s);
  for (auto _ : state) benchmark::DoNotOptimize(gridsearch_frontier(sc));
}
BENCHMARK(BM_GridSearch)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
