#include <benchmark/benchmark.h>

#include "moenet/config.hpp"
#include "moenet/sweep.hpp"

using namespace moenet;

namespace {

struct Setup {
  GridAxes axes;
  GridBase base;
};

const Setup& setup() {
  static const Setup s = [] {
    const auto c = load_config(MOENET_SOURCE_DIR "/configs/default.json");
    Setup out{grid_axes(c), grid_base(c, nullptr)};
    out.axes.cluster_sizes = {64};
    out.axes.bandwidth_multipliers = {1.0 / 3, 1.0};
    return out;
  }();
  return s;
}

void BM_GridSerial(benchmark::State& state) {
  const auto& s = setup();
  for (auto _ : state) benchmark::DoNotOptimize(run_grid_serial(s.axes, s.base));
  state.counters["cells"] = double(grid_cells(s.axes).size());
}

void BM_GridParallel(benchmark::State& state) {
  const auto& s = setup();
  for (auto _ : state) benchmark::DoNotOptimize(run_grid(s.axes, s.base));
  state.counters["cells"] = double(grid_cells(s.axes).size());
}

}  // namespace

BENCHMARK(BM_GridSerial)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_GridParallel)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
