// Microbenchmarks for the hot paths: the backoff-expiry scanner, one-second
// replays under each access mode, trace synthesis, and delay summarization.

#include <benchmark/benchmark.h>

#include <memory>
#include <vector>

#include "mlolab/dcf.hpp"
#include "mlolab/rng.hpp"
#include "mlolab/sim.hpp"
#include "mlolab/stats.hpp"
#include "mlolab/trace.hpp"

namespace {

using namespace mlolab;

TracePtr bursty_trace(double occupancy, std::uint64_t seed) {
  SynthTraceParams params;
  params.target_occupancy = occupancy;
  params.mean_busy_us = 2000.0;
  return std::make_shared<OccupancyTrace>(synthesize_onoff(params, seed));
}

void BM_BackoffScan(benchmark::State& state) {
  const TracePtr trace = bursty_trace(0.4, 1);
  const PhyParams phy{};
  RngStream rng(2);
  std::vector<std::pair<Micros, std::uint32_t>> probes(1024);
  for (auto& [t, c] : probes) {
    t = rng.uniform_int(trace->duration_us());
    c = static_cast<std::uint32_t>(rng.uniform_int(16));
  }
  std::size_t i = 0;
  for (auto _ : state) {
    const auto& [t, c] = probes[i++ & 1023];
    benchmark::DoNotOptimize(next_backoff_expiry(*trace, t, c, phy));
  }
}
BENCHMARK(BM_BackoffScan);

void BM_SynthesizeSecond(benchmark::State& state) {
  SynthTraceParams params;
  params.target_occupancy = 0.4;
  std::uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(synthesize_onoff(params, ++seed));
  }
}
BENCHMARK(BM_SynthesizeSecond);

// One second of replay at a moderate offered load, per access mode.
void BM_Replay(benchmark::State& state) {
  const auto mode = static_cast<AccessMode>(state.range(0));
  SimConfig config;
  config.mode = mode;
  config.primary_trace = bursty_trace(0.4, 3);
  config.secondary_trace = bursty_trace(0.4, 4);
  config.backoff_seed = 5;
  config.tiebreak_seed = 6;
  const ArrivalSchedule schedule =
      gen_poisson_arrivals(1500.0, config.primary_trace->duration_us(), 7);
  std::uint64_t delivered = 0;
  for (auto _ : state) {
    const RunResult result = run(config, schedule);
    delivered += result.delivered;
    benchmark::DoNotOptimize(result.records.data());
  }
  state.counters["pkts/s"] = benchmark::Counter(
      static_cast<double>(delivered), benchmark::Counter::kIsRate);
}
BENCHMARK(BM_Replay)
    ->Arg(static_cast<int>(AccessMode::Slo))
    ->Arg(static_cast<int>(AccessMode::Str))
    ->Arg(static_cast<int>(AccessMode::Nstr))
    ->Arg(static_cast<int>(AccessMode::StrPlus));

void BM_FullBufferSlo(benchmark::State& state) {
  const TracePtr trace = bursty_trace(0.4, 8);
  SimConfig base;
  base.backoff_seed = 9;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        full_buffer_throughput(AccessMode::Slo, base, {{trace, trace}}));
  }
}
BENCHMARK(BM_FullBufferSlo);

void BM_Summarize(benchmark::State& state) {
  RngStream rng(10);
  std::vector<Micros> pool(1000000);
  for (Micros& d : pool) d = 208 + rng.uniform_int(5000);
  for (auto _ : state) {
    benchmark::DoNotOptimize(summarize(pool));  // copies, then sorts
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                          static_cast<std::int64_t>(pool.size()));
}
BENCHMARK(BM_Summarize);

}  // namespace

BENCHMARK_MAIN();
