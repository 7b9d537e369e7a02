#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "mlolab/access.hpp"
#include "mlolab/trace.hpp"

namespace mlolab {

// p95 is only reported once the pool is large enough for the nearest-rank
// estimate to mean anything.
inline constexpr std::size_t kMinSamplesForP95 = 20;

struct SummaryStats {
  double mean_delay_us = 0.0;
  std::optional<double> p95_delay_us;
  std::uint64_t n = 0;
};

// Nearest-rank percentile: sorted ascending, 1-based rank ceil(0.95 * n),
// computed in integer arithmetic so bin edges never wobble.
Micros nearest_rank_p95(std::vector<Micros> pool);

// Mean and p95 over a pooled delay sample. Throws std::invalid_argument on
// an empty pool; p95 is absent below kMinSamplesForP95 samples.
SummaryStats summarize(std::vector<Micros> pooled_delays_us);

// One results row: a (mode, bin pair, load) cell of the experiment grid.
struct DelaySummary {
  AccessMode mode = AccessMode::Slo;
  int primary_bin_pct = 0;
  std::optional<int> secondary_bin_pct;
  double load_fraction = 0.0;
  std::uint32_t runs_retained = 0;
  std::uint32_t runs_discarded = 0;
  std::uint64_t n_packets = 0;
  std::optional<double> mean_delay_us;
  std::optional<double> p95_delay_us;
  double throughput_mbps = 0.0;
  bool warning = false;  // set when every run of the cell was discarded
};

}  // namespace mlolab
