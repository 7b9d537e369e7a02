#include "mlolab/stats.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace mlolab {

Micros nearest_rank_p95(std::vector<Micros> pool) {
  if (pool.empty()) {
    throw std::invalid_argument("nearest_rank_p95: empty pool");
  }
  std::sort(pool.begin(), pool.end());
  // ceil(0.95 * n) as a 1-based rank, in integers.
  const std::size_t rank = (95 * pool.size() + 99) / 100;
  return pool[rank - 1];
}

SummaryStats summarize(std::vector<Micros> pooled_delays_us) {
  if (pooled_delays_us.empty()) {
    throw std::invalid_argument("summarize: empty pool");
  }
  SummaryStats stats;
  stats.n = pooled_delays_us.size();
  long double sum = 0.0L;
  for (Micros d : pooled_delays_us) sum += static_cast<long double>(d);
  stats.mean_delay_us =
      static_cast<double>(sum / static_cast<long double>(stats.n));
  if (stats.n >= kMinSamplesForP95) {
    stats.p95_delay_us =
        static_cast<double>(nearest_rank_p95(std::move(pooled_delays_us)));
  }
  return stats;
}

}  // namespace mlolab
