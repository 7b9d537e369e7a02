#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "mlolab/access.hpp"
#include "mlolab/packet.hpp"
#include "mlolab/phy.hpp"
#include "mlolab/trace.hpp"

namespace mlolab {

// Poisson arrivals over one trace worth of time. Arrival instants are
// strictly increasing integer microseconds.
struct ArrivalSchedule {
  std::vector<Packet> packets;
  Micros duration_us = 0;
  double rate_pkts_per_s = 0.0;
};

struct SimConfig {
  AccessMode mode = AccessMode::Slo;
  TracePtr primary_trace;
  TracePtr secondary_trace;  // required for the MLO modes
  PhyParams phy{};
  McsConfig mcs{};
  std::optional<McsConfig> mcs_secondary;  // defaults to mcs
  std::uint32_t cw = kDefaultCw;
  std::size_t queue_capacity = 10000;
  std::uint64_t backoff_seed = 1;
  std::uint64_t tiebreak_seed = 2;
  StrAllocation str_allocation = StrAllocation::Random;
};

// Runs whose delivery ratio drops below this are discarded as saturated
// before delays are pooled.
inline constexpr double kDeliveryFilterThreshold = 0.95;

struct RunResult {
  std::vector<PacketRecord> records;
  std::uint64_t generated = 0;
  std::uint64_t delivered = 0;
  std::uint64_t dropped = 0;
  std::uint64_t in_queue_at_end = 0;
  std::uint64_t in_flight_at_end = 0;
  std::uint64_t delivered_bits = 0;
  double delivered_fraction = 1.0;  // defined as 1 when nothing was generated
  bool discarded = false;
};

ArrivalSchedule gen_poisson_arrivals(double rate_pkts_per_s, Micros duration_us,
                                     std::uint64_t seed,
                                     std::uint32_t size_bits = 12000);

// Replays one schedule against one trace (pair) under the given mode.
// Deterministic: identical inputs produce identical results.
RunResult run(const SimConfig& config, const ArrivalSchedule& schedule);

// Saturation throughput in bits per second: every run keeps the queue
// non-empty for the whole trace, the result is averaged over the pairs.
// SLO ignores the secondary half of each pair.
double full_buffer_throughput(AccessMode mode, const SimConfig& base,
                              const std::vector<std::pair<TracePtr, TracePtr>>& pairs);

// Same arrivals and trace pair across modes. With coupled = true every mode
// shares the base backoff seed, so each primary interface sees the exact
// draw stream of the SLO run -- and under SLO and NSTR packet j always
// contends with position j of that stream, so the two modes match
// draw-for-draw per packet; otherwise each mode gets its own stream.
std::map<AccessMode, RunResult> compare_modes(const TracePtr& primary,
                                              const TracePtr& secondary,
                                              const ArrivalSchedule& schedule,
                                              const SimConfig& base,
                                              std::span<const AccessMode> modes,
                                              bool coupled = true);

bool is_retained(const RunResult& result);

// Marks and drops runs that delivered less than 95% of generated packets.
std::vector<RunResult> filter_saturated(std::vector<RunResult> results);

}  // namespace mlolab
