#pragma once

#include <cstdint>
#include <optional>

#include "mlolab/phy.hpp"
#include "mlolab/rng.hpp"
#include "mlolab/trace.hpp"

namespace mlolab {

// Contention window is fixed: no exponential backoff, every transmission
// succeeds, so the draw range never widens.
inline constexpr std::uint32_t kDefaultCw = 16;

enum class BackoffState { SeekingDifs, Counting, Frozen, Expired };

struct BackoffInstance {
  std::uint32_t counter_slots = 0;
  std::uint32_t cw = kDefaultCw;
  BackoffState state = BackoffState::SeekingDifs;
  Micros created_at_us = 0;
  // Precomputed against the trace at creation; nullopt means the trace ends
  // before the countdown can complete.
  std::optional<Micros> expiry_us;
};

// Uniform draw on [0, cw-1]. Throws std::invalid_argument for cw = 0.
std::uint32_t draw_backoff(std::uint32_t cw, RngStream& rng);

// Replays DCF contention against a fixed busy/idle timeline:
//
//   1. find the earliest u >= t_now with the channel idle through [u, u+DIFS)
//   2. the countdown starts at u+DIFS with slot boundaries every slot_us
//   3. the counter decrements at the end of each fully idle slot
//   4. a busy sample intruding on a slot freezes the counter; the search in
//      step 1 restarts from the end of that busy period
//   5. expiry is the instant the counter reaches zero; a counter drawn as
//      zero expires at u+DIFS
//
// Returns nullopt when the trace ends before expiry. Throws
// std::out_of_range when t_now lies beyond the trace.
std::optional<Micros> next_backoff_expiry(const OccupancyTrace& trace,
                                          Micros t_now_us,
                                          std::uint32_t counter_slots,
                                          const PhyParams& phy);

// True when the channel was idle for the PIFS interval ending at t.
// Requires t >= PIFS and t <= trace duration.
bool pifs_idle(const OccupancyTrace& trace, Micros t_us, const PhyParams& phy);

}  // namespace mlolab
