#include "mlolab/dcf.hpp"

namespace mlolab {

std::uint32_t draw_backoff(std::uint32_t cw, RngStream& rng) {
  if (cw == 0) {
    throw std::invalid_argument("draw_backoff: contention window must be positive");
  }
  return static_cast<std::uint32_t>(rng.uniform_int(cw));
}

namespace {

// Earliest u >= t with the channel idle through [u, u+len), or nullopt when
// no such window fits in the trace. Any candidate inside a blocking busy run
// fails too, so the search can jump straight to the run's end.
std::optional<Micros> next_idle_window(const OccupancyTrace& trace, Micros t,
                                       Micros len) {
  const Micros duration = trace.duration_us();
  Micros u = t;
  for (;;) {
    if (u + len > duration) return std::nullopt;
    const auto run = trace.first_busy_run_overlapping(u, u + len);
    if (!run) return u;
    u = run->end_us;
  }
}

}  // namespace

std::optional<Micros> next_backoff_expiry(const OccupancyTrace& trace,
                                          Micros t_now_us,
                                          std::uint32_t counter_slots,
                                          const PhyParams& phy) {
  const Micros duration = trace.duration_us();
  if (t_now_us > duration) {
    throw std::out_of_range("next_backoff_expiry: t_now beyond trace end");
  }
  const Micros difs = phy.difs_us;
  const Micros slot = phy.slot_us;

  Micros t = t_now_us;
  std::uint32_t counter = counter_slots;
  for (;;) {
    const auto u = next_idle_window(trace, t, difs);
    if (!u) return std::nullopt;  // trace ends during the DIFS hunt

    // Count down slot by slot. Example with counter 5, busy on [60, 100):
    //
    //   0        30   40   50   60     100      130  140  150
    //   |  DIFS  | s5 | s4 | s3 | busy |  DIFS  | s2 | s1 |
    //                                ^ freeze at 2       ^ expiry
    Micros s = *u + difs;
    while (counter > 0) {
      if (s + slot > duration) return std::nullopt;
      const auto run = trace.first_busy_run_overlapping(s, s + slot);
      if (run) {
        // Busy sample inside the slot: freeze and hunt for a fresh DIFS
        // after the whole busy stretch.
        t = run->end_us;
        break;
      }
      --counter;
      s += slot;
    }
    if (counter == 0) return s;
  }
}

bool pifs_idle(const OccupancyTrace& trace, Micros t_us, const PhyParams& phy) {
  const Micros pifs = pifs_us(phy);
  if (t_us < pifs) {
    throw std::out_of_range("pifs_idle: t earlier than one PIFS");
  }
  return trace.is_idle(t_us - pifs, t_us);
}

}  // namespace mlolab
