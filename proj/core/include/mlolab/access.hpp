#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "mlolab/dcf.hpp"
#include "mlolab/packet.hpp"
#include "mlolab/phy.hpp"
#include "mlolab/rng.hpp"
#include "mlolab/trace.hpp"

namespace mlolab {

enum class AccessMode { Slo, Str, Nstr, StrPlus };

const char* to_string(AccessMode mode);
std::optional<AccessMode> parse_access_mode(std::string_view name);
int interface_count(AccessMode mode);

// Tie-break policy when MLO-STR finds both interfaces free: pure random, or
// prefer the link whose channel is instantaneously idle (random again when
// the channels agree).
enum class StrAllocation { Random, PreferIdleChannel };

enum class InterfaceRole { Single, Primary, Secondary };

struct InterfaceState {
  TracePtr channel;
  InterfaceRole role = InterfaceRole::Single;
  Micros busy_until_us = 0;
  Micros tx_start_us = 0;
  std::optional<std::uint32_t> allocated_packet;
  std::optional<BackoffInstance> backoff;
  std::uint64_t backoff_seq = 0;  // guards the event queue against stale expiries
};

// Future event requested by the coordinator; the engine owns the clock and
// the queue, the coordinator owns the rules.
struct SchedEvent {
  enum class Kind { BackoffExpiry, TxEnd };
  Kind kind;
  Micros t_us;
  int iface;
  std::uint64_t seq = 0;  // BackoffExpiry only
};

// Per-mode channel access rules over one or two interfaces and a shared FIFO
// queue. The environment never reacts to this BSS, so backoff expiries are
// computed against the trace the moment the counter is drawn.
class Coordinator {
 public:
  Coordinator(AccessMode mode, std::vector<InterfaceState> ifaces,
              std::span<const Packet> packets, const PhyParams& phy,
              std::vector<McsConfig> mcs_per_iface, std::uint32_t cw,
              std::size_t queue_capacity, std::uint64_t backoff_seed,
              std::uint64_t tiebreak_seed, StrAllocation str_allocation);

  void on_arrival(Micros t, std::uint32_t pkt, std::vector<SchedEvent>& out);
  void on_backoff_expiry(Micros t, int iface, std::uint64_t seq,
                         std::vector<SchedEvent>& out);
  void on_tx_end(Micros t, int iface, std::vector<SchedEvent>& out);

  const std::vector<PacketRecord>& records() const { return records_; }
  std::uint64_t dropped() const { return dropped_; }
  std::size_t queued() const { return queue_.size(); }
  std::size_t in_flight() const;
  std::uint64_t delivered_bits() const { return delivered_bits_; }
  const InterfaceState& iface(int i) const { return ifaces_[i]; }

 private:
  struct Event {
    enum class Kind { Arrival, BackoffExpiry, TxEnd } kind;
    Micros t;
    std::uint32_t pkt = 0;
    int iface = 0;
    std::uint64_t seq = 0;
  };

  void slo_dispatch(const Event& ev, std::vector<SchedEvent>& out);
  void str_dispatch(const Event& ev, std::vector<SchedEvent>& out);
  void nstr_dispatch(const Event& ev, std::vector<SchedEvent>& out);
  // NSTR transmit opportunity at a primary backoff expiry: ships one packet
  // on the primary and, when the secondary channel was PIFS-idle and another
  // packet waits, a second distinct packet on the secondary.
  void nstr_txop(Micros t_expiry, std::vector<SchedEvent>& out);
  void strp_dispatch(const Event& ev, std::vector<SchedEvent>& out);

  void enqueue_or_drop(std::uint32_t pkt);
  void allocate_and_contend(int iface, std::uint32_t pkt, Micros t,
                            std::vector<SchedEvent>& out);
  // The counter value packet `pkt` owns: position pkt of the primary stream.
  // SLO and NSTR contend on behalf of the head packet, so identifying draws
  // by packet keeps the two modes aligned draw-for-draw even when a secondary
  // transmission removes a packet (its value is skipped, not shifted).
  std::uint32_t draw_for_packet(std::uint32_t pkt);
  void start_instance(int iface, Micros t, std::vector<SchedEvent>& out);
  void start_instance_with(int iface, Micros t, std::uint32_t counter_slots,
                           std::vector<SchedEvent>& out);
  void start_tx(int iface, std::uint32_t pkt, Micros t,
                std::vector<SchedEvent>& out);
  // Claims for held-at-zero expired instances, then fresh instances on every
  // free interface while the queue is non-empty.
  void strp_service_held(Micros t, std::vector<SchedEvent>& out);
  void strp_replenish(Micros t, std::vector<SchedEvent>& out);
  int pick_str_interface(Micros t);
  Micros exchange_us(int iface, std::uint32_t pkt) const;

  AccessMode mode_;
  std::vector<InterfaceState> ifaces_;
  std::span<const Packet> packets_;
  PhyParams phy_;
  std::vector<McsConfig> mcs_;
  std::uint32_t cw_;
  std::size_t queue_capacity_;
  StrAllocation str_allocation_;
  Micros duration_us_;

  std::deque<std::uint32_t> queue_;
  std::vector<RngStream> backoff_rng_;  // one stream per interface
  std::vector<std::uint32_t> primary_draws_;  // stream 0 values, by position
  RngStream tiebreak_rng_;
  std::uint64_t next_seq_ = 0;

  std::vector<PacketRecord> records_;
  std::uint64_t dropped_ = 0;
  std::uint64_t delivered_bits_ = 0;
};

// Backoff stream seed for one interface. Kept stable across modes so that a
// coupled comparison feeds every mode's primary link the identical draw
// sequence an SLO run would consume. In SLO and NSTR each draw additionally
// belongs to a specific packet (see draw_for_packet), which is what makes the
// NSTR <= SLO per-packet departure guarantee exact rather than statistical.
std::uint64_t backoff_stream_seed(std::uint64_t backoff_seed, int iface);

}  // namespace mlolab
