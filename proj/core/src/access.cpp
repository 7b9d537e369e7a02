#include "mlolab/access.hpp"

#include <cassert>
#include <stdexcept>

namespace mlolab {

const char* to_string(AccessMode mode) {
  switch (mode) {
    case AccessMode::Slo: return "SLO";
    case AccessMode::Str: return "STR";
    case AccessMode::Nstr: return "NSTR";
    case AccessMode::StrPlus: return "STR+";
  }
  return "?";
}

std::optional<AccessMode> parse_access_mode(std::string_view name) {
  if (name == "SLO") return AccessMode::Slo;
  if (name == "STR") return AccessMode::Str;
  if (name == "NSTR") return AccessMode::Nstr;
  if (name == "STR+") return AccessMode::StrPlus;
  return std::nullopt;
}

int interface_count(AccessMode mode) {
  return mode == AccessMode::Slo ? 1 : 2;
}

std::uint64_t backoff_stream_seed(std::uint64_t backoff_seed, int iface) {
  return derive_seed(backoff_seed, {0x626bULL, static_cast<std::uint64_t>(iface)});
}

Coordinator::Coordinator(AccessMode mode, std::vector<InterfaceState> ifaces,
                         std::span<const Packet> packets, const PhyParams& phy,
                         std::vector<McsConfig> mcs_per_iface, std::uint32_t cw,
                         std::size_t queue_capacity, std::uint64_t backoff_seed,
                         std::uint64_t tiebreak_seed, StrAllocation str_allocation)
    : mode_(mode),
      ifaces_(std::move(ifaces)),
      packets_(packets),
      phy_(phy),
      mcs_(std::move(mcs_per_iface)),
      cw_(cw),
      queue_capacity_(queue_capacity),
      str_allocation_(str_allocation),
      tiebreak_rng_(tiebreak_seed) {
  if (ifaces_.empty() || ifaces_.size() > 2 || mcs_.size() != ifaces_.size()) {
    throw std::invalid_argument("Coordinator: bad interface setup");
  }
  if (cw_ == 0) {
    throw std::invalid_argument("Coordinator: contention window must be positive");
  }
  duration_us_ = ifaces_[0].channel->duration_us();
  for (std::size_t i = 0; i < ifaces_.size(); ++i) {
    backoff_rng_.emplace_back(
        backoff_stream_seed(backoff_seed, static_cast<int>(i)));
  }
}

std::size_t Coordinator::in_flight() const {
  std::size_t n = 0;
  for (const auto& it : ifaces_) n += it.allocated_packet.has_value();
  return n;
}

Micros Coordinator::exchange_us(int iface, std::uint32_t pkt) const {
  return exchange_airtime(phy_, mcs_[iface], packets_[pkt].size_bits);
}

void Coordinator::enqueue_or_drop(std::uint32_t pkt) {
  if (queue_.size() >= queue_capacity_) {
    ++dropped_;
    return;
  }
  queue_.push_back(pkt);
}

void Coordinator::allocate_and_contend(int iface, std::uint32_t pkt, Micros t,
                                       std::vector<SchedEvent>& out) {
  InterfaceState& it = ifaces_[iface];
  assert(!it.allocated_packet && !it.backoff);
  it.allocated_packet = pkt;
  // SLO and NSTR contention acts for the head packet, so the counter is the
  // packet's own stream value; a packet the secondary carries away simply
  // leaves its value unconsumed. STR contention belongs to the interface the
  // packet landed on, which draws its own stream in order.
  const std::uint32_t counter = mode_ == AccessMode::Str
                                    ? draw_backoff(cw_, backoff_rng_[iface])
                                    : draw_for_packet(pkt);
  start_instance_with(iface, t, counter, out);
}

std::uint32_t Coordinator::draw_for_packet(std::uint32_t pkt) {
  while (primary_draws_.size() <= pkt) {
    primary_draws_.push_back(draw_backoff(cw_, backoff_rng_[0]));
  }
  return primary_draws_[pkt];
}

void Coordinator::start_instance(int iface, Micros t,
                                 std::vector<SchedEvent>& out) {
  start_instance_with(iface, t, draw_backoff(cw_, backoff_rng_[iface]), out);
}

void Coordinator::start_instance_with(int iface, Micros t,
                                      std::uint32_t counter_slots,
                                      std::vector<SchedEvent>& out) {
  InterfaceState& it = ifaces_[iface];
  BackoffInstance inst;
  inst.cw = cw_;
  inst.counter_slots = counter_slots;
  inst.created_at_us = t;
  inst.state = BackoffState::Counting;
  inst.expiry_us = next_backoff_expiry(*it.channel, t, inst.counter_slots, phy_);
  it.backoff = inst;
  it.backoff_seq = ++next_seq_;
  if (inst.expiry_us) {
    out.push_back({SchedEvent::Kind::BackoffExpiry, *inst.expiry_us, iface,
                   it.backoff_seq});
  }
  // No expiry inside the trace: the instance stays pending forever and any
  // attached packet counts as in flight at the end of the run.
}

void Coordinator::start_tx(int iface, std::uint32_t pkt, Micros t,
                           std::vector<SchedEvent>& out) {
  InterfaceState& it = ifaces_[iface];
  assert(t >= it.busy_until_us);
  it.allocated_packet = pkt;
  it.tx_start_us = t;
  const Micros end = t + exchange_us(iface, pkt);
  it.busy_until_us = end;
  if (end <= duration_us_) {
    out.push_back({SchedEvent::Kind::TxEnd, end, iface, 0});
  }
  // A transfer still in the air when the trace ends is never delivered.
}

void Coordinator::on_arrival(Micros t, std::uint32_t pkt,
                             std::vector<SchedEvent>& out) {
  Event ev{Event::Kind::Arrival, t, pkt, 0, 0};
  switch (mode_) {
    case AccessMode::Slo: slo_dispatch(ev, out); break;
    case AccessMode::Str: str_dispatch(ev, out); break;
    case AccessMode::Nstr: nstr_dispatch(ev, out); break;
    case AccessMode::StrPlus: strp_dispatch(ev, out); break;
  }
}

void Coordinator::on_backoff_expiry(Micros t, int iface, std::uint64_t seq,
                                    std::vector<SchedEvent>& out) {
  InterfaceState& it = ifaces_[iface];
  if (!it.backoff || it.backoff_seq != seq ||
      it.backoff->state != BackoffState::Counting) {
    return;  // stale event, the instance was consumed or replaced
  }
  Event ev{Event::Kind::BackoffExpiry, t, 0, iface, seq};
  switch (mode_) {
    case AccessMode::Slo: slo_dispatch(ev, out); break;
    case AccessMode::Str: str_dispatch(ev, out); break;
    case AccessMode::Nstr: nstr_dispatch(ev, out); break;
    case AccessMode::StrPlus: strp_dispatch(ev, out); break;
  }
}

void Coordinator::on_tx_end(Micros t, int iface, std::vector<SchedEvent>& out) {
  InterfaceState& it = ifaces_[iface];
  const std::uint32_t pkt = *it.allocated_packet;
  records_.push_back({pkt, iface, it.tx_start_us, t,
                      t - packets_[pkt].arrival_us});
  delivered_bits_ += packets_[pkt].size_bits;
  it.allocated_packet.reset();

  Event ev{Event::Kind::TxEnd, t, pkt, iface, 0};
  switch (mode_) {
    case AccessMode::Slo: slo_dispatch(ev, out); break;
    case AccessMode::Str: str_dispatch(ev, out); break;
    case AccessMode::Nstr: nstr_dispatch(ev, out); break;
    case AccessMode::StrPlus: strp_dispatch(ev, out); break;
  }
}

// Single link: one packet at a time owns the interface, every packet draws a
// fresh backoff, the queue drains in order.
void Coordinator::slo_dispatch(const Event& ev, std::vector<SchedEvent>& out) {
  InterfaceState& it = ifaces_[0];
  switch (ev.kind) {
    case Event::Kind::Arrival:
      if (!it.allocated_packet) {
        allocate_and_contend(0, ev.pkt, ev.t, out);
      } else {
        enqueue_or_drop(ev.pkt);
      }
      break;
    case Event::Kind::BackoffExpiry:
      it.backoff.reset();
      start_tx(0, *it.allocated_packet, ev.t, out);
      break;
    case Event::Kind::TxEnd:
      if (!queue_.empty()) {
        const std::uint32_t next = queue_.front();
        queue_.pop_front();
        allocate_and_contend(0, next, ev.t, out);
      }
      break;
  }
}

int Coordinator::pick_str_interface(Micros t) {
  const bool free0 = !ifaces_[0].allocated_packet;
  const bool free1 = !ifaces_[1].allocated_packet;
  assert(free0 || free1);
  if (free0 != free1) return free0 ? 0 : 1;

  if (str_allocation_ == StrAllocation::PreferIdleChannel) {
    const auto busy_now = [&](int i) {
      const OccupancyTrace& tr = *ifaces_[i].channel;
      const std::size_t s = static_cast<std::size_t>(t / kSamplePeriodUs);
      return s < tr.sample_count() && tr.busy_at_sample(s);
    };
    const bool b0 = busy_now(0);
    const bool b1 = busy_now(1);
    if (b0 != b1) return b0 ? 1 : 0;
  }
  return static_cast<int>(tiebreak_rng_.uniform_int(2));
}

// Two independent links. Allocation happens on arrival (free interface) or
// when a transmission ends with the queue non-empty; with both links free the
// choice is a dedicated random stream, never the backoff stream.
void Coordinator::str_dispatch(const Event& ev, std::vector<SchedEvent>& out) {
  switch (ev.kind) {
    case Event::Kind::Arrival: {
      if (ifaces_[0].allocated_packet && ifaces_[1].allocated_packet) {
        enqueue_or_drop(ev.pkt);
        break;
      }
      allocate_and_contend(pick_str_interface(ev.t), ev.pkt, ev.t, out);
      break;
    }
    case Event::Kind::BackoffExpiry: {
      InterfaceState& it = ifaces_[ev.iface];
      it.backoff.reset();
      start_tx(ev.iface, *it.allocated_packet, ev.t, out);
      break;
    }
    case Event::Kind::TxEnd:
      if (!queue_.empty()) {
        const std::uint32_t next = queue_.front();
        queue_.pop_front();
        allocate_and_contend(ev.iface, next, ev.t, out);
      }
      break;
  }
}

// Non-simultaneous transmit/receive pair: only the primary contends. The
// secondary never backs off; it can only fire alongside a primary expiry.
void Coordinator::nstr_dispatch(const Event& ev, std::vector<SchedEvent>& out) {
  switch (ev.kind) {
    case Event::Kind::Arrival:
      if (!ifaces_[0].allocated_packet) {
        allocate_and_contend(0, ev.pkt, ev.t, out);
      } else {
        enqueue_or_drop(ev.pkt);
      }
      break;
    case Event::Kind::BackoffExpiry:
      nstr_txop(ev.t, out);
      break;
    case Event::Kind::TxEnd:
      if (ev.iface == 0 && !queue_.empty()) {
        const std::uint32_t next = queue_.front();
        queue_.pop_front();
        allocate_and_contend(0, next, ev.t, out);
      }
      break;
  }
}

void Coordinator::nstr_txop(Micros t_expiry, std::vector<SchedEvent>& out) {
  InterfaceState& primary = ifaces_[0];
  InterfaceState& secondary = ifaces_[1];
  const std::uint32_t lead = *primary.allocated_packet;
  primary.backoff.reset();
  primary.allocated_packet.reset();

  // Both links fire when the secondary sat idle for a full PIFS and a second
  // packet is waiting; the two transfers always carry distinct packets.
  if (!queue_.empty() && !secondary.allocated_packet &&
      t_expiry >= secondary.busy_until_us &&
      pifs_idle(*secondary.channel, t_expiry, phy_)) {
    const std::uint32_t second = queue_.front();
    queue_.pop_front();
    start_tx(1, second, t_expiry, out);
  }
  start_tx(0, lead, t_expiry, out);
}

// One packetless backoff instance per link whenever traffic waits; the first
// expiry claims the head of the queue. An instance expiring into an empty
// queue parks at zero and can serve a later arrival without a fresh draw,
// provided its channel stayed idle for at least a DIFS since expiring.
void Coordinator::strp_dispatch(const Event& ev, std::vector<SchedEvent>& out) {
  switch (ev.kind) {
    case Event::Kind::Arrival:
      enqueue_or_drop(ev.pkt);
      strp_service_held(ev.t, out);
      strp_replenish(ev.t, out);
      break;
    case Event::Kind::BackoffExpiry: {
      InterfaceState& it = ifaces_[ev.iface];
      if (queue_.empty()) {
        it.backoff->state = BackoffState::Expired;
        it.backoff->expiry_us = ev.t;  // anchor for the idle-since check
        break;
      }
      const std::uint32_t pkt = queue_.front();
      queue_.pop_front();
      it.backoff.reset();
      start_tx(ev.iface, pkt, ev.t, out);
      break;
    }
    case Event::Kind::TxEnd:
      strp_replenish(ev.t, out);
      break;
  }
}

void Coordinator::strp_service_held(Micros t, std::vector<SchedEvent>& out) {
  for (std::size_t i = 0; i < ifaces_.size() && !queue_.empty(); ++i) {
    InterfaceState& it = ifaces_[i];
    if (it.allocated_packet || !it.backoff ||
        it.backoff->state != BackoffState::Expired) {
      continue;
    }
    const Micros expired_at = *it.backoff->expiry_us;
    if (t - expired_at >= phy_.difs_us && it.channel->is_idle(expired_at, t)) {
      const std::uint32_t pkt = queue_.front();
      queue_.pop_front();
      it.backoff.reset();
      start_tx(static_cast<int>(i), pkt, t, out);
    } else {
      // The parked grant went stale; contend again from scratch.
      it.backoff.reset();
      start_instance(static_cast<int>(i), t, out);
    }
  }
}

void Coordinator::strp_replenish(Micros t, std::vector<SchedEvent>& out) {
  if (queue_.empty()) return;
  for (std::size_t i = 0; i < ifaces_.size(); ++i) {
    InterfaceState& it = ifaces_[i];
    if (!it.allocated_packet && !it.backoff) {
      start_instance(static_cast<int>(i), t, out);
    }
  }
}

}  // namespace mlolab
