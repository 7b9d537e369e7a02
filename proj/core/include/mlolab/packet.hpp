#pragma once

#include <cstdint>

#include "mlolab/trace.hpp"

namespace mlolab {

struct Packet {
  std::uint32_t id = 0;
  Micros arrival_us = 0;
  std::uint32_t size_bits = 12000;
};

// One delivered packet. Only packets whose ACK completes inside the trace
// produce a record, so depart_us never exceeds the trace duration.
struct PacketRecord {
  std::uint32_t packet_id = 0;
  int interface_used = 0;  // 0 = primary (or the sole SLO link), 1 = secondary
  Micros tx_start_us = 0;
  Micros depart_us = 0;
  Micros delay_us = 0;  // depart - arrival

  bool operator==(const PacketRecord&) const = default;
};

}  // namespace mlolab
