#pragma once

#include <cstdint>
#include <stdexcept>

#include "mlolab/trace.hpp"

namespace mlolab {

// 802.11 timing and frame-length constants. Defaults model an 80 MHz
// 802.11ax/be link exchanging 12 kbit frames with legacy-rate ACKs.
struct PhyParams {
  std::uint32_t t_phy_legacy_us = 20;  // legacy preamble
  std::uint32_t t_phy_he_su_us = 52;   // HE single-user preamble
  std::uint32_t sigma_us = 16;         // OFDM symbol duration
  std::uint32_t sigma_legacy_us = 4;   // legacy symbol duration
  std::uint32_t sifs_us = 16;
  std::uint32_t difs_us = 30;
  std::uint32_t slot_us = 10;
  std::uint32_t l_sf_bits = 32;    // service field
  std::uint32_t l_mh_bits = 272;   // MAC header
  std::uint32_t l_tb_bits = 6;     // tail bits
  std::uint32_t l_ack_bits = 112;
  std::uint32_t l_frame_bits = 12000;
};

struct McsConfig {
  std::uint32_t data_bits_per_symbol = 1950;
  std::uint32_t legacy_bits_per_symbol = 96;
};

constexpr std::uint64_t ceil_div(std::uint64_t a, std::uint64_t b) {
  return (a + b - 1) / b;
}

// Preamble plus the OFDM symbols needed for service field, MAC header,
// payload and tail bits.
constexpr Micros data_frame_airtime(const PhyParams& phy, const McsConfig& mcs,
                                    std::uint64_t payload_bits) {
  if (payload_bits == 0) {
    throw std::invalid_argument("data_frame_airtime: zero payload");
  }
  const std::uint64_t bits =
      phy.l_sf_bits + phy.l_mh_bits + payload_bits + phy.l_tb_bits;
  return phy.t_phy_he_su_us + ceil_div(bits, mcs.data_bits_per_symbol) * phy.sigma_us;
}

constexpr Micros ack_airtime(const PhyParams& phy, const McsConfig& mcs) {
  const std::uint64_t bits = phy.l_sf_bits + phy.l_ack_bits + phy.l_tb_bits;
  return phy.t_phy_legacy_us +
         ceil_div(bits, mcs.legacy_bits_per_symbol) * phy.sigma_legacy_us;
}

// A full transfer holds the channel for data, SIFS and the ACK.
constexpr Micros exchange_airtime(const PhyParams& phy, const McsConfig& mcs,
                                  std::uint64_t payload_bits) {
  return data_frame_airtime(phy, mcs, payload_bits) + phy.sifs_us +
         ack_airtime(phy, mcs);
}

constexpr Micros pifs_us(const PhyParams& phy) { return phy.sifs_us + phy.slot_us; }

// Sanity checks for user supplied overrides; every field must be positive.
void validate(const PhyParams& phy);
void validate(const McsConfig& mcs);

// With defaults the data frame flies in 164 us, the ACK in 28 us, and the
// whole exchange in 208 us; those values anchor every delay bound downstream.
static_assert(data_frame_airtime(PhyParams{}, McsConfig{}, 12000) == 164);
static_assert(ack_airtime(PhyParams{}, McsConfig{}) == 28);
static_assert(exchange_airtime(PhyParams{}, McsConfig{}, 12000) == 208);
static_assert(pifs_us(PhyParams{}) == 26);

}  // namespace mlolab
