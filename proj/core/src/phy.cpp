#include "mlolab/phy.hpp"

namespace mlolab {

void validate(const PhyParams& phy) {
  const auto positive = [](std::uint32_t v, const char* name) {
    if (v == 0) {
      throw std::invalid_argument(std::string("PhyParams: ") + name +
                                  " must be positive");
    }
  };
  positive(phy.t_phy_legacy_us, "t_phy_legacy_us");
  positive(phy.t_phy_he_su_us, "t_phy_he_su_us");
  positive(phy.sigma_us, "sigma_us");
  positive(phy.sigma_legacy_us, "sigma_legacy_us");
  positive(phy.sifs_us, "sifs_us");
  positive(phy.difs_us, "difs_us");
  positive(phy.slot_us, "slot_us");
  positive(phy.l_frame_bits, "l_frame_bits");
  // Service field, MAC header, tail and ACK lengths may legitimately be
  // zeroed in degenerate configurations, so they are not checked here.
}

void validate(const McsConfig& mcs) {
  if (mcs.data_bits_per_symbol == 0) {
    throw std::invalid_argument("McsConfig: data_bits_per_symbol must be positive");
  }
  if (mcs.legacy_bits_per_symbol == 0) {
    throw std::invalid_argument("McsConfig: legacy_bits_per_symbol must be positive");
  }
}

}  // namespace mlolab
