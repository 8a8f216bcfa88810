#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

#include "blesim/errors.hpp"

namespace blesim {

enum class PhyMode { LE1M, LE2M, LE500K, LE125K };

inline constexpr std::array<PhyMode, 4> kAllPhyModes = {PhyMode::LE1M, PhyMode::LE2M,
                                                        PhyMode::LE500K, PhyMode::LE125K};

// Pattern-mapper spreading for the coded PHY. S2 maps each FEC bit to one
// symbol, S8 to four.
enum class CodingScheme { S2, S8 };

constexpr bool is_coded(PhyMode m) noexcept { return m == PhyMode::LE500K || m == PhyMode::LE125K; }

constexpr unsigned preamble_bits(PhyMode m) noexcept {
  switch (m) {
    case PhyMode::LE1M: return 8;
    case PhyMode::LE2M: return 16;
    default: return 80;
  }
}

constexpr double symbol_rate_hz(PhyMode m) noexcept { return m == PhyMode::LE2M ? 2e6 : 1e6; }

constexpr CodingScheme coding_scheme(PhyMode m) {
  if (!is_coded(m)) throw ModeError("uncoded PHY has no coding scheme");
  return m == PhyMode::LE125K ? CodingScheme::S8 : CodingScheme::S2;
}

// Symbols per FEC output bit.
constexpr unsigned pattern_length(CodingScheme s) noexcept { return s == CodingScheme::S8 ? 4 : 1; }

// Information rate in bit/s.
constexpr double data_rate_bps(PhyMode m) {
  if (!is_coded(m)) return symbol_rate_hz(m);
  return symbol_rate_hz(m) / (2.0 * pattern_length(coding_scheme(m)));
}

inline std::string_view to_string(PhyMode m) noexcept {
  switch (m) {
    case PhyMode::LE1M: return "LE1M";
    case PhyMode::LE2M: return "LE2M";
    case PhyMode::LE500K: return "LE500K";
    case PhyMode::LE125K: return "LE125K";
  }
  return "?";
}

inline PhyMode parse_phy_mode(std::string_view s) {
  for (PhyMode m : kAllPhyModes)
    if (to_string(m) == s) return m;
  throw ParamError("unknown PHY mode '" + std::string(s) + "'");
}

// One of the 40 RF channels. Indices 0-36 are data channels, 37-39 are the
// advertising channels at 2402, 2426 and 2480 MHz.
class ChannelIndex {
 public:
  enum class Kind { Data, Advertising };

  constexpr explicit ChannelIndex(unsigned index) : index_(index) {
    if (index > 39) throw ParamError("channel index out of range 0..39");
  }

  constexpr unsigned index() const noexcept { return index_; }
  constexpr Kind kind() const noexcept { return index_ >= 37 ? Kind::Advertising : Kind::Data; }

  constexpr double center_frequency_mhz() const noexcept {
    switch (index_) {
      case 37: return 2402.0;
      case 38: return 2426.0;
      case 39: return 2480.0;
      default: break;
    }
    return index_ <= 10 ? 2404.0 + 2.0 * index_ : 2428.0 + 2.0 * (index_ - 11);
  }

  friend constexpr bool operator==(ChannelIndex, ChannelIndex) = default;

 private:
  unsigned index_;
};

}  // namespace blesim
