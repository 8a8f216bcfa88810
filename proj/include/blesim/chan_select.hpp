#pragma once

#include <algorithm>
#include <bitset>
#include <cstdio>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "blesim/errors.hpp"
#include "blesim/phy.hpp"

namespace blesim {

inline constexpr unsigned kDataChannels = 37;

// Set of usable data channels, kept sorted ascending.
class ChannelMap {
 public:
  ChannelMap() = default;

  static ChannelMap all() {
    ChannelMap m;
    for (unsigned c = 0; c < kDataChannels; ++c) m.used_.push_back(c);
    return m;
  }

  static ChannelMap from_channels(std::vector<unsigned> channels) {
    ChannelMap m;
    std::sort(channels.begin(), channels.end());
    channels.erase(std::unique(channels.begin(), channels.end()), channels.end());
    for (unsigned c : channels)
      if (c >= kDataChannels) throw MapError("channel " + std::to_string(c) + " is not a data channel");
    m.used_ = std::move(channels);
    return m;
  }

  // Bit c of the mask marks data channel c as used.
  static ChannelMap from_mask(std::uint64_t mask) {
    if (mask >> kDataChannels) throw MapError("mask has bits above channel 36");
    std::vector<unsigned> ch;
    for (unsigned c = 0; c < kDataChannels; ++c)
      if ((mask >> c) & 1U) ch.push_back(c);
    return from_channels(std::move(ch));
  }

  static ChannelMap from_hex(const std::string& hex) {
    std::size_t pos = 0;
    std::uint64_t mask = 0;
    try {
      mask = std::stoull(hex, &pos, 16);
    } catch (const std::exception&) {
      throw MapError("bad channel map '" + hex + "'");
    }
    if (pos != hex.size()) throw MapError("bad channel map '" + hex + "'");
    return from_mask(mask);
  }

  std::uint64_t mask() const noexcept {
    std::uint64_t m = 0;
    for (unsigned c : used_) m |= std::uint64_t{1} << c;
    return m;
  }

  // Ten hex digits, e.g. 1fffffffff for all channels.
  std::string to_hex() const {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%010llx", static_cast<unsigned long long>(mask()));
    return buf;
  }

  const std::vector<unsigned>& used() const noexcept { return used_; }
  std::size_t n_used() const noexcept { return used_.size(); }
  bool contains(unsigned c) const { return std::binary_search(used_.begin(), used_.end(), c); }

  void validate() const {
    if (used_.size() < 2) throw MapError("channel map needs at least two used channels");
  }

  friend bool operator==(const ChannelMap&, const ChannelMap&) = default;

 private:
  std::vector<unsigned> used_;
};

struct HopState {
  unsigned last_unmapped = 0;
  unsigned hop_increment = 5;
  std::uint16_t event_counter = 0;
  std::uint32_t access_address = 0;
};

// Channel selection algorithm #1.
inline std::pair<ChannelIndex, HopState> csa1_next(HopState state, const ChannelMap& map) {
  map.validate();
  if (state.hop_increment < 5 || state.hop_increment > 16) throw MapError("hop increment outside 5..16");
  const unsigned unmapped = (state.last_unmapped + state.hop_increment) % kDataChannels;
  state.last_unmapped = unmapped;
  state.event_counter = static_cast<std::uint16_t>(state.event_counter + 1);
  if (map.contains(unmapped)) return {ChannelIndex(unmapped), state};
  return {ChannelIndex(map.used()[unmapped % map.n_used()]), state};
}

namespace detail {

// Reverses the bit order within each byte of a 16-bit word.
constexpr std::uint16_t csa2_perm(std::uint16_t v) noexcept {
  auto rev8 = [](unsigned b) {
    unsigned r = 0;
    for (int i = 0; i < 8; ++i) r |= ((b >> i) & 1U) << (7 - i);
    return r;
  };
  return static_cast<std::uint16_t>((rev8(v >> 8) << 8) | rev8(v & 0xFF));
}

constexpr std::uint16_t csa2_mam(std::uint16_t a, std::uint16_t b) noexcept {
  return static_cast<std::uint16_t>((17U * a + b) & 0xFFFF);
}

}  // namespace detail

constexpr std::uint16_t csa2_channel_identifier(std::uint32_t access_address) noexcept {
  return static_cast<std::uint16_t>((access_address >> 16) ^ (access_address & 0xFFFF));
}

constexpr std::uint16_t csa2_prn_e(std::uint16_t event_counter, std::uint16_t channel_id) noexcept {
  std::uint16_t u = event_counter ^ channel_id;
  for (int round = 0; round < 3; ++round) u = detail::csa2_mam(detail::csa2_perm(u), channel_id);
  return u ^ channel_id;
}

// Channel selection algorithm #2 (stateless).
inline ChannelIndex csa2_select(std::uint16_t event_counter, std::uint32_t access_address,
                                const ChannelMap& map) {
  map.validate();
  const std::uint16_t prn_e = csa2_prn_e(event_counter, csa2_channel_identifier(access_address));
  const unsigned unmapped = prn_e % kDataChannels;
  if (map.contains(unmapped)) return ChannelIndex(unmapped);
  const auto remap = static_cast<std::size_t>((static_cast<std::uint32_t>(map.n_used()) * prn_e) >> 16);
  return ChannelIndex(map.used()[remap]);
}

}  // namespace blesim
