#pragma once

#include <array>
#include <cstdint>

#include "blesim/bits.hpp"
#include "blesim/errors.hpp"
#include "blesim/phy.hpp"

namespace blesim {

inline constexpr std::uint32_t kAdvertisingAccessAddress = 0x8E89BED6;
inline constexpr std::uint32_t kAdvertisingCrcInit = 0x555555;

// x^24 + x^10 + x^9 + x^6 + x^4 + x^3 + x + 1, bit i = coefficient of x^i.
inline constexpr std::uint32_t kCrcPolynomial = 0x00065B;

inline constexpr std::size_t kMinPduBits = 16;
inline constexpr std::size_t kMaxPduBits = 2056;
inline constexpr unsigned kAccessAddressBits = 32;
inline constexpr unsigned kCrcBits = 24;

struct LinkLayerPacket {
  std::uint32_t access_address = kAdvertisingAccessAddress;
  BitVector pdu;
  std::uint32_t crc = 0;
  PhyMode phy_mode = PhyMode::LE1M;
};

inline void check_pdu_length(std::size_t bits) {
  if (bits < kMinPduBits || bits > kMaxPduBits)
    throw PduLengthError("PDU length " + std::to_string(bits) + " outside [16, 2056] bits");
}

// Clocks `payload` (in transmission order) through the CRC register. Bit i
// of the returned word is register position i; position 23 goes on air first.
inline std::uint32_t crc24(const BitVector& payload, std::uint32_t init = kAdvertisingCrcInit) {
  std::uint32_t state = init & 0xFFFFFF;
  for (std::uint8_t bit : payload) {
    const std::uint32_t feedback = bit ^ ((state >> 23) & 1U);
    state = (state << 1) & 0xFFFFFF;
    if (feedback) state ^= kCrcPolynomial;
  }
  return state;
}

// On-air bits of a CRC word: position 23 first.
inline BitVector crc_bits(std::uint32_t crc) {
  BitVector out;
  out.append_word_msb_first(crc, kCrcBits);
  return out;
}

inline LinkLayerPacket make_packet(BitVector pdu, PhyMode mode,
                                   std::uint32_t access_address = kAdvertisingAccessAddress,
                                   std::uint32_t crc_init = kAdvertisingCrcInit) {
  check_pdu_length(pdu.size());
  LinkLayerPacket p;
  p.access_address = access_address;
  p.crc = crc24(pdu, crc_init);
  p.pdu = std::move(pdu);
  p.phy_mode = mode;
  return p;
}

// XORs `bits` with the x^7 + x^4 + 1 whitening sequence. Register position 0
// starts at 1 and positions 1..6 hold the channel index, MSB in position 1.
// Applying it twice restores the input.
inline BitVector whiten(const BitVector& bits, ChannelIndex channel) {
  std::array<std::uint8_t, 7> pos{};
  pos[0] = 1;
  for (unsigned i = 0; i < 6; ++i) pos[1 + i] = (channel.index() >> (5 - i)) & 1U;

  BitVector out(bits.size());
  for (std::size_t n = 0; n < bits.size(); ++n) {
    const std::uint8_t key = pos[6];
    out[n] = bits[n] ^ key;
    std::array<std::uint8_t, 7> next{};
    next[0] = key;
    for (unsigned i = 1; i < 7; ++i) next[i] = pos[i - 1];
    next[4] = pos[3] ^ key;
    pos = next;
  }
  return out;
}

// Alternating preamble whose first bit equals the access-address LSB, so the
// alternation runs on into the address.
inline BitVector make_preamble(PhyMode mode, std::uint32_t access_address) {
  if (is_coded(mode)) throw ModeError("coded preamble is a fixed 80-symbol pattern");
  BitVector out;
  std::uint8_t b = access_address & 1U;
  for (unsigned i = 0; i < preamble_bits(mode); ++i, b ^= 1) out.push_back(b);
  return out;
}

inline std::size_t uncoded_packet_bits(PhyMode mode, std::size_t pdu_bits) {
  return preamble_bits(mode) + kAccessAddressBits + pdu_bits + kCrcBits;
}

// preamble || access address || whiten(pdu || crc).
inline BitVector assemble_uncoded(const LinkLayerPacket& packet, ChannelIndex channel) {
  if (is_coded(packet.phy_mode)) throw ModeError("assemble_uncoded needs LE1M or LE2M");
  check_pdu_length(packet.pdu.size());

  BitVector body = packet.pdu;
  body.append(crc_bits(packet.crc));

  BitVector out = make_preamble(packet.phy_mode, packet.access_address);
  out.append_word(packet.access_address, kAccessAddressBits);
  out.append(whiten(body, channel));
  return out;
}

enum class PacketStatus { Valid, BadAccessAddress, BadCrc };

// Access address is checked first; the CRC is only evaluated when it matches.
// `pdu_and_crc` is already de-whitened.
inline PacketStatus validate_packet(std::uint32_t aa_rx, std::uint32_t aa_expected,
                                    const BitVector& pdu_and_crc,
                                    std::uint32_t crc_init = kAdvertisingCrcInit) {
  if (pdu_and_crc.size() < kCrcBits + kMinPduBits)
    throw LengthError("PDU+CRC shorter than 40 bits");
  if (aa_rx != aa_expected) return PacketStatus::BadAccessAddress;

  const std::size_t n = pdu_and_crc.size() - kCrcBits;
  std::uint32_t received = 0;
  for (unsigned i = 0; i < kCrcBits; ++i) received = (received << 1) | pdu_and_crc[n + i];
  return crc24(pdu_and_crc.slice(0, n), crc_init) == received ? PacketStatus::Valid
                                                              : PacketStatus::BadCrc;
}

}  // namespace blesim
