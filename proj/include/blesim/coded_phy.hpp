#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "blesim/bits.hpp"
#include "blesim/errors.hpp"
#include "blesim/ll_packet.hpp"
#include "blesim/phy.hpp"

namespace blesim {

inline constexpr unsigned kCodedPreambleSymbols = 80;
inline constexpr unsigned kCodingIndicatorBits = 2;
inline constexpr unsigned kTermBits = 3;
inline constexpr unsigned kFecBlock1Bits = kAccessAddressBits + kCodingIndicatorBits + kTermBits;

// Rate-1/2, constraint length 4 code. Generator bit j multiplies the input
// delayed by j: G0 = 1 + D + D^2 + D^3, G1 = 1 + D^2 + D^3.
inline constexpr unsigned kG0 = 0b1111;
inline constexpr unsigned kG1 = 0b1101;
inline constexpr unsigned kTrellisStates = 8;

struct FecCodeword {
  BitVector coded_bits;
};

namespace detail {

inline unsigned parity(unsigned v) noexcept { return __builtin_parity(v); }

// Register word for input `bit` entering encoder `state` (state bit j holds
// the input delayed by j+1).
inline unsigned encoder_register(unsigned state, unsigned bit) noexcept { return bit | (state << 1); }

inline std::array<std::uint8_t, 2> encoder_outputs(unsigned state, unsigned bit) noexcept {
  const unsigned reg = encoder_register(state, bit);
  return {static_cast<std::uint8_t>(parity(reg & kG0)), static_cast<std::uint8_t>(parity(reg & kG1))};
}

inline unsigned encoder_next(unsigned state, unsigned bit) noexcept {
  return encoder_register(state, bit) & (kTrellisStates - 1);
}

}  // namespace detail

// Encoder starts in the zero state. Callers append TERM bits (zeros) to flush.
inline FecCodeword fec_encode(const BitVector& bits) {
  FecCodeword cw;
  cw.coded_bits.reserve(2 * bits.size());
  unsigned state = 0;
  for (std::uint8_t b : bits) {
    const auto out = detail::encoder_outputs(state, b);
    cw.coded_bits.push_back(out[0]);
    cw.coded_bits.push_back(out[1]);
    state = detail::encoder_next(state, b);
  }
  return cw;
}

// S2: identity. S8: 0 -> 0011, 1 -> 1100.
inline BitVector pattern_map(const FecCodeword& codeword, CodingScheme scheme) {
  if (scheme == CodingScheme::S2) return codeword.coded_bits;
  BitVector out;
  out.reserve(4 * codeword.coded_bits.size());
  for (std::uint8_t b : codeword.coded_bits) {
    out.push_back(b);
    out.push_back(b);
    out.push_back(!b);
    out.push_back(!b);
  }
  return out;
}

enum class Termination {
  ZeroState,  // trace back from state 0 (flushed by TERM bits)
  BestState,  // trace back from the best surviving state
};

// Soft symbols are positive for 1. Pattern de-mapping is applied first.
inline BitVector viterbi_decode(std::span<const double> symbols, CodingScheme scheme,
                                Termination termination = Termination::ZeroState) {
  const std::size_t p = pattern_length(scheme);
  if (symbols.size() % (2 * p) != 0)
    throw LengthError("symbol count not divisible by 2*P");

  std::vector<double> coded(symbols.size() / p);
  for (std::size_t i = 0; i < coded.size(); ++i) {
    if (p == 1) {
      coded[i] = symbols[i];
    } else {
      const double* s = &symbols[4 * i];
      coded[i] = 0.25 * (s[0] + s[1] - s[2] - s[3]);
    }
  }

  const std::size_t steps = coded.size() / 2;
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  std::array<double, kTrellisStates> metric;
  metric.fill(kNegInf);
  metric[0] = 0.0;
  // survivor[t][s] = (previous state << 1) | input bit
  std::vector<std::array<std::uint8_t, kTrellisStates>> survivor(steps);

  for (std::size_t t = 0; t < steps; ++t) {
    const double c0 = coded[2 * t];
    const double c1 = coded[2 * t + 1];
    std::array<double, kTrellisStates> next;
    next.fill(kNegInf);
    for (unsigned s = 0; s < kTrellisStates; ++s) {
      if (metric[s] == kNegInf) continue;
      for (unsigned b = 0; b < 2; ++b) {
        const auto out = detail::encoder_outputs(s, b);
        const double m = metric[s] + (out[0] ? c0 : -c0) + (out[1] ? c1 : -c1);
        const unsigned ns = detail::encoder_next(s, b);
        if (m > next[ns]) {
          next[ns] = m;
          survivor[t][ns] = static_cast<std::uint8_t>((s << 1) | b);
        }
      }
    }
    metric = next;
  }

  unsigned state = 0;
  if (termination == Termination::BestState || metric[0] == kNegInf) {
    for (unsigned s = 1; s < kTrellisStates; ++s)
      if (metric[s] > metric[state]) state = s;
  }

  BitVector out(steps);
  for (std::size_t t = steps; t-- > 0;) {
    const std::uint8_t sv = survivor[t][state];
    out[t] = sv & 1U;
    state = sv >> 1;
  }
  return out;
}

inline BitVector viterbi_decode(const BitVector& hard, CodingScheme scheme,
                                Termination termination = Termination::ZeroState) {
  std::vector<double> soft(hard.size());
  for (std::size_t i = 0; i < hard.size(); ++i) soft[i] = hard[i] ? 1.0 : -1.0;
  return viterbi_decode(soft, scheme, termination);
}

// Coding indicator: 0b00 announces S8 for block 2, 0b01 announces S2.
inline std::uint32_t coding_indicator(CodingScheme s) noexcept { return s == CodingScheme::S8 ? 0b00 : 0b01; }

inline std::optional<CodingScheme> scheme_from_indicator(std::uint32_t ci) noexcept {
  switch (ci) {
    case 0b00: return CodingScheme::S8;
    case 0b01: return CodingScheme::S2;
    default: return std::nullopt;
  }
}

// Ten repetitions of 00111100.
inline BitVector coded_preamble() {
  BitVector out;
  for (unsigned r = 0; r < 10; ++r) out.append({0, 0, 1, 1, 1, 1, 0, 0});
  return out;
}

inline std::size_t coded_block1_symbols() { return kFecBlock1Bits * 2 * 4; }

inline std::size_t coded_block2_symbols(std::size_t pdu_bits, CodingScheme scheme) {
  return (pdu_bits + kCrcBits + kTermBits) * 2 * pattern_length(scheme);
}

inline std::size_t coded_packet_symbols(std::size_t pdu_bits, CodingScheme scheme) {
  return kCodedPreambleSymbols + coded_block1_symbols() + coded_block2_symbols(pdu_bits, scheme);
}

// preamble || S8(FEC(AA || CI || TERM1)) || S(FEC(whiten(PDU || CRC) || TERM2)).
inline BitVector assemble_coded(const LinkLayerPacket& packet, ChannelIndex channel) {
  if (!is_coded(packet.phy_mode)) throw ModeError("assemble_coded needs LE500K or LE125K");
  check_pdu_length(packet.pdu.size());
  const CodingScheme scheme = coding_scheme(packet.phy_mode);

  BitVector block1;
  block1.append_word(packet.access_address, kAccessAddressBits);
  block1.append_word(coding_indicator(scheme), kCodingIndicatorBits);
  block1.append_word(0, kTermBits);

  BitVector body = packet.pdu;
  body.append(crc_bits(packet.crc));
  BitVector block2 = whiten(body, channel);
  block2.append_word(0, kTermBits);

  BitVector out = coded_preamble();
  out.append(pattern_map(fec_encode(block1), CodingScheme::S8));
  out.append(pattern_map(fec_encode(block2), scheme));
  return out;
}

struct CodedHeader {
  std::uint32_t access_address = 0;
  std::optional<CodingScheme> scheme;
};

// Decodes FEC block 1 from its 296 soft symbols.
inline CodedHeader decode_coded_header(std::span<const double> block1) {
  if (block1.size() != coded_block1_symbols()) throw LengthError("block 1 must be 296 symbols");
  const BitVector bits = viterbi_decode(block1, CodingScheme::S8);
  CodedHeader h;
  h.access_address = static_cast<std::uint32_t>(bits.read_word(0, kAccessAddressBits));
  h.scheme = scheme_from_indicator(static_cast<std::uint32_t>(bits.read_word(kAccessAddressBits, kCodingIndicatorBits)));
  return h;
}

// Decodes FEC block 2 and strips TERM2; the result is still whitened.
inline BitVector decode_coded_payload(std::span<const double> block2, CodingScheme scheme) {
  const BitVector bits = viterbi_decode(block2, scheme);
  return bits.slice(0, bits.size() - kTermBits);
}

}  // namespace blesim
