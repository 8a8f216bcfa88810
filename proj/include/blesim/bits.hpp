#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "blesim/errors.hpp"

namespace blesim {

// Ordered bit sequence in on-air transmission order. Multi-bit fields are
// appended LSB first, matching the link-layer convention.
class BitVector {
 public:
  BitVector() = default;
  explicit BitVector(std::size_t n, std::uint8_t value = 0) : bits_(n, value ? 1 : 0) {}
  BitVector(std::initializer_list<int> bits) {
    bits_.reserve(bits.size());
    for (int b : bits) bits_.push_back(b ? 1 : 0);
  }
  explicit BitVector(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {
    for (auto& b : bits_) b = b ? 1 : 0;
  }

  std::size_t size() const noexcept { return bits_.size(); }
  bool empty() const noexcept { return bits_.empty(); }
  void reserve(std::size_t n) { bits_.reserve(n); }

  std::uint8_t operator[](std::size_t i) const noexcept { return bits_[i]; }
  std::uint8_t& operator[](std::size_t i) noexcept { return bits_[i]; }

  void push_back(std::uint8_t b) { bits_.push_back(b ? 1 : 0); }
  void flip(std::size_t i) { bits_.at(i) ^= 1; }

  // Appends the low `width` bits of `value`, LSB first.
  void append_word(std::uint64_t value, unsigned width) {
    for (unsigned i = 0; i < width; ++i) bits_.push_back((value >> i) & 1U);
  }

  // Appends the low `width` bits of `value`, MSB first.
  void append_word_msb_first(std::uint64_t value, unsigned width) {
    for (unsigned i = width; i-- > 0;) bits_.push_back((value >> i) & 1U);
  }

  void append(const BitVector& other) {
    bits_.insert(bits_.end(), other.bits_.begin(), other.bits_.end());
  }

  // Reads `width` bits starting at `offset` as an LSB-first word.
  std::uint64_t read_word(std::size_t offset, unsigned width) const {
    if (offset + width > bits_.size()) throw LengthError("read past end of BitVector");
    std::uint64_t v = 0;
    for (unsigned i = 0; i < width; ++i) v |= std::uint64_t{bits_[offset + i]} << i;
    return v;
  }

  BitVector slice(std::size_t offset, std::size_t count) const {
    if (offset + count > bits_.size()) throw LengthError("slice past end of BitVector");
    return BitVector(std::vector<std::uint8_t>(bits_.begin() + offset,
                                               bits_.begin() + offset + count));
  }

  std::span<const std::uint8_t> view() const noexcept { return bits_; }
  auto begin() const noexcept { return bits_.begin(); }
  auto end() const noexcept { return bits_.end(); }

  friend BitVector operator^(const BitVector& a, const BitVector& b) {
    if (a.size() != b.size()) throw LengthError("xor of unequal-length BitVectors");
    BitVector out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out.bits_[i] = a.bits_[i] ^ b.bits_[i];
    return out;
  }

  friend bool operator==(const BitVector&, const BitVector&) = default;

  // Hex dump: byte k holds bits 8k..8k+7 with bit 8k as the byte LSB; bytes
  // are printed MSB-left. A trailing partial byte is zero padded.
  std::string to_hex() const {
    static constexpr char kDigits[] = "0123456789abcdef";
    std::string out;
    for (std::size_t k = 0; k < bits_.size(); k += 8) {
      unsigned byte = 0;
      for (std::size_t i = 0; i < 8 && k + i < bits_.size(); ++i) byte |= unsigned{bits_[k + i]} << i;
      out.push_back(kDigits[byte >> 4]);
      out.push_back(kDigits[byte & 0xF]);
    }
    return out;
  }

  static BitVector from_hex(std::string_view hex, std::size_t nbits) {
    if (hex.size() % 2 != 0 || hex.size() * 4 < nbits) throw LengthError("hex string too short");
    auto nibble = [](char c) -> unsigned {
      if (c >= '0' && c <= '9') return c - '0';
      if (c >= 'a' && c <= 'f') return c - 'a' + 10;
      if (c >= 'A' && c <= 'F') return c - 'A' + 10;
      throw ParamError(std::string("bad hex digit '") + c + "'");
    };
    BitVector out;
    out.reserve(nbits);
    for (std::size_t k = 0; k * 8 < nbits; ++k) {
      unsigned byte = (nibble(hex[2 * k]) << 4) | nibble(hex[2 * k + 1]);
      for (unsigned i = 0; i < 8 && out.size() < nbits; ++i) out.push_back((byte >> i) & 1U);
    }
    return out;
  }

 private:
  std::vector<std::uint8_t> bits_;
};

}  // namespace blesim
