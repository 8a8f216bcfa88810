#pragma once

#include <array>
#include <bit>
#include <complex>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <vector>

#include "blesim/errors.hpp"

namespace blesim {

using Complex = std::complex<double>;

struct IqFrame {
  std::vector<Complex> samples;
  double sample_rate = 8e6;
  double symbol_rate = 1e6;

  std::size_t size() const noexcept { return samples.size(); }
  bool empty() const noexcept { return samples.empty(); }
  double samples_per_symbol() const noexcept { return sample_rate / symbol_rate; }
};

inline double mean_power(const std::vector<Complex>& x) {
  if (x.empty()) return 0.0;
  double acc = 0.0;
  for (const Complex& v : x) acc += std::norm(v);
  return acc / static_cast<double>(x.size());
}

inline double mean_power(const IqFrame& f) { return mean_power(f.samples); }

// On-disk layout, little-endian:
//   bytes 0-3   magic "BLIQ"
//   bytes 4-7   sample rate, Hz, uint32
//   bytes 8-11  symbol rate, Hz, uint32
//   bytes 12-15 format version (1), uint32
// followed by interleaved float32 I/Q pairs.
inline constexpr std::array<char, 4> kIqMagic = {'B', 'L', 'I', 'Q'};
inline constexpr std::uint32_t kIqFormatVersion = 1;

namespace detail {

static_assert(std::endian::native == std::endian::little, "IqFrame I/O assumes a little-endian host");

inline void put_u32(std::ostream& os, std::uint32_t v) { os.write(reinterpret_cast<const char*>(&v), 4); }

inline std::uint32_t get_u32(std::istream& is) {
  std::uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), 4);
  return v;
}

}  // namespace detail

inline void write_iq(const IqFrame& frame, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os.write(kIqMagic.data(), 4);
  detail::put_u32(os, static_cast<std::uint32_t>(frame.sample_rate));
  detail::put_u32(os, static_cast<std::uint32_t>(frame.symbol_rate));
  detail::put_u32(os, kIqFormatVersion);
  std::vector<float> buf;
  buf.reserve(2 * frame.size());
  for (const Complex& v : frame.samples) {
    buf.push_back(static_cast<float>(v.real()));
    buf.push_back(static_cast<float>(v.imag()));
  }
  os.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(float)));
  if (!os) throw IoError("write failed for " + path.string());
}

inline IqFrame read_iq(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  std::array<char, 4> magic{};
  is.read(magic.data(), 4);
  if (!is || magic != kIqMagic) throw IoError(path.string() + ": bad magic");
  IqFrame f;
  f.sample_rate = detail::get_u32(is);
  f.symbol_rate = detail::get_u32(is);
  if (detail::get_u32(is) != kIqFormatVersion || !is) throw IoError(path.string() + ": unsupported version");
  float pair[2];
  while (is.read(reinterpret_cast<char*>(pair), sizeof pair)) f.samples.emplace_back(pair[0], pair[1]);
  if (is.gcount() != 0) throw IoError(path.string() + ": truncated sample");
  return f;
}

}  // namespace blesim
