#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "blesim/iq_frame.hpp"

namespace blesim {

inline constexpr double kPi = std::numbers::pi;

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }

// SplitMix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t a, std::uint64_t b) noexcept { return mix_seed(mix_seed(a) ^ b); }

template <typename... Rest>
constexpr std::uint64_t derive_seed(std::uint64_t a, std::uint64_t b, Rest... rest) noexcept {
  return derive_seed(derive_seed(a, b), static_cast<std::uint64_t>(rest)...);
}

using Rng = std::mt19937_64;

// Circular complex Gaussian with E|z|^2 = variance.
inline Complex complex_normal(Rng& rng, double variance) {
  std::normal_distribution<double> n(0.0, std::sqrt(variance / 2.0));
  const double re = n(rng);
  return {re, n(rng)};
}

// Full convolution of a complex sequence with real taps.
inline std::vector<Complex> convolve(std::span<const Complex> x, std::span<const double> taps) {
  if (x.empty() || taps.empty()) return {};
  std::vector<Complex> y(x.size() + taps.size() - 1);
  for (std::size_t n = 0; n < x.size(); ++n) {
    const Complex v = x[n];
    if (v == Complex{}) continue;
    for (std::size_t k = 0; k < taps.size(); ++k) y[n + k] += v * taps[k];
  }
  return y;
}

inline std::vector<double> convolve(std::span<const double> x, std::span<const double> taps) {
  if (x.empty() || taps.empty()) return {};
  std::vector<double> y(x.size() + taps.size() - 1);
  for (std::size_t n = 0; n < x.size(); ++n)
    for (std::size_t k = 0; k < taps.size(); ++k) y[n + k] += x[n] * taps[k];
  return y;
}

// Convolution trimmed to the input length, compensating the (odd-length)
// filter's group delay of (taps-1)/2 samples.
template <typename T>
std::vector<T> filter_centered(std::span<const T> x, std::span<const double> taps) {
  auto full = convolve(x, taps);
  if (full.empty()) return {};
  const std::size_t delay = (taps.size() - 1) / 2;
  return {full.begin() + static_cast<std::ptrdiff_t>(delay),
          full.begin() + static_cast<std::ptrdiff_t>(delay + x.size())};
}

inline std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

inline std::vector<Complex> fft(std::vector<Complex> x, std::size_t n) {
  x.resize(n);
  Eigen::FFT<double> engine;
  std::vector<Complex> out;
  engine.fwd(out, x);
  return out;
}

inline std::vector<Complex> ifft(const std::vector<Complex>& x) {
  Eigen::FFT<double> engine;
  std::vector<Complex> out;
  engine.inv(out, x);
  return out;
}

// Welch power spectral density with a Hann window and 50% overlap. Bin k is
// frequency k*fs/nfft after fftshift, i.e. index 0 maps to -fs/2.
inline std::vector<double> welch_psd(std::span<const Complex> x, std::size_t nfft) {
  std::vector<double> psd(nfft, 0.0);
  if (x.size() < nfft) {
    std::vector<Complex> seg(x.begin(), x.end());
    auto spec = fft(seg, nfft);
    for (std::size_t k = 0; k < nfft; ++k) psd[(k + nfft / 2) % nfft] = std::norm(spec[k]);
    return psd;
  }
  std::vector<double> window(nfft);
  for (std::size_t i = 0; i < nfft; ++i) window[i] = 0.5 - 0.5 * std::cos(2.0 * kPi * i / nfft);
  std::size_t segments = 0;
  for (std::size_t start = 0; start + nfft <= x.size(); start += nfft / 2, ++segments) {
    std::vector<Complex> seg(nfft);
    for (std::size_t i = 0; i < nfft; ++i) seg[i] = x[start + i] * window[i];
    auto spec = fft(std::move(seg), nfft);
    for (std::size_t k = 0; k < nfft; ++k) psd[(k + nfft / 2) % nfft] += std::norm(spec[k]);
  }
  for (double& p : psd) p /= static_cast<double>(segments);
  return psd;
}

// Bandwidth (Hz) containing `fraction` of the power, trimming equal tails.
inline double occupied_bandwidth(const std::vector<double>& shifted_psd, double fs, double fraction = 0.99) {
  double total = 0.0;
  for (double p : shifted_psd) total += p;
  const double tail = 0.5 * (1.0 - fraction) * total;
  std::size_t lo = 0, hi = shifted_psd.size() - 1;
  double acc = 0.0;
  while (lo < hi && acc + shifted_psd[lo] < tail) acc += shifted_psd[lo++];
  acc = 0.0;
  while (hi > lo && acc + shifted_psd[hi] < tail) acc += shifted_psd[hi--];
  return static_cast<double>(hi - lo + 1) * fs / static_cast<double>(shifted_psd.size());
}

}  // namespace blesim
