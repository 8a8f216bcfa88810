#pragma once

#include <cmath>
#include <vector>

#include "blesim/bits.hpp"
#include "blesim/dsp.hpp"
#include "blesim/errors.hpp"
#include "blesim/iq_frame.hpp"

namespace blesim {

inline constexpr double kDefaultBt = 0.5;
inline constexpr double kDefaultModulationIndex = 0.5;
inline constexpr int kDefaultSps = 8;
inline constexpr int kDefaultPulseSpan = 3;

// Sampled GMSK frequency pulse. Taps sum to one, so a run of equal symbols
// advances the phase by pi*h per symbol.
struct PulseShape {
  double bt = kDefaultBt;
  int sps = kDefaultSps;
  int span = kDefaultPulseSpan;
  std::vector<double> taps;

  // Samples between a symbol's first sample and its pulse centre.
  std::size_t group_delay() const noexcept { return (taps.size() - 1) / 2; }
};

inline double q_function(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

// Gaussian low-pass of bandwidth-time product `bt` applied to a one-symbol
// rectangle, sampled at `sps` over `span` symbols (span*sps + 1 taps).
inline PulseShape gaussian_taps(double bt, int sps, int span) {
  if (!(bt > 0.0) || !std::isfinite(bt)) throw ParamError("bt must be positive");
  if (sps < 2) throw ParamError("sps must be >= 2");
  if (span < 2) throw ParamError("span must be >= 2");

  PulseShape p{bt, sps, span, {}};
  const int n = span * sps + 1;
  const double c = 2.0 * kPi * bt / std::sqrt(std::log(2.0));
  p.taps.resize(static_cast<std::size_t>(n));
  double sum = 0.0;
  for (int k = 0; k < n; ++k) {
    const double t = (k - 0.5 * (n - 1)) / sps;
    p.taps[k] = q_function(c * (t - 0.5)) - q_function(c * (t + 0.5));
    sum += p.taps[k];
  }
  for (double& v : p.taps) v /= sum;
  return p;
}

// Instantaneous frequency (NRZ units, before pi*h scaling) per sample.
inline std::vector<double> gmsk_frequency(const BitVector& bits, const PulseShape& pulse) {
  const std::size_t sps = static_cast<std::size_t>(pulse.sps);
  std::vector<double> freq(bits.size() * sps + pulse.taps.size() - 1, 0.0);
  for (std::size_t k = 0; k < bits.size(); ++k) {
    const double a = bits[k] ? 1.0 : -1.0;
    for (std::size_t j = 0; j < pulse.taps.size(); ++j) freq[k * sps + j] += a * pulse.taps[j];
  }
  return freq;
}

// Continuous-phase modulation; bit 1 gives a positive frequency deviation.
// Output has bits.size()*sps + taps-1 samples of unit modulus.
inline IqFrame gmsk_modulate(const BitVector& bits, const PulseShape& pulse,
                             double h = kDefaultModulationIndex, double symbol_rate = 1e6) {
  if (h < 0.45 || h > 0.55) throw ParamError("modulation index outside [0.45, 0.55]");
  const auto freq = gmsk_frequency(bits, pulse);
  IqFrame f;
  f.symbol_rate = symbol_rate;
  f.sample_rate = symbol_rate * pulse.sps;
  f.samples.resize(freq.size());
  double phase = 0.0;
  for (std::size_t n = 0; n < freq.size(); ++n) {
    phase += kPi * h * freq[n];
    phase = std::remainder(phase, 2.0 * kPi);
    f.samples[n] = std::polar(1.0, phase);
  }
  return f;
}

// Phase increment between consecutive samples, in radians.
inline std::vector<double> phase_discriminator(std::span<const Complex> x) {
  std::vector<double> d(x.size(), 0.0);
  for (std::size_t n = 1; n < x.size(); ++n) d[n] = std::arg(x[n] * std::conj(x[n - 1]));
  return d;
}

// Non-coherent demodulation: phase discriminator, receive half of the
// Gaussian matched filter, decimation at the compensated group delay of both
// filter halves. Soft values are scaled so an isolated long run gives +-1.
inline std::vector<double> gmsk_demodulate(const IqFrame& frame, const PulseShape& pulse,
                                           double h = kDefaultModulationIndex) {
  const std::size_t ntaps = pulse.taps.size();
  if (frame.size() < ntaps) throw LengthError("frame shorter than one filter span");
  const double sps = frame.samples_per_symbol();
  if (std::abs(sps - pulse.sps) > 1e-9) throw ParamError("frame sample rate inconsistent with pulse sps");

  const auto d = phase_discriminator(frame.samples);
  const auto y = convolve(std::span<const double>(d), std::span<const double>(pulse.taps));
  const std::size_t delay = 2 * pulse.group_delay();
  const std::size_t step = static_cast<std::size_t>(pulse.sps);
  const std::size_t count = (frame.size() - (ntaps - 1)) / step;
  const double scale = pulse.sps / (kPi * h);

  std::vector<double> soft(count);
  for (std::size_t k = 0; k < count; ++k) soft[k] = y[k * step + delay] * scale;
  return soft;
}

inline BitVector hard_decisions(std::span<const double> soft) {
  BitVector out(soft.size());
  for (std::size_t i = 0; i < soft.size(); ++i) out[i] = soft[i] > 0.0;
  return out;
}

}  // namespace blesim
