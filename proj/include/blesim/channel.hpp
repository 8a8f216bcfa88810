#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "blesim/dsp.hpp"
#include "blesim/errors.hpp"
#include "blesim/iq_frame.hpp"

namespace blesim {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class ProfileKind { LOS, NLOS, Reverberant };

inline std::string_view to_string(ProfileKind k) noexcept {
  switch (k) {
    case ProfileKind::LOS: return "los";
    case ProfileKind::NLOS: return "nlos";
    case ProfileKind::Reverberant: return "reverb";
  }
  return "?";
}

inline ProfileKind parse_profile_kind(std::string_view s) {
  if (s == "los") return ProfileKind::LOS;
  if (s == "nlos") return ProfileKind::NLOS;
  if (s == "reverb" || s == "reverberant") return ProfileKind::Reverberant;
  throw ParamError("unknown channel profile '" + std::string(s) + "'");
}

struct Tap {
  double delay = 0.0;     // samples at ChannelProfile::reference_rate
  double power_db = 0.0;  // mean power
  friend bool operator==(const Tap&, const Tap&) = default;
};

// Tapped delay line with block fading. Delays are given at reference_rate
// and rescaled to the frame's sample rate.
struct ChannelProfile {
  ProfileKind kind = ProfileKind::LOS;
  double rician_k_db = 10.0;  // -inf for NLOS/Reverberant, +inf for a pure LOS ray
  std::vector<Tap> taps{{0.0, 0.0}};
  double reference_rate = 8e6;
  std::uint64_t seed = 0;

  friend bool operator==(const ChannelProfile&, const ChannelProfile&) = default;
};

inline void validate(const ChannelProfile& p) {
  if (p.taps.empty()) throw ProfileError("profile has no taps");
  double total = 0.0;
  for (const Tap& t : p.taps) {
    if (t.delay < 0.0) throw ProfileError("negative tap delay");
    total += db_to_linear(t.power_db);
  }
  if (std::abs(linear_to_db(total)) > 1e-3) throw ProfileError("tap powers must sum to 0 dB");
  if (p.kind == ProfileKind::LOS) {
    if (!(p.rician_k_db >= 0.0)) throw ProfileError("LOS profile needs K >= 0 dB");
  } else if (p.rician_k_db != -kInf) {
    throw ProfileError("NLOS/reverberant profiles have no deterministic component");
  }
  if (!(p.reference_rate > 0.0)) throw ProfileError("reference rate must be positive");
}

inline double rms_delay_spread(const std::vector<Tap>& taps) {
  double p = 0.0, m1 = 0.0, m2 = 0.0;
  for (const Tap& t : taps) {
    const double w = db_to_linear(t.power_db);
    p += w;
    m1 += w * t.delay;
    m2 += w * t.delay * t.delay;
  }
  m1 /= p;
  return std::sqrt(m2 / p - m1 * m1);
}

// Exponentially decaying taps at delays 0, spacing, 2*spacing, ... with the
// decay chosen to hit `rms_spread`, normalised to unit total power.
inline std::vector<Tap> exponential_taps(int count, double spacing, double rms_spread) {
  auto build = [&](double decay) {
    std::vector<Tap> taps;
    double total = 0.0;
    for (int i = 0; i < count; ++i) total += std::exp(-i * spacing / decay);
    for (int i = 0; i < count; ++i)
      taps.push_back({i * spacing, linear_to_db(std::exp(-i * spacing / decay) / total)});
    return taps;
  };
  double lo = 1e-3, hi = 1e6;
  if (rms_spread >= rms_delay_spread(build(hi))) throw ProfileError("rms spread unreachable with these taps");
  for (int it = 0; it < 200; ++it) {
    const double mid = std::sqrt(lo * hi);
    (rms_delay_spread(build(mid)) < rms_spread ? lo : hi) = mid;
  }
  return build(std::sqrt(lo * hi));
}

inline ChannelProfile los_profile(double k_db = 10.0) {
  return {ProfileKind::LOS, k_db, {{0.0, 0.0}}, 8e6, 0};
}

// 8 Rayleigh taps, 2-sample spacing, 4-sample rms delay spread at 8 Msps.
inline ChannelProfile nlos_profile() {
  return {ProfileKind::NLOS, -kInf, exponential_taps(8, 2.0, 4.0), 8e6, 0};
}

// Rich scattering: 32 equal-power Rayleigh taps.
inline ChannelProfile reverberant_profile() {
  std::vector<Tap> taps;
  for (int i = 0; i < 32; ++i) taps.push_back({static_cast<double>(i), linear_to_db(1.0 / 32.0)});
  return {ProfileKind::Reverberant, -kInf, std::move(taps), 8e6, 0};
}

inline ChannelProfile default_profile(ProfileKind kind) {
  switch (kind) {
    case ProfileKind::LOS: return los_profile();
    case ProfileKind::NLOS: return nlos_profile();
    case ProfileKind::Reverberant: return reverberant_profile();
  }
  return los_profile();
}

struct ChannelRealization {
  std::vector<std::size_t> delays;  // samples at the frame rate
  std::vector<Complex> gains;
};

inline ChannelRealization realize(const ChannelProfile& profile, double sample_rate) {
  validate(profile);
  Rng rng(profile.seed);
  ChannelRealization r;
  const double scale = sample_rate / profile.reference_rate;
  for (std::size_t i = 0; i < profile.taps.size(); ++i) {
    const double power = db_to_linear(profile.taps[i].power_db);
    r.delays.push_back(static_cast<std::size_t>(std::lround(profile.taps[i].delay * scale)));
    Complex g = complex_normal(rng, power);
    if (i == 0 && profile.kind == ProfileKind::LOS) {
      std::uniform_real_distribution<double> phase(-kPi, kPi);
      const Complex los = std::polar(std::sqrt(power), phase(rng));
      if (std::isinf(profile.rician_k_db)) {
        g = los;
      } else {
        const double k = db_to_linear(profile.rician_k_db);
        g = std::sqrt(k / (k + 1.0)) * los + std::sqrt(1.0 / (k + 1.0)) * g;
      }
    }
    r.gains.push_back(g);
  }
  return r;
}

// One channel realization per frame; output keeps the input length.
inline IqFrame fade(const IqFrame& frame, const ChannelProfile& profile) {
  const ChannelRealization ch = realize(profile, frame.sample_rate);
  for (std::size_t d : ch.delays)
    if (d >= frame.size()) throw ProfileError("tap delay exceeds frame length");
  IqFrame out = frame;
  std::fill(out.samples.begin(), out.samples.end(), Complex{});
  for (std::size_t i = 0; i < ch.gains.size(); ++i) {
    const std::size_t d = ch.delays[i];
    for (std::size_t n = d; n < frame.size(); ++n) out.samples[n] += ch.gains[i] * frame.samples[n - d];
  }
  return out;
}

// Adds circular Gaussian noise at `snr_db` relative to `reference_power`
// (default: the frame's measured mean power). +inf leaves the frame untouched.
inline IqFrame awgn(const IqFrame& frame, double snr_db, std::uint64_t seed,
                    std::optional<double> reference_power = std::nullopt) {
  if (frame.empty()) throw ParamError("awgn on empty frame");
  if (snr_db == kInf) return frame;
  const double ps = reference_power.value_or(mean_power(frame));
  const double sigma = std::sqrt(ps / db_to_linear(snr_db) / 2.0);
  Rng rng(seed);
  std::normal_distribution<double> n(0.0, sigma);
  IqFrame out = frame;
  for (Complex& v : out.samples) {
    const double re = n(rng);
    v += Complex(re, n(rng));
  }
  return out;
}

inline IqFrame apply_cfo(const IqFrame& frame, double offset_hz) {
  if (std::abs(offset_hz) >= frame.sample_rate / 2.0) throw ParamError("frequency offset aliases");
  IqFrame out = frame;
  const double w = 2.0 * kPi * offset_hz / frame.sample_rate;
  for (std::size_t n = 0; n < out.size(); ++n) out.samples[n] *= std::polar(1.0, w * static_cast<double>(n));
  return out;
}

inline IqFrame apply_dc(const IqFrame& frame, Complex dc) {
  IqFrame out = frame;
  for (Complex& v : out.samples) v += dc;
  return out;
}

struct InterfererConfig {
  double bandwidth = 20e6;
  double center_offset = 0.0;
  double sir_db = 0.0;
  double duty_cycle = 1.0;
  std::uint64_t seed = 0;
  int burst_symbols = 40;  // OFDM symbols per burst

  friend bool operator==(const InterfererConfig&, const InterfererConfig&) = default;
};

inline constexpr int kWlanFftSize = 64;
inline constexpr int kWlanOccupiedHalf = 26;  // subcarriers +-1..+-26

// 802.11a-like burst train: 52 occupied subcarriers with random QPSK, 1/4
// cyclic prefix, bursts gated to `duty_cycle`. Unit power while active.
inline IqFrame wlan_interferer(std::size_t duration_samples, const InterfererConfig& cfg, double fs) {
  if (!(cfg.bandwidth > 0.0)) throw ParamError("interferer bandwidth must be positive");
  if (cfg.duty_cycle < 0.0 || cfg.duty_cycle > 1.0) throw ParamError("duty cycle outside [0, 1]");
  if (std::abs(cfg.center_offset) + cfg.bandwidth / 2.0 > fs / 2.0 + 1e-6)
    throw ParamError("interferer band exceeds Nyquist");

  IqFrame out;
  out.sample_rate = fs;
  out.symbol_rate = cfg.bandwidth / kWlanFftSize;
  out.samples.assign(duration_samples, Complex{});
  if (cfg.duty_cycle == 0.0 || duration_samples == 0) return out;

  const auto nfft = static_cast<std::size_t>(std::lround(kWlanFftSize * fs / cfg.bandwidth));
  const std::size_t cp = nfft / 4;
  const std::size_t sym_len = nfft + cp;
  const std::size_t burst_len = sym_len * static_cast<std::size_t>(cfg.burst_symbols);
  const auto period = static_cast<std::size_t>(std::ceil(static_cast<double>(burst_len) / cfg.duty_cycle));

  Rng rng(cfg.seed);
  std::uniform_int_distribution<std::size_t> start_dist(0, period - 1);
  std::uniform_int_distribution<int> qpsk(0, 3);
  const std::size_t phase0 = start_dist(rng);
  const double norm = std::sqrt(static_cast<double>(nfft) * nfft / (2.0 * kWlanOccupiedHalf));

  std::vector<Complex> symbol;
  std::size_t sym_pos = sym_len;  // forces a new symbol on first use
  for (std::size_t n = 0; n < duration_samples; ++n) {
    const std::size_t t = (n + phase0) % period;
    if (t >= burst_len) {
      sym_pos = sym_len;
      continue;
    }
    if (t % sym_len == 0 || sym_pos >= sym_len) {
      std::vector<Complex> bins(nfft);
      for (int k = -kWlanOccupiedHalf; k <= kWlanOccupiedHalf; ++k) {
        if (k == 0) continue;
        const int q = qpsk(rng);
        bins[(k + static_cast<int>(nfft)) % nfft] = Complex(q & 1 ? 1.0 : -1.0, q & 2 ? 1.0 : -1.0) / std::numbers::sqrt2;
      }
      // Eigen's inverse FFT includes the 1/N factor.
      auto body = ifft(bins);
      symbol.assign(body.end() - static_cast<std::ptrdiff_t>(cp), body.end());
      symbol.insert(symbol.end(), body.begin(), body.end());
      for (Complex& v : symbol) v *= norm;
      sym_pos = t % sym_len;
    }
    out.samples[n] = symbol[sym_pos++];
  }
  if (cfg.center_offset != 0.0) return apply_cfo(out, cfg.center_offset);
  return out;
}

// Scales the interferer so signal power over interferer power (measured on
// the interferer's active samples) equals sir_db, then adds it. The
// interferer is looped or truncated to the signal length.
inline IqFrame mix(const IqFrame& signal, const IqFrame& interferer, double sir_db,
                   std::optional<double> signal_power = std::nullopt) {
  if (std::abs(signal.sample_rate - interferer.sample_rate) > 1e-6)
    throw RateMismatchError("signal and interferer sample rates differ");
  if (sir_db == kInf || interferer.empty()) return signal;

  double pi = 0.0;
  std::size_t active = 0;
  for (const Complex& v : interferer.samples) {
    if (v != Complex{}) {
      pi += std::norm(v);
      ++active;
    }
  }
  if (active == 0) return signal;
  pi /= static_cast<double>(active);
  const double ps = signal_power.value_or(mean_power(signal));
  const double gain = std::sqrt(ps / (pi * db_to_linear(sir_db)));

  IqFrame out = signal;
  for (std::size_t n = 0; n < out.size(); ++n) out.samples[n] += gain * interferer.samples[n % interferer.size()];
  return out;
}

}  // namespace blesim
