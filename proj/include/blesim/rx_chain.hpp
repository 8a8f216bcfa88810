#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "blesim/bits.hpp"
#include "blesim/coded_phy.hpp"
#include "blesim/dsp.hpp"
#include "blesim/errors.hpp"
#include "blesim/gmsk.hpp"
#include "blesim/iq_frame.hpp"
#include "blesim/ll_packet.hpp"
#include "blesim/phy.hpp"

namespace blesim {

enum class AgcMode { SlowAttack, FastAttack };
enum class CfoMethod { SquaredSpectrum, Correlation };

struct ReceiverConfig {
  PhyMode phy_mode = PhyMode::LE1M;
  std::uint32_t expected_access_address = kAdvertisingAccessAddress;
  std::uint32_t crc_init = kAdvertisingCrcInit;
  unsigned channel = 37;    // for de-whitening
  std::size_t pdu_bits = 256;

  AgcMode agc_mode = AgcMode::SlowAttack;
  double agc_target_power_db = 0.0;
  double notch_radius = 0.999;
  double preamble_detect_threshold = 0.6;  // normalised correlation peak
  CfoMethod cfo_method = CfoMethod::SquaredSpectrum;
  double max_cfo_hz = 200e3;
  std::size_t search_window = 0;  // candidate packet starts; 0 = whole frame

  int sps = kDefaultSps;
  double bt = kDefaultBt;
  double modulation_index = kDefaultModulationIndex;
  int pulse_span = kDefaultPulseSpan;
  double rx_filter_bt = 0.3;

  bool keep_stage_frames = false;

  friend bool operator==(const ReceiverConfig&, const ReceiverConfig&) = default;
};

inline void validate(const ReceiverConfig& cfg) {
  if (!(cfg.notch_radius > 0.9 && cfg.notch_radius < 1.0)) throw ParamError("notch radius outside (0.9, 1)");
  if (!(cfg.preamble_detect_threshold > 0.0 && cfg.preamble_detect_threshold <= 1.0))
    throw ParamError("detection threshold outside (0, 1]");
  if (cfg.channel > 39) throw ParamError("channel index out of range");
  check_pdu_length(cfg.pdu_bits);
  if (cfg.sps < 2) throw ParamError("sps must be >= 2");
  if (!(cfg.rx_filter_bt > 0.0)) throw ParamError("receive filter bandwidth must be positive");
  if (cfg.pulse_span < 2) throw ParamError("pulse span must be >= 2");
  if (!(cfg.max_cfo_hz > 0.0)) throw ParamError("max_cfo_hz must be positive");
}

struct StageFrame {
  std::string name;
  IqFrame frame;
};

struct RxPacketReport {
  bool detected = false;
  bool aa_ok = false;
  bool crc_ok = false;
  double cfo_estimate_hz = 0.0;
  long timing_offset = -1;  // sample index of the first preamble symbol
  double correlation_peak = 0.0;
  BitVector pdu;                     // set when crc_ok
  std::vector<std::string> stages;   // executed stages, in order
  std::vector<StageFrame> stage_frames;
};

// ---------------------------------------------------------------------------
// Individual stages

struct AgcParams {
  double smoothing;  // linear power smoother coefficient
  double attack;     // log-gain loop step while the output is too strong
  double release;    // log-gain loop step while the output is too weak
};

inline AgcParams agc_params(AgcMode mode) noexcept {
  return mode == AgcMode::FastAttack ? AgcParams{0.5, 0.08, 0.004} : AgcParams{0.05, 0.006, 0.0006};
}

// Feedback AGC: the loop drives the smoothed output power (dB) to the target.
// Gain falls quickly and recovers slowly. It is held while the input is
// constant.
inline IqFrame agc(const IqFrame& frame, AgcMode mode, double target_db = 0.0) {
  if (frame.empty()) throw ParamError("agc on empty frame");
  const AgcParams prm = agc_params(mode);
  constexpr double kMinGainDb = -80.0, kMaxGainDb = 100.0;
  IqFrame out = frame;
  double gain_db = 0.0;
  double power = db_to_linear(target_db);
  Complex prev_in{};
  for (Complex& v : out.samples) {
    const Complex in = v;
    v *= std::pow(10.0, gain_db / 20.0);
    // A constant input (silence or bare DC) carries nothing to level on.
    if (in == prev_in) continue;
    prev_in = in;
    power += prm.smoothing * (std::norm(v) - power);
    const double err = target_db - linear_to_db(std::max(power, 1e-30));
    gain_db = std::clamp(gain_db + (err < 0.0 ? prm.attack : prm.release) * err, kMinGainDb, kMaxGainDb);
  }
  return out;
}

// First-order notch at DC: y[n] = x[n] - x[n-1] + r*y[n-1]. The filter
// starts in the steady state of a constant input equal to the mean of the
// first 64 samples.
inline IqFrame dc_notch(const IqFrame& frame, double radius) {
  if (!(radius > 0.9 && radius < 1.0)) throw ParamError("notch radius outside (0.9, 1)");
  IqFrame out = frame;
  const std::size_t head = std::min<std::size_t>(frame.size(), 64);
  Complex dc{};
  for (std::size_t n = 0; n < head; ++n) dc += frame.samples[n];
  if (head > 0) dc /= static_cast<double>(head);
  // Steady state for input dc: y = 0 and the next step sees x[n-1] = dc.
  // Feeding x[0] then gives y[0] = x[0] - dc.
  Complex prev_x = dc;
  Complex prev_y{};
  for (Complex& v : out.samples) {
    const Complex y = v - prev_x + radius * prev_y;
    prev_x = v;
    prev_y = y;
    v = y;
  }
  return out;
}

// Squaring a GMSK signal with h = 0.5 produces spectral lines at
// 2*offset +- symbol_rate/2. The line pair is located in a zero-padded FFT
// and refined by parabolic interpolation.
inline double coarse_cfo_squared_spectrum(const IqFrame& frame, double max_cfo_hz = 200e3) {
  if (mean_power(frame) < 1e-20) throw NoSignalError("no signal power");
  const double fs = frame.sample_rate;
  const std::size_t nfft = 2 * next_pow2(frame.size());
  // Hard-limited first, so AGC transients do not dominate the spectrum.
  std::vector<Complex> sq(frame.size());
  for (std::size_t n = 0; n < frame.size(); ++n) {
    const Complex v = frame.samples[n];
    const double a = std::norm(v);
    sq[n] = a > 0.0 ? v * v / a : Complex{};
  }
  const auto spec = fft(std::move(sq), nfft);

  const double bin_hz = fs / static_cast<double>(nfft);
  const long half_line = std::lround(frame.symbol_rate / 2.0 / bin_hz);
  const long max_bin = std::lround(2.0 * max_cfo_hz / bin_hz);
  auto at = [&](long k) { return std::norm(spec[static_cast<std::size_t>((k % static_cast<long>(nfft) + nfft) % nfft)]); };
  auto metric = [&](long k) { return at(k - half_line) + at(k + half_line); };

  long best = 0;
  double best_m = -1.0;
  for (long k = -max_bin; k <= max_bin; ++k) {
    const double m = metric(k);
    if (m > best_m) {
      best_m = m;
      best = k;
    }
  }
  const double ml = metric(best - 1), mr = metric(best + 1);
  const double denom = ml - 2.0 * best_m + mr;
  const double frac = denom != 0.0 ? 0.5 * (ml - mr) / denom : 0.0;
  return 0.5 * (static_cast<double>(best) + std::clamp(frac, -0.5, 0.5)) * bin_hz;
}

// Mean instantaneous frequency over the frame's strongest region. Unbiased
// only for balanced data; kept as the correlation-based alternative.
inline double coarse_cfo_correlation(const IqFrame& frame) {
  if (mean_power(frame) < 1e-20) throw NoSignalError("no signal power");
  Complex acc{};
  for (std::size_t n = 1; n < frame.size(); ++n) acc += frame.samples[n] * std::conj(frame.samples[n - 1]);
  return std::arg(acc) * frame.sample_rate / (2.0 * kPi);
}

inline double coarse_cfo_estimate(const IqFrame& frame, CfoMethod method = CfoMethod::SquaredSpectrum,
                                  double max_cfo_hz = 200e3) {
  return method == CfoMethod::SquaredSpectrum ? coarse_cfo_squared_spectrum(frame, max_cfo_hz)
                                              : coarse_cfo_correlation(frame);
}

// Gaussian low-pass with 3 dB bandwidth bt*symbol_rate and unit DC gain.
inline std::vector<double> receive_filter_taps(double bt, int sps, int span) {
  if (!(bt > 0.0) || sps < 2 || span < 1) throw ParamError("bad receive filter parameters");
  const int n = span * sps + 1;
  const double a = 2.0 * kPi * kPi * bt * bt / std::log(2.0);
  std::vector<double> taps(static_cast<std::size_t>(n));
  double sum = 0.0;
  for (int k = 0; k < n; ++k) {
    const double t = (k - 0.5 * (n - 1)) / sps;
    taps[k] = std::exp(-a * t * t);
    sum += taps[k];
  }
  for (double& v : taps) v /= sum;
  return taps;
}

inline IqFrame matched_filter(const IqFrame& frame, std::span<const double> taps) {
  IqFrame out = frame;
  out.samples = filter_centered(std::span<const Complex>(frame.samples), taps);
  return out;
}

// Phase advance over one symbol, in units of pi*h, evaluated at every sample.
inline std::vector<double> symbol_phase_stream(const std::vector<Complex>& x, std::size_t sps, double h) {
  std::vector<double> z(x.size(), 0.0);
  const double scale = 1.0 / (kPi * h);
  for (std::size_t n = sps; n < x.size(); ++n) z[n] = std::arg(x[n] * std::conj(x[n - sps])) * scale;
  return z;
}

// Symbols known to the receiver before decoding: the preamble and access
// address (for coded PHYs, the part of FEC block 1 fixed by the address).
inline BitVector known_symbols(PhyMode mode, std::uint32_t access_address) {
  if (!is_coded(mode)) {
    BitVector s = make_preamble(mode, access_address);
    s.append_word(access_address, kAccessAddressBits);
    return s;
  }
  BitVector aa;
  aa.append_word(access_address, kAccessAddressBits);
  BitVector s = coded_preamble();
  s.append(pattern_map(fec_encode(aa), CodingScheme::S8));
  return s;
}

// Coded packets are sized for S8, the longer of the two block-2 encodings,
// since the coding indicator is only known after block 1 is decoded.
inline std::size_t max_packet_symbols(PhyMode mode, std::size_t pdu_bits) {
  return is_coded(mode) ? coded_packet_symbols(pdu_bits, CodingScheme::S8)
                        : uncoded_packet_bits(mode, pdu_bits);
}

struct SyncResult {
  IqFrame aligned;          // fine-CFO corrected, matched-filtered frame
  long timing_offset = 0;   // first preamble sample
  double fine_cfo_hz = 0.0;
  double peak = 0.0;
};

// ---------------------------------------------------------------------------

class Receiver {
 public:
  explicit Receiver(ReceiverConfig cfg) : cfg_(std::move(cfg)) {
    validate(cfg_);
    pulse_ = gaussian_taps(cfg_.bt, cfg_.sps, cfg_.pulse_span);
    known_ = known_symbols(cfg_.phy_mode, cfg_.expected_access_address);
    pattern_.resize(known_.size());
    for (std::size_t k = 0; k < known_.size(); ++k) pattern_[k] = known_[k] ? 1.0 : -1.0;
    const IqFrame ref = gmsk_modulate(known_, pulse_, cfg_.modulation_index, symbol_rate_hz(cfg_.phy_mode));
    rx_taps_ = receive_filter_taps(cfg_.rx_filter_bt, cfg_.sps, cfg_.pulse_span);
    reference_mod_ = ref.samples;
    reference_ = filter_centered(std::span<const Complex>(ref.samples), std::span<const double>(rx_taps_));
    decision_delay_ = pulse_.group_delay() + static_cast<std::size_t>(cfg_.sps) / 2;
  }

  const ReceiverConfig& config() const noexcept { return cfg_; }
  std::size_t decision_delay() const noexcept { return decision_delay_; }

  // Locates the known-symbol pattern in a coarse-CFO-corrected,
  // matched-filtered frame and removes the residual frequency offset.
  //
  // When `notch` is set, the reference is passed through the DC notch as
  // seen after removal of `coarse_cfo_hz`, so the notch's distortion of the
  // packet does not bias the fine CFO estimate.
  SyncResult synchronize(const IqFrame& filtered, bool notch = false, double coarse_cfo_hz = 0.0) const {
    const std::size_t sps = static_cast<std::size_t>(cfg_.sps);
    const std::size_t span = (known_.size() - 1) * sps + decision_delay_;
    if (filtered.size() <= span + 1) throw SyncFailure("frame shorter than the sync pattern");

    const auto z = symbol_phase_stream(filtered.samples, sps, cfg_.modulation_index);
    std::size_t last = filtered.size() - span - 1;
    if (cfg_.search_window > 0) last = std::min(last, cfg_.search_window - 1);

    const double pattern_energy = static_cast<double>(pattern_.size());
    double best = -2.0;
    std::size_t best_tau = 0;
    for (std::size_t tau = 0; tau <= last; ++tau) {
      const double* zp = &z[tau + decision_delay_];
      double num = 0.0, energy = 0.0;
      for (std::size_t k = 0; k < pattern_.size(); ++k) {
        const double v = zp[k * sps];
        num += pattern_[k] * v;
        energy += v * v;
      }
      const double rho = energy > 0.0 ? num / std::sqrt(pattern_energy * energy) : 0.0;
      if (rho > best) {
        best = rho;
        best_tau = tau;
      }
    }
    if (best < cfg_.preamble_detect_threshold)
      throw SyncFailure("correlation peak " + std::to_string(best) + " below threshold");

    const std::vector<Complex> ref = notch ? notched_reference(filtered.sample_rate, coarse_cfo_hz) : reference_;
    // Sampling-phase refinement: maximise the segment-wise reference
    // correlation energy around the symbol-stream peak.
    std::size_t tau = best_tau;
    double best_e = -1.0;
    for (std::size_t t = best_tau > sps / 2 ? best_tau - sps / 2 : 0; t <= best_tau + sps / 2; ++t) {
      const auto c = segment_correlations(filtered, t, ref);
      double e = 0.0;
      for (const Complex& v : c) e += std::norm(v);
      if (e > best_e) {
        best_e = e;
        tau = t;
      }
    }

    SyncResult r;
    r.timing_offset = static_cast<long>(tau);
    r.peak = best;
    r.fine_cfo_hz = fine_cfo(filtered, tau, ref);
    r.aligned = filtered;
    const double w = -2.0 * kPi * r.fine_cfo_hz / filtered.sample_rate;
    for (std::size_t n = 0; n < r.aligned.size(); ++n) r.aligned.samples[n] *= std::polar(1.0, w * static_cast<double>(n));
    return r;
  }

  RxPacketReport receive(const IqFrame& input) const {
    RxPacketReport rep;
    auto stage = [&](const char* name, const IqFrame* f) {
      rep.stages.emplace_back(name);
      if (cfg_.keep_stage_frames && f) rep.stage_frames.push_back({name, *f});
    };

    if (input.empty()) return rep;
    IqFrame x = input;
    x.symbol_rate = symbol_rate_hz(cfg_.phy_mode);
    stage("input", &x);

    x = agc(x, cfg_.agc_mode, cfg_.agc_target_power_db);
    stage("agc", &x);
    x = dc_notch(x, cfg_.notch_radius);
    stage("dc_notch", &x);

    double coarse = 0.0;
    try {
      coarse = coarse_cfo_estimate(x, cfg_.cfo_method, cfg_.max_cfo_hz);
    } catch (const NoSignalError&) {
      stage("coarse_cfo", nullptr);
      return rep;
    }
    x = apply_cfo(x, -coarse);
    rep.cfo_estimate_hz = coarse;
    stage("coarse_cfo", &x);

    x = matched_filter(x, rx_taps_);
    stage("matched_filter", &x);

    SyncResult sync;
    try {
      sync = synchronize(x, true, coarse);
    } catch (const SyncFailure&) {
      stage("synchronize", nullptr);
      return rep;
    }
    rep.detected = true;
    rep.timing_offset = sync.timing_offset;
    rep.correlation_peak = sync.peak;
    rep.cfo_estimate_hz = coarse + sync.fine_cfo_hz;
    stage("synchronize", &sync.aligned);

    const auto soft = demodulate(sync);
    stage("demodulate", nullptr);
    decode(soft, rep);
    stage("decode", nullptr);
    return rep;
  }

 private:
  std::vector<Complex> notched_reference(double fs, double coarse_cfo_hz) const {
    const Complex a = std::polar(1.0, -2.0 * kPi * coarse_cfo_hz / fs);
    const double r = cfg_.notch_radius;
    std::vector<Complex> y(reference_mod_.size());
    Complex prev_x{}, prev_y{};
    for (std::size_t n = 0; n < y.size(); ++n) {
      y[n] = reference_mod_[n] - a * prev_x + r * a * prev_y;
      prev_x = reference_mod_[n];
      prev_y = y[n];
    }
    return filter_centered(std::span<const Complex>(y), std::span<const double>(rx_taps_));
  }

  std::vector<Complex> segment_correlations(const IqFrame& filtered, std::size_t tau,
                                            const std::vector<Complex>& ref) const {
    const std::size_t seg = 8 * static_cast<std::size_t>(cfg_.sps);
    std::vector<Complex> c;
    if (tau >= filtered.size()) return c;
    // The last known symbol overlaps unknown data through the pulse tails.
    const std::size_t usable = std::min((known_.size() - 2) * static_cast<std::size_t>(cfg_.sps),
                                        filtered.size() - tau);
    for (std::size_t start = 0; start + seg <= usable; start += seg) {
      Complex acc{};
      for (std::size_t n = start; n < start + seg; ++n) acc += filtered.samples[tau + n] * std::conj(ref[n]);
      c.push_back(acc);
    }
    return c;
  }

  // Phase slope across consecutive 8-symbol segments of the correlation
  // with the known-symbol reference, refined by the phase advance of the
  // reference-stripped signal over half the known span.
  double fine_cfo(const IqFrame& filtered, std::size_t tau, const std::vector<Complex>& ref) const {
    const std::size_t seg = 8 * static_cast<std::size_t>(cfg_.sps);
    const auto c = segment_correlations(filtered, tau, ref);
    Complex slope{};
    for (std::size_t i = 1; i < c.size(); ++i) slope += c[i] * std::conj(c[i - 1]);
    if (slope == Complex{}) return 0.0;
    const double fs = filtered.sample_rate;
    const double f1 = std::arg(slope) * fs / (2.0 * kPi * static_cast<double>(seg));

    const std::size_t m = std::min((known_.size() - 2) * static_cast<std::size_t>(cfg_.sps), filtered.size() - tau);
    const std::size_t lag = m / 2;
    const double w = -2.0 * kPi * f1 / fs;
    std::vector<Complex> u(m);
    for (std::size_t n = 0; n < m; ++n)
      u[n] = filtered.samples[tau + n] * std::conj(ref[n]) * std::polar(1.0, w * static_cast<double>(n));
    Complex acc{};
    for (std::size_t n = 0; n + lag < m; ++n) acc += u[n + lag] * std::conj(u[n]);
    if (acc == Complex{}) return f1;
    return f1 + std::arg(acc) * fs / (2.0 * kPi * static_cast<double>(lag));
  }

  std::vector<double> demodulate(const SyncResult& sync) const {
    const std::size_t sps = static_cast<std::size_t>(cfg_.sps);
    const auto z = symbol_phase_stream(sync.aligned.samples, sps, cfg_.modulation_index);
    const std::size_t count = max_packet_symbols(cfg_.phy_mode, cfg_.pdu_bits);
    std::vector<double> soft(count, 0.0);
    const std::size_t start = static_cast<std::size_t>(sync.timing_offset) + decision_delay_;
    for (std::size_t k = 0; k < count; ++k) {
      const std::size_t n = start + k * sps;
      if (n >= z.size()) break;
      soft[k] = z[n];
    }
    return soft;
  }

  void decode(const std::vector<double>& soft, RxPacketReport& rep) const {
    const ChannelIndex channel(cfg_.channel);
    const std::size_t body_bits = cfg_.pdu_bits + kCrcBits;
    std::uint32_t aa = 0;
    BitVector body;

    if (!is_coded(cfg_.phy_mode)) {
      const BitVector bits = hard_decisions(soft);
      const std::size_t pre = preamble_bits(cfg_.phy_mode);
      aa = static_cast<std::uint32_t>(bits.read_word(pre, kAccessAddressBits));
      body = whiten(bits.slice(pre + kAccessAddressBits, body_bits), channel);
    } else {
      const std::span<const double> all(soft);
      const CodedHeader hdr = decode_coded_header(all.subspan(kCodedPreambleSymbols, coded_block1_symbols()));
      aa = hdr.access_address;
      if (aa != cfg_.expected_access_address) return;
      rep.aa_ok = true;
      // The received coding indicator selects the block 2 decoder; a
      // reserved value loses the packet.
      if (!hdr.scheme) return;
      const std::size_t off = kCodedPreambleSymbols + coded_block1_symbols();
      const BitVector whitened = decode_coded_payload(all.subspan(off, coded_block2_symbols(cfg_.pdu_bits, *hdr.scheme)), *hdr.scheme);
      body = whiten(whitened, channel);
    }

    const PacketStatus status = validate_packet(aa, cfg_.expected_access_address, body, cfg_.crc_init);
    rep.aa_ok = status != PacketStatus::BadAccessAddress;
    rep.crc_ok = status == PacketStatus::Valid;
    if (rep.crc_ok) rep.pdu = body.slice(0, cfg_.pdu_bits);
  }

  ReceiverConfig cfg_;
  PulseShape pulse_;
  BitVector known_;
  std::vector<double> pattern_;
  std::vector<double> rx_taps_;
  std::vector<Complex> reference_mod_;
  std::vector<Complex> reference_;
  std::size_t decision_delay_ = 0;
};

inline RxPacketReport receive(const IqFrame& frame, const ReceiverConfig& cfg) { return Receiver(cfg).receive(frame); }

}  // namespace blesim
