#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "blesim/bits.hpp"
#include "blesim/chan_select.hpp"
#include "blesim/channel.hpp"
#include "blesim/coded_phy.hpp"
#include "blesim/dsp.hpp"
#include "blesim/errors.hpp"
#include "blesim/gmsk.hpp"
#include "blesim/ll_packet.hpp"
#include "blesim/phy.hpp"
#include "blesim/rx_chain.hpp"

namespace blesim {

enum class HopMode { Fixed, Csa1, Csa2 };

struct ChannelPlan {
  HopMode mode = HopMode::Fixed;
  unsigned index = 37;  // fixed channel
  ChannelMap map = ChannelMap::all();
  unsigned hop_increment = 7;

  friend bool operator==(const ChannelPlan&, const ChannelPlan&) = default;
};

struct Impairments {
  double cfo_max_hz = 50e3;  // uniform in [-max, max] per frame
  double dc_dbc = -20.0;     // -inf disables
  std::size_t delay_max_samples = 0;  // extra packet delay, uniform in [0, max]
  friend bool operator==(const Impairments&, const Impairments&) = default;
};

struct ScenarioConfig {
  std::string id = "scenario";
  std::vector<PhyMode> phy_modes{kAllPhyModes.begin(), kAllPhyModes.end()};
  ChannelPlan channel;
  std::vector<double> snr_sweep{0, 2, 4, 6, 8, 10, 12, 14, 16, 18, 20};
  std::optional<std::vector<double>> sir_sweep;
  ChannelProfile profile = los_profile();
  std::optional<InterfererConfig> interferer;
  std::size_t frames = 10000;
  std::size_t pdu_bits = 2040;
  std::uint64_t seed = 1;
  int sps = 0;  // 0: 8, raised so the sample rate covers the interferer
  std::uint32_t access_address = kAdvertisingAccessAddress;
  Impairments impairments;
  ReceiverConfig receiver;  // mode-, channel- and length-specific fields are overwritten per frame
  int lead_symbols = 32;
  int tail_symbols = 16;

  friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

struct PerResult {
  std::string scenario;
  PhyMode phy_mode = PhyMode::LE1M;
  double snr_db = kInf;
  double sir_db = kInf;
  std::size_t frames_sent = 0;
  std::size_t frames_detected = 0;
  std::size_t packets_valid = 0;
  double per = 0.0;
  double wilson_lo = 0.0;
  double wilson_hi = 0.0;

  friend bool operator==(const PerResult&, const PerResult&) = default;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

// 95% Wilson score interval for `errors` out of `trials`.
inline Interval wilson_interval(std::size_t errors, std::size_t trials, double z = 1.959963984540054) {
  if (trials == 0) return {0.0, 1.0};
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(errors) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2.0 * n)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

inline PerResult make_result(std::string scenario, PhyMode mode, double snr, double sir,
                             std::size_t sent, std::size_t detected, std::size_t valid) {
  PerResult r{std::move(scenario), mode, snr, sir, sent, detected, valid, 0.0, 0.0, 0.0};
  r.per = sent ? 1.0 - static_cast<double>(valid) / static_cast<double>(sent) : 0.0;
  const Interval w = wilson_interval(sent - valid, sent);
  r.wilson_lo = w.lo;
  r.wilson_hi = w.hi;
  return r;
}

inline bool intervals_overlap(const PerResult& a, const PerResult& b) {
  return a.wilson_lo <= b.wilson_hi && b.wilson_lo <= a.wilson_hi;
}

// ---------------------------------------------------------------------------

inline void validate(const ScenarioConfig& c) {
  auto fail = [](const std::string& field, const std::string& msg) { throw ConfigError(field + ": " + msg); };
  if (c.id.empty()) fail("id", "must be non-empty");
  if (c.phy_modes.empty()) fail("phy_modes", "must be non-empty");
  if (c.snr_sweep.empty()) fail("snr_db", "sweep must be non-empty");
  for (double s : c.snr_sweep)
    if (std::isnan(s)) fail("snr_db", "NaN in sweep");
  if (c.sir_sweep && c.sir_sweep->empty()) fail("sir_db", "sweep must be non-empty when present");
  if (c.sir_sweep && !c.interferer) fail("sir_db", "SIR sweep requires an interferer");
  if (c.frames < 1) fail("frames", "must be >= 1");
  try {
    check_pdu_length(c.pdu_bits);
  } catch (const Error& e) {
    fail("pdu_bits", e.what());
  }
  try {
    validate(c.profile);
  } catch (const Error& e) {
    fail("profile", e.what());
  }
  if (c.channel.mode == HopMode::Fixed && c.channel.index > 39) fail("channel.index", "outside 0..39");
  if (c.channel.mode != HopMode::Fixed) {
    try {
      c.channel.map.validate();
    } catch (const Error& e) {
      fail("channel.map", e.what());
    }
  }
  if (c.channel.mode == HopMode::Csa1 && (c.channel.hop_increment < 5 || c.channel.hop_increment > 16))
    fail("channel.hop_increment", "outside 5..16");
  if (c.sps != 0 && c.sps < 2) fail("sps", "must be >= 2 (or 0 for automatic)");
  if (c.interferer) {
    if (!(c.interferer->bandwidth > 0.0)) fail("interferer.bandwidth_hz", "must be positive");
    if (c.interferer->duty_cycle < 0.0 || c.interferer->duty_cycle > 1.0) fail("interferer.duty_cycle", "outside [0, 1]");
    if (c.interferer->burst_symbols < 1) fail("interferer.burst_symbols", "must be >= 1");
  }
  if (c.impairments.cfo_max_hz < 0.0) fail("impairments.cfo_max_hz", "must be >= 0");
  if (c.lead_symbols < 0 || c.tail_symbols < 0) fail("lead_symbols", "guards must be >= 0");
  try {
    ReceiverConfig r = c.receiver;
    r.pdu_bits = c.pdu_bits;
    validate(r);
  } catch (const Error& e) {
    fail("receiver", e.what());
  }
}

inline int effective_sps(const ScenarioConfig& c, PhyMode mode) {
  int sps = c.sps > 0 ? c.sps : kDefaultSps;
  if (c.sps == 0 && c.interferer) {
    const double need = c.interferer->bandwidth + 2.0 * std::abs(c.interferer->center_offset);
    sps = std::max(sps, static_cast<int>(std::ceil(need / symbol_rate_hz(mode) - 1e-9)));
  }
  return sps;
}

inline ChannelIndex frame_channel(const ChannelPlan& plan, std::uint32_t access_address, std::size_t frame) {
  switch (plan.mode) {
    case HopMode::Fixed: return ChannelIndex(plan.index);
    case HopMode::Csa1: {
      HopState st;
      st.hop_increment = plan.hop_increment;
      st.last_unmapped = static_cast<unsigned>((frame % kDataChannels) * plan.hop_increment % kDataChannels);
      return csa1_next(st, plan.map).first;
    }
    case HopMode::Csa2: return csa2_select(static_cast<std::uint16_t>(frame), access_address, plan.map);
  }
  return ChannelIndex(plan.index);
}

inline std::uint64_t hash_id(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char c : s) h = (h ^ c) * 0x100000001b3ULL;
  return h;
}

// Random streams used for one frame. They depend on the campaign seed, the
// scenario and the frame index only, so every PHY mode and sweep point sees
// the same PDUs, fading and noise shapes.
struct FrameSeeds {
  std::uint64_t pdu, fade, impair, noise, interferer;
};

inline FrameSeeds frame_seeds(const ScenarioConfig& c, std::size_t frame) {
  const std::uint64_t base = derive_seed(c.seed, hash_id(c.id), frame);
  return {derive_seed(base, 1), derive_seed(base, 2), derive_seed(base, 3), derive_seed(base, 4), derive_seed(base, 5)};
}

struct FrameTrial {
  BitVector pdu;
  ChannelIndex channel{37};
  double cfo_hz = 0.0;
  std::size_t packet_start = 0;  // lead guard, in samples
  IqFrame tx;                    // clean transmitted frame
  IqFrame rx;                    // after all impairments
  ReceiverConfig receiver;
};

inline FrameTrial build_frame(const ScenarioConfig& c, PhyMode mode, double snr_db, double sir_db, std::size_t frame) {
  const FrameSeeds seeds = frame_seeds(c, frame);
  const int sps = effective_sps(c, mode);
  FrameTrial t;

  Rng rng(seeds.pdu);
  t.pdu = BitVector(c.pdu_bits);
  for (std::size_t i = 0; i < c.pdu_bits; ++i) t.pdu[i] = rng() & 1U;
  t.channel = frame_channel(c.channel, c.access_address, frame);

  const LinkLayerPacket pkt = make_packet(t.pdu, mode, c.access_address, c.receiver.crc_init);
  const BitVector air = is_coded(mode) ? assemble_coded(pkt, t.channel) : assemble_uncoded(pkt, t.channel);
  const PulseShape pulse = gaussian_taps(c.receiver.bt, sps, c.receiver.pulse_span);
  const IqFrame burst = gmsk_modulate(air, pulse, c.receiver.modulation_index, symbol_rate_hz(mode));

  Rng imp(seeds.impair);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  t.cfo_hz = c.impairments.cfo_max_hz * uni(imp);
  const double dc_phase = kPi * uni(imp);
  const std::size_t delay = std::uniform_int_distribution<std::size_t>(0, c.impairments.delay_max_samples)(imp);

  const std::size_t lead = static_cast<std::size_t>(c.lead_symbols * sps);
  t.packet_start = lead + delay;
  t.tx = burst;
  t.tx.samples.assign(t.packet_start, Complex{});
  t.tx.samples.insert(t.tx.samples.end(), burst.samples.begin(), burst.samples.end());
  t.tx.samples.resize(t.tx.samples.size() + static_cast<std::size_t>(c.tail_symbols * sps), Complex{});

  ChannelProfile profile = c.profile;
  profile.seed = seeds.fade;
  IqFrame x = fade(t.tx, profile);

  x = apply_cfo(x, t.cfo_hz);
  if (std::isfinite(c.impairments.dc_dbc))
    x = apply_dc(x, std::polar(std::sqrt(db_to_linear(c.impairments.dc_dbc)), dc_phase));

  if (c.interferer && sir_db != kInf) {
    InterfererConfig icfg = *c.interferer;
    icfg.seed = seeds.interferer;
    x = mix(x, wlan_interferer(x.size(), icfg, x.sample_rate), sir_db, 1.0);
  }
  t.rx = awgn(x, snr_db, seeds.noise, 1.0);

  t.receiver = c.receiver;
  t.receiver.phy_mode = mode;
  t.receiver.expected_access_address = c.access_address;
  t.receiver.channel = t.channel.index();
  t.receiver.pdu_bits = c.pdu_bits;
  t.receiver.sps = sps;
  // The receiver knows the guard layout, not the drawn delay.
  t.receiver.search_window = lead + c.impairments.delay_max_samples + static_cast<std::size_t>(8 * sps);
  return t;
}

struct SweepPoint {
  PhyMode mode;
  double snr_db;
  double sir_db;
};

inline std::vector<SweepPoint> sweep_points(const ScenarioConfig& c) {
  std::vector<SweepPoint> pts;
  const std::vector<double> sirs = c.sir_sweep ? *c.sir_sweep : std::vector<double>{kInf};
  for (PhyMode m : c.phy_modes)
    for (double snr : c.snr_sweep)
      for (double sir : sirs) pts.push_back({m, snr, sir});
  return pts;
}

// Runs every (mode, SNR, SIR) point. Frames are independent trials whose
// outcomes are stored by index, so results do not depend on `jobs`.
inline std::vector<PerResult> run_campaign(const ScenarioConfig& c, unsigned jobs = 1) {
  validate(c);
  const auto points = sweep_points(c);
  const std::size_t total = points.size() * c.frames;
  std::vector<std::uint8_t> outcome(total, 0);  // bit 0 detected, bit 1 valid

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t task; (task = next.fetch_add(1)) < total;) {
      const SweepPoint& p = points[task / c.frames];
      const std::size_t frame = task % c.frames;
      const FrameTrial t = build_frame(c, p.mode, p.snr_db, p.sir_db, frame);
      const RxPacketReport rep = receive(t.rx, t.receiver);
      const bool valid = rep.aa_ok && rep.crc_ok;
      outcome[task] = static_cast<std::uint8_t>((rep.detected ? 1 : 0) | (valid ? 2 : 0));
    }
  };
  jobs = std::max(1U, jobs);
  {
    std::vector<std::jthread> pool;
    for (unsigned j = 1; j < jobs; ++j) pool.emplace_back(worker);
    worker();
  }

  std::vector<PerResult> results;
  for (std::size_t i = 0; i < points.size(); ++i) {
    std::size_t detected = 0, valid = 0;
    for (std::size_t f = 0; f < c.frames; ++f) {
      const std::uint8_t o = outcome[i * c.frames + f];
      detected += o & 1U;
      valid += (o >> 1) & 1U;
    }
    results.push_back(make_result(c.id, points[i].mode, points[i].snr_db, points[i].sir_db, c.frames, detected, valid));
  }
  return results;
}

// Marks channels whose PER is below `threshold` as used. When fewer than two
// qualify, the two lowest-PER channels are kept (ties: lower index).
inline ChannelMap update_channel_map(const std::vector<std::pair<unsigned, double>>& per_by_channel,
                                     double threshold = 0.5) {
  std::vector<std::pair<unsigned, double>> data;
  for (const auto& [ch, per] : per_by_channel) {
    if (ch >= kDataChannels) throw MapError("channel " + std::to_string(ch) + " is not a data channel");
    data.emplace_back(ch, per);
  }
  std::sort(data.begin(), data.end());
  data.erase(std::unique(data.begin(), data.end(), [](auto& a, auto& b) { return a.first == b.first; }), data.end());
  if (data.size() < 2) throw InsufficientDataError("need PER results for at least two channels");

  std::vector<unsigned> good;
  for (const auto& [ch, per] : data)
    if (per < threshold) good.push_back(ch);
  if (good.size() < 2) {
    std::stable_sort(data.begin(), data.end(), [](auto& a, auto& b) { return a.second < b.second; });
    good = {data[0].first, data[1].first};
  }
  return ChannelMap::from_channels(std::move(good));
}

// ---------------------------------------------------------------------------
// The four canned experiments: LOS and NLOS, each with and without a
// co-channel 20 MHz WLAN interferer.

inline std::vector<ScenarioConfig> paper_scenarios() {
  std::vector<ScenarioConfig> out;
  for (ProfileKind kind : {ProfileKind::LOS, ProfileKind::NLOS}) {
    for (bool interference : {false, true}) {
      ScenarioConfig c;
      c.id = std::string(to_string(kind)) + (interference ? "_interference" : "");
      c.profile = default_profile(kind);
      c.channel.mode = HopMode::Fixed;
      c.channel.index = 37;  // 2402 MHz
      if (interference) {
        c.snr_sweep = {20.0};
        c.sir_sweep = std::vector<double>{-10.0, 0.0, 10.0};  // strongest interferer first
        c.interferer = InterfererConfig{};
      }
      out.push_back(std::move(c));
    }
  }
  return out;
}

}  // namespace blesim
