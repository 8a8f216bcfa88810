// Acceptance gate: one PASS/FAIL line per criterion. Exits 1 if any fails.
//
// usage: blesim_acceptance <path-to-blesim> <work-dir>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"

using namespace blesim;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances.
constexpr std::size_t kNoiselessFrames = 1000;
constexpr double kNoiselessBudgetSeconds = 60.0;
constexpr std::size_t kFadingFrames = 2000;
constexpr double kFadingSnrDb = 12.0;
constexpr double kMinLosReduction = 0.5;
constexpr std::size_t kInterferenceFrames = 500;
constexpr double kInterferenceSnrDb = 20.0;
constexpr double kStrongSirDb = -10.0;
constexpr double kWeakSirDb = 10.0;
constexpr double kLe1mMinPerStrong = 0.95;
constexpr double kLe125kMaxPerStrong = 0.5;
constexpr double kLe500kPerLo = 0.05;
constexpr double kLe500kPerHi = 0.95;
constexpr double kMaxPerWeak = 0.1;
constexpr std::size_t kSyncPackets = 200;
constexpr double kSyncSnrDb = 15.0;
constexpr double kMaxCfoResidualHz = 1000.0;
constexpr std::size_t kMaxInjectedDelay = 200;
constexpr long kMaxTimingErrorSamples = 1;
constexpr double kMinTimingHitRate = 0.99;
constexpr int kOracleCases = 1000;
constexpr std::size_t kViterbiMessageBits = 100;
constexpr std::size_t kPduBits = 256;

int failures = 0;

void report(bool pass, const char* id, const std::string& what, const std::string& detail) {
  std::printf("%s %s %s | %s\n", pass ? "PASS" : "FAIL", id, what.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::string per_text(const PerResult& r) {
  return fmt("%s PER=%.4f [%.4f,%.4f]", std::string(to_string(r.phy_mode)).c_str(), r.per, r.wilson_lo, r.wilson_hi);
}

ScenarioConfig base(const std::string& id, std::uint64_t seed) {
  ScenarioConfig c;
  c.id = id;
  c.seed = seed;
  c.pdu_bits = kPduBits;
  c.channel.mode = HopMode::Csa2;
  return c;
}

PerResult run_one(ScenarioConfig c, PhyMode mode, double snr, double sir = kInf) {
  c.phy_modes = {mode};
  c.snr_sweep = {snr};
  if (sir != kInf) c.sir_sweep = std::vector<double>{sir};
  return run_campaign(c).front();
}

void noiseless() {
  bool pass = true;
  std::string detail;
  for (PhyMode m : kAllPhyModes) {
    ScenarioConfig c = base("noiseless", 101);
    c.profile = los_profile(kInf);
    c.frames = kNoiselessFrames;
    const auto t0 = std::chrono::steady_clock::now();
    const PerResult r = run_one(c, m, kInf);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    pass = pass && r.packets_valid == r.frames_sent && secs < kNoiselessBudgetSeconds;
    detail += fmt("%s valid=%zu/%zu %.1fs; ", std::string(to_string(m)).c_str(), r.packets_valid, r.frames_sent, secs);
  }
  report(pass, "C1", "noiseless PER = 0 with CFO +-50 kHz and DC -20 dBc, under 60 s per mode", detail);
}

void coded_gain_nlos() {
  ScenarioConfig c = base("nlos_order", 102);
  c.profile = nlos_profile();
  c.frames = kFadingFrames;
  const PerResult s8 = run_one(c, PhyMode::LE125K, kFadingSnrDb);
  const PerResult s2 = run_one(c, PhyMode::LE500K, kFadingSnrDb);
  const PerResult u = run_one(c, PhyMode::LE1M, kFadingSnrDb);
  const bool pass = s8.per < s2.per && s2.per < u.per && !intervals_overlap(s8, u);
  report(pass, "C2", "NLOS at 12 dB: PER(LE125K) < PER(LE500K) < PER(LE1M), LE125K and LE1M intervals disjoint",
         per_text(s8) + "; " + per_text(s2) + "; " + per_text(u));
}

void los_vs_nlos() {
  ScenarioConfig c = base("los_nlos", 103);
  c.frames = kFadingFrames;
  c.profile = los_profile();
  const PerResult los = run_one(c, PhyMode::LE1M, kFadingSnrDb);
  c.profile = nlos_profile();
  const PerResult nlos = run_one(c, PhyMode::LE1M, kFadingSnrDb);
  const double reduction = nlos.per > 0.0 ? (nlos.per - los.per) / nlos.per : 0.0;
  const bool pass = nlos.per > los.per && !intervals_overlap(los, nlos) && reduction >= kMinLosReduction;
  report(pass, "C3", "LE1M at 12 dB: PER(NLOS) > PER(LOS), disjoint intervals, LOS at least 50% lower",
         "LOS " + per_text(los) + "; NLOS " + per_text(nlos) + fmt("; reduction=%.3f", reduction));
}

void interference() {
  ScenarioConfig c = base("interference", 104);
  c.profile = los_profile();
  c.frames = kInterferenceFrames;
  c.interferer = InterfererConfig{};
  std::vector<PerResult> strong, weak;
  for (PhyMode m : kAllPhyModes) {
    strong.push_back(run_one(c, m, kInterferenceSnrDb, kStrongSirDb));
    weak.push_back(run_one(c, m, kInterferenceSnrDb, kWeakSirDb));
  }
  auto per = [&](const std::vector<PerResult>& v, PhyMode m) {
    return std::find_if(v.begin(), v.end(), [&](const PerResult& r) { return r.phy_mode == m; })->per;
  };
  std::string sd, wd;
  for (const PerResult& r : strong) sd += per_text(r) + "; ";
  for (const PerResult& r : weak) wd += per_text(r) + "; ";

  report(per(strong, PhyMode::LE1M) >= kLe1mMinPerStrong, "C4a", "SIR -10 dB: LE1M PER >= 0.95", sd);
  report(per(strong, PhyMode::LE125K) <= kLe125kMaxPerStrong, "C4b", "SIR -10 dB: LE125K PER <= 0.5", sd);
  const double p500 = per(strong, PhyMode::LE500K);
  report(p500 > kLe500kPerLo && p500 < kLe500kPerHi, "C4c", "SIR -10 dB: 0.05 < LE500K PER < 0.95", sd);
  const bool all_ok = std::all_of(weak.begin(), weak.end(), [](const PerResult& r) { return r.per < kMaxPerWeak; });
  report(all_ok, "C4d", "SIR +10 dB: every mode PER < 0.1", wd);
}

void synchronization() {
  bool cfo_ok = true, timing_ok = true;
  std::string cd, td;
  for (PhyMode m : kAllPhyModes) {
    ScenarioConfig c = base("sync", 105);
    c.profile = los_profile(kInf);
    c.impairments.delay_max_samples = kMaxInjectedDelay;
    c.phy_modes = {m};
    double worst = 0.0;
    std::size_t hits = 0;
    for (std::size_t f = 0; f < kSyncPackets; ++f) {
      const FrameTrial t = build_frame(c, m, kSyncSnrDb, kInf, f);
      const RxPacketReport r = receive(t.rx, t.receiver);
      worst = r.detected ? std::max(worst, std::abs(r.cfo_estimate_hz - t.cfo_hz)) : kInf;
      hits += r.detected && std::abs(r.timing_offset - static_cast<long>(t.packet_start)) <= kMaxTimingErrorSamples;
    }
    const double rate = static_cast<double>(hits) / kSyncPackets;
    cfo_ok = cfo_ok && worst < kMaxCfoResidualHz;
    timing_ok = timing_ok && rate >= kMinTimingHitRate;
    cd += fmt("%s max=%.0f Hz; ", std::string(to_string(m)).c_str(), worst);
    td += fmt("%s %.3f; ", std::string(to_string(m)).c_str(), rate);
  }
  report(cfo_ok, "C5a", "SNR 15 dB: CFO residual < 1 kHz on every one of 200 packets", cd);
  report(timing_ok, "C5b", "timing error <= 1 sample on >= 99% of 200 injected delays", td);
}

void link_layer_oracles() {
  std::mt19937_64 rng(106);
  auto random_bits = [&](std::size_t n) {
    BitVector b(n);
    for (std::size_t i = 0; i < n; ++i) b[i] = rng() & 1U;
    return b;
  };

  int crc_bad = 0, byte_bad = 0;
  for (int k = 0; k < kOracleCases; ++k) {
    const BitVector msg = random_bits(kMinPduBits + rng() % (kMaxPduBits - kMinPduBits + 1));
    const std::uint32_t init = static_cast<std::uint32_t>(rng() & 0xFFFFFF);
    crc_bad += crc24(msg, init) != oracle::crc_long_division(msg, init);
    std::vector<std::uint8_t> bytes(2 + rng() % 255);
    for (auto& b : bytes) b = static_cast<std::uint8_t>(rng());
    const auto ref = oracle::byte_crc(bytes);
    byte_bad += crc_bits(crc24(oracle::bytes_to_bits(bytes))) != oracle::bytes_to_bits({ref.begin(), ref.end()});
  }
  report(crc_bad == 0 && byte_bad == 0, "C6a", "CRC-24 matches bit-serial division oracle on 1000 payloads",
         fmt("division mismatches=%d, byte-oriented mismatches=%d", crc_bad, byte_bad));

  int white_bad = 0;
  for (int k = 0; k < kOracleCases; ++k) {
    const BitVector b = random_bits(1 + rng() % 2100);
    const ChannelIndex ch(static_cast<unsigned>(rng() % 40));
    white_bad += whiten(whiten(b, ch), ch) != b;
  }
  report(white_bad == 0, "C6b", "whitening is an involution on 1000 cases", fmt("failures=%d", white_bad));

  int fec_bad = 0, flips = 0, vit_bad = 0;
  for (int trial = 0; trial < 20; ++trial) {
    BitVector msg = random_bits(kViterbiMessageBits);
    msg.append_word(0, kTermBits);
    const BitVector coded = fec_encode(msg).coded_bits;
    fec_bad += coded != oracle::convolve_code(msg);
    for (std::size_t i = 0; i < coded.size(); ++i, ++flips) {
      BitVector bad = coded;
      bad.flip(i);
      vit_bad += viterbi_decode(bad, CodingScheme::S2) != msg;
      vit_bad += viterbi_decode(pattern_map(FecCodeword{bad}, CodingScheme::S8), CodingScheme::S8) != msg;
    }
  }
  report(fec_bad == 0 && vit_bad == 0, "C6c", "Viterbi corrects every single coded-bit flip in 100-bit messages",
         fmt("flips=%d per scheme, uncorrected=%d, encoder mismatches=%d", flips, vit_bad, fec_bad));
}

void channel_selection() {
  constexpr std::uint32_t aa = 0x8E89BED6;
  const ChannelMap all = ChannelMap::all();
  const ChannelMap nine = ChannelMap::from_channels({9, 10, 21, 22, 23, 33, 34, 35, 36});
  const bool samples = csa2_channel_identifier(aa) == 0x305F && csa2_select(0, aa, all).index() == 25 &&
                       csa2_select(1, aa, all).index() == 20 && csa2_select(2, aa, all).index() == 6 &&
                       csa2_select(3, aa, all).index() == 21 && csa2_select(6, aa, nine).index() == 23 &&
                       csa2_select(7, aa, nine).index() == 9 && csa2_select(8, aa, nine).index() == 34;
  report(samples, "C7a", "CSA#2 matches the Bluetooth sample data", samples ? "7/7 samples" : "mismatch");

  std::mt19937_64 rng(107);
  int bad = 0;
  for (int k = 0; k < kOracleCases; ++k) {
    std::uint64_t mask = 0;
    while (std::popcount(mask) < 2) mask = rng() & ((1ULL << 37) - 1);
    HopState st;
    st.hop_increment = 5 + static_cast<unsigned>(rng() % 12);
    st.last_unmapped = static_cast<unsigned>(rng() % 37);
    bad += csa1_next(st, ChannelMap::from_mask(mask)).first.index() !=
           oracle::csa1_walk(st.last_unmapped, st.hop_increment, mask);
  }
  report(bad == 0, "C7b", "CSA#1 matches the walk oracle on 1000 random (map, state) pairs", fmt("mismatches=%d", bad));

  // Over all 65536 counters the map is exactly balanced, so the sample is
  // the first events of many connections.
  std::vector<std::size_t> counts(37, 0);
  std::size_t draws = 0;
  for (int conn = 0; conn < 20; ++conn) {
    const auto conn_aa = static_cast<std::uint32_t>(rng());
    for (unsigned e = 0; e < 1850; ++e, ++draws) ++counts[csa2_select(static_cast<std::uint16_t>(e), conn_aa, all).index()];
  }
  const double x2 = oracle::chi_squared(counts, static_cast<double>(draws) / 37.0);
  report(x2 < oracle::kChi2Crit36, "C7c", "CSA#2 channel usage uniform (chi^2, alpha = 0.01)",
         fmt("draws=%zu chi2=%.2f crit=%.3f", draws, x2, oracle::kChi2Crit36));
}

void reproducibility(const std::string& cli, const fs::path& work) {
  fs::create_directories(work);
  ScenarioConfig c = base("repro", 108);
  c.phy_modes = {PhyMode::LE1M, PhyMode::LE2M, PhyMode::LE500K};
  c.snr_sweep = {4.0, 8.0};
  c.profile = nlos_profile();
  c.frames = 60;
  const fs::path cfg = work / "repro.json";
  write_text_file(cfg, dump_scenario(c));

  std::vector<std::string> outputs;
  int status = 0;
  for (const char* jobs : {"1", "4", "1", "3"}) {
    const fs::path out = work / (std::string("repro_") + std::to_string(outputs.size()) + ".csv");
    const std::string cmd = "\"" + cli + "\" run --config \"" + cfg.string() + "\" --out \"" + out.string() +
                            "\" --format csv --jobs " + jobs;
    status |= std::system(cmd.c_str());
    outputs.push_back(fs::exists(out) ? read_text_file(out) : std::string());
  }
  const bool same = std::all_of(outputs.begin(), outputs.end(), [&](const std::string& s) { return s == outputs[0]; });
  const bool pass = status == 0 && same && !outputs[0].empty();
  report(pass, "C8", "blesim run CSV byte-identical across runs and --jobs 1/3/4",
         fmt("exit=%d identical=%d bytes=%zu", status, same, outputs[0].size()));
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 3) {
    std::fprintf(stderr, "usage: %s <blesim> <work-dir>\n", argv[0]);
    return 2;
  }
  link_layer_oracles();
  channel_selection();
  noiseless();
  synchronization();
  coded_gain_nlos();
  los_vs_nlos();
  interference();
  reproducibility(argv[1], fs::path(argv[2]) / "acceptance_work");
  std::printf("%d criteria failed\n", failures);
  return failures ? 1 : 0;
}
