#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "test_util.hpp"

using namespace blesim;

namespace {

IqFrame tone(std::size_t n, double fs = 8e6) {
  IqFrame f;
  f.sample_rate = fs;
  f.samples.assign(n, Complex{1.0, 0.0});
  return f;
}

}  // namespace

TEST(Profile, Defaults) {
  const ChannelProfile nlos = nlos_profile();
  EXPECT_EQ(nlos.taps.size(), 8U);
  EXPECT_NEAR(rms_delay_spread(nlos.taps), 4.0, 1e-6);
  EXPECT_NO_THROW(validate(nlos));
  EXPECT_NO_THROW(validate(los_profile()));
  EXPECT_NO_THROW(validate(reverberant_profile()));
  EXPECT_GT(rms_delay_spread(reverberant_profile().taps), rms_delay_spread(nlos.taps));
  for (ProfileKind k : {ProfileKind::LOS, ProfileKind::NLOS, ProfileKind::Reverberant})
    EXPECT_EQ(parse_profile_kind(to_string(k)), k);
  EXPECT_THROW(parse_profile_kind("urban"), ParamError);
}

TEST(Profile, Validation) {
  ChannelProfile p = los_profile();
  p.taps = {{0.0, -1.0}};
  EXPECT_THROW(validate(p), ProfileError);
  p = los_profile();
  p.taps = {{-1.0, 0.0}};
  EXPECT_THROW(validate(p), ProfileError);
  p = los_profile(-3.0);
  EXPECT_THROW(validate(p), ProfileError);
  p = nlos_profile();
  p.rician_k_db = 5.0;
  EXPECT_THROW(validate(p), ProfileError);
  p.taps.clear();
  EXPECT_THROW(validate(p), ProfileError);
}

TEST(Fading, FirstTapIsRayleigh) {
  ChannelProfile p = nlos_profile();
  const double p0 = db_to_linear(p.taps[0].power_db);
  const std::size_t n = 2000;
  std::vector<double> r;
  for (std::size_t s = 0; s < n; ++s) {
    p.seed = derive_seed(41, s);
    r.push_back(std::abs(realize(p, 8e6).gains[0]));
  }
  std::sort(r.begin(), r.end());
  double d = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double cdf = 1.0 - std::exp(-r[i] * r[i] / p0);
    d = std::max({d, std::abs(cdf - static_cast<double>(i) / n), std::abs(cdf - static_cast<double>(i + 1) / n)});
  }
  EXPECT_LT(d, 1.63 / std::sqrt(static_cast<double>(n)));  // KS critical value, alpha = 0.01
}

TEST(Fading, PureLosRayHasUnitGain) {
  ChannelProfile p = los_profile(kInf);
  for (std::uint64_t s = 0; s < 20; ++s) {
    p.seed = s;
    EXPECT_NEAR(std::abs(realize(p, 8e6).gains[0]), 1.0, 1e-12);
  }
}

TEST(Fading, NlosIsFrequencySelective) {
  ChannelProfile p = nlos_profile();
  double spread_db = 0.0;
  const int realizations = 200;
  for (int s = 0; s < realizations; ++s) {
    p.seed = derive_seed(42, s);
    const ChannelRealization ch = realize(p, 8e6);
    double lo = 1e300, hi = 0.0;
    for (double f = -1e6; f <= 1e6; f += 50e3) {
      Complex h{};
      for (std::size_t i = 0; i < ch.gains.size(); ++i)
        h += ch.gains[i] * std::polar(1.0, -2.0 * kPi * f * static_cast<double>(ch.delays[i]) / 8e6);
      lo = std::min(lo, std::norm(h));
      hi = std::max(hi, std::norm(h));
    }
    spread_db += linear_to_db(hi / lo);
  }
  EXPECT_GT(spread_db / realizations, 3.0);

  const IqFrame x = testutil::noise_frame(1 << 15, 1.0, 43);
  ChannelProfile flat = los_profile(kInf);
  flat.seed = 44;
  const IqFrame y = fade(x, flat);
  EXPECT_NEAR(mean_power(y), mean_power(x), 1e-9);
}

TEST(Fading, DelaysScaleWithSampleRate) {
  ChannelProfile p = nlos_profile();
  const ChannelRealization a = realize(p, 8e6), b = realize(p, 16e6);
  for (std::size_t i = 0; i < a.delays.size(); ++i) EXPECT_EQ(b.delays[i], 2 * a.delays[i]);
  EXPECT_THROW(fade(tone(10), p), ProfileError);
}

TEST(Noise, MeasuredSnrMatches) {
  const IqFrame x = tone(200000);
  for (double snr : {0.0, 10.0, 20.0}) {
    const IqFrame y = awgn(x, snr, 45, 1.0);
    double np = 0.0;
    for (std::size_t n = 0; n < x.size(); ++n) np += std::norm(y.samples[n] - x.samples[n]);
    np /= static_cast<double>(x.size());
    EXPECT_NEAR(linear_to_db(1.0 / np), snr, 0.05);
  }
  EXPECT_EQ(awgn(x, kInf, 1).samples, x.samples);
  EXPECT_EQ(awgn(x, 5.0, 9).samples, awgn(x, 5.0, 9).samples);
  EXPECT_THROW(awgn(IqFrame{}, 5.0, 1), ParamError);
}

TEST(Offset, CfoMovesSpectralPeak) {
  const std::size_t n = 4096;
  for (double cfo : {125e3, -250e3, 1e6}) {
    const IqFrame y = apply_cfo(tone(n), cfo);
    const auto spec = fft(y.samples, n);
    std::size_t best = 0;
    for (std::size_t k = 0; k < n; ++k)
      if (std::norm(spec[k]) > std::norm(spec[best])) best = k;
    const long expected = std::lround(cfo / 8e6 * n);
    EXPECT_EQ(static_cast<long>(best), (expected + static_cast<long>(n)) % static_cast<long>(n)) << cfo;
  }
  EXPECT_THROW(apply_cfo(tone(8), 4e6), ParamError);
}

TEST(Offset, DcAddsConstant) {
  const IqFrame y = apply_dc(tone(16), Complex{0.1, -0.2});
  for (const Complex& v : y.samples) EXPECT_EQ(v, (Complex{1.1, -0.2}));
}

TEST(Interferer, OccupiedBandwidth) {
  InterfererConfig cfg;
  cfg.seed = 46;
  const IqFrame w = wlan_interferer(200000, cfg, 40e6);
  EXPECT_NEAR(mean_power(w), 1.0, 0.05);
  const double obw = occupied_bandwidth(welch_psd(w.samples, 1024), 40e6, 0.99);
  EXPECT_NEAR(obw, 16.6e6, 0.6e6);
}

TEST(Interferer, DutyCycleGatesBursts) {
  InterfererConfig cfg;
  cfg.seed = 47;
  cfg.duty_cycle = 0.25;
  const IqFrame w = wlan_interferer(400000, cfg, 20e6);
  const auto active = std::count_if(w.samples.begin(), w.samples.end(), [](const Complex& v) { return v != Complex{}; });
  EXPECT_NEAR(static_cast<double>(active) / w.size(), 0.25, 0.05);
  cfg.duty_cycle = 0.0;
  const IqFrame z = wlan_interferer(1000, cfg, 20e6);
  EXPECT_EQ(mean_power(z), 0.0);
}

TEST(Interferer, Validation) {
  InterfererConfig cfg;
  EXPECT_THROW(wlan_interferer(100, cfg, 8e6), ParamError);
  cfg.duty_cycle = 1.5;
  EXPECT_THROW(wlan_interferer(100, cfg, 40e6), ParamError);
  cfg = {};
  cfg.bandwidth = -1.0;
  EXPECT_THROW(wlan_interferer(100, cfg, 40e6), ParamError);
}

TEST(Interferer, MixSetsSir) {
  InterfererConfig cfg;
  cfg.seed = 48;
  const IqFrame s = tone(100000, 20e6);
  const IqFrame w = wlan_interferer(s.size(), cfg, 20e6);
  for (double sir : {-10.0, 0.0, 10.0}) {
    const IqFrame y = mix(s, w, sir, 1.0);
    double ip = 0.0;
    for (std::size_t n = 0; n < s.size(); ++n) ip += std::norm(y.samples[n] - s.samples[n]);
    EXPECT_NEAR(linear_to_db(1.0 / (ip / s.size())), sir, 0.01);
  }
  EXPECT_EQ(mix(s, w, kInf).samples, s.samples);
  EXPECT_THROW(mix(s, tone(10, 8e6), 0.0), RateMismatchError);
}
