#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "blesim/errors.hpp"
#include "blesim/harness.hpp"

namespace blesim {

using Json = nlohmann::ordered_json;

inline constexpr int kConfigSchemaVersion = 1;
inline constexpr int kResultsSchemaVersion = 1;

namespace detail {

// Walks a JSON object with field-path diagnostics. Every key must be
// consumed; leftovers are reported as unknown.
class ObjectReader {
 public:
  ObjectReader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail("", "expected an object");
  }

  [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
    throw ConfigError(field(key) + ": " + msg);
  }

  std::string field(const std::string& key) const {
    if (key.empty()) return path_.empty() ? "<root>" : path_;
    return path_.empty() ? key : path_ + "." + key;
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const Json& at(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  void require(const std::string& key) const {
    if (!has(key)) fail(key, "missing required field");
  }

  double number(const std::string& key, double fallback) {
    if (!has(key)) return fallback;
    return to_number(at(key), key);
  }

  // A number, or null standing for the given infinity.
  double number_or_null(const std::string& key, double fallback, double null_value) {
    if (!has(key)) return fallback;
    const Json& v = at(key);
    if (v.is_null()) return null_value;
    return to_number(v, key);
  }

  template <class Int>
  Int integer(const std::string& key, Int fallback) {
    if (!has(key)) return fallback;
    const Json& v = at(key);
    if (!v.is_number_integer()) fail(key, "expected an integer");
    if constexpr (std::is_unsigned_v<Int>) {
      if (v.is_number_unsigned()) return static_cast<Int>(v.get<std::uint64_t>());
      if (v.get<std::int64_t>() < 0) fail(key, "must be non-negative");
      return static_cast<Int>(v.get<std::int64_t>());
    } else {
      return static_cast<Int>(v.get<std::int64_t>());
    }
  }

  std::string string(const std::string& key, const std::string& fallback) {
    if (!has(key)) return fallback;
    const Json& v = at(key);
    if (!v.is_string()) fail(key, "expected a string");
    return v.get<std::string>();
  }

  // Integer given as a JSON number or a "0x..." string.
  std::uint32_t word(const std::string& key, std::uint32_t fallback, std::uint64_t max) {
    if (!has(key)) return fallback;
    const Json& v = at(key);
    std::uint64_t out = 0;
    if (v.is_number_unsigned()) {
      out = v.get<std::uint64_t>();
    } else if (v.is_string()) {
      const std::string s = v.get<std::string>();
      std::size_t pos = 0;
      try {
        out = std::stoull(s, &pos, 0);
      } catch (const std::exception&) {
        fail(key, "bad integer '" + s + "'");
      }
      if (pos != s.size()) fail(key, "bad integer '" + s + "'");
    } else {
      fail(key, "expected an integer or hex string");
    }
    if (out > max) fail(key, "value out of range");
    return static_cast<std::uint32_t>(out);
  }

  // Array of numbers; null entries stand for +inf (no noise, no interferer).
  std::vector<double> numbers(const std::string& key, const std::vector<double>& fallback) {
    if (!has(key)) return fallback;
    const Json& v = at(key);
    if (!v.is_array()) fail(key, "expected an array of numbers");
    std::vector<double> out;
    for (const Json& e : v) out.push_back(e.is_null() ? kInf : to_number(e, key));
    return out;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) fail(it.key(), "unknown key");
  }

 private:
  double to_number(const Json& v, const std::string& key) const {
    if (!v.is_number()) fail(key, "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) fail(key, "must be finite");
    return d;
  }

  const Json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

inline std::string hex_word(std::uint64_t v, int digits) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "0x%0*llX", digits, static_cast<unsigned long long>(v));
  return buf;
}

inline Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

inline std::string_view to_string(HopMode m) noexcept {
  switch (m) {
    case HopMode::Fixed: return "fixed";
    case HopMode::Csa1: return "csa1";
    case HopMode::Csa2: return "csa2";
  }
  return "?";
}

inline std::string_view to_string(AgcMode m) noexcept { return m == AgcMode::FastAttack ? "fast_attack" : "slow_attack"; }

inline std::string_view to_string(CfoMethod m) noexcept {
  return m == CfoMethod::Correlation ? "correlation" : "squared_spectrum";
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Scenario configuration

inline Json to_json(const ScenarioConfig& c) {
  Json j;
  j["schema_version"] = kConfigSchemaVersion;
  j["id"] = c.id;
  j["seed"] = c.seed;
  Json modes = Json::array();
  for (PhyMode m : c.phy_modes) modes.push_back(std::string(to_string(m)));
  j["phy_modes"] = modes;

  Json ch;
  ch["mode"] = std::string(detail::to_string(c.channel.mode));
  if (c.channel.mode == HopMode::Fixed) {
    ch["index"] = c.channel.index;
  } else {
    ch["map"] = c.channel.map.to_hex();
    if (c.channel.mode == HopMode::Csa1) ch["hop_increment"] = c.channel.hop_increment;
  }
  j["channel"] = ch;

  auto sweep = [](const std::vector<double>& v) {
    Json a = Json::array();
    for (double d : v) a.push_back(detail::number_or_null(d));
    return a;
  };
  j["snr_db"] = sweep(c.snr_sweep);
  j["sir_db"] = c.sir_sweep ? sweep(*c.sir_sweep) : Json(nullptr);

  Json prof;
  prof["kind"] = std::string(to_string(c.profile.kind));
  prof["rician_k_db"] = detail::number_or_null(c.profile.rician_k_db);
  Json taps = Json::array();
  for (const Tap& t : c.profile.taps) taps.push_back(Json{{"delay", t.delay}, {"power_db", t.power_db}});
  prof["taps"] = taps;
  prof["reference_rate_hz"] = c.profile.reference_rate;
  j["profile"] = prof;

  if (c.interferer) {
    j["interferer"] = Json{{"bandwidth_hz", c.interferer->bandwidth},
                           {"center_offset_hz", c.interferer->center_offset},
                           {"duty_cycle", c.interferer->duty_cycle},
                           {"burst_symbols", c.interferer->burst_symbols}};
  } else {
    j["interferer"] = nullptr;
  }

  j["frames"] = c.frames;
  j["pdu_bits"] = c.pdu_bits;
  j["sps"] = c.sps;
  j["access_address"] = detail::hex_word(c.access_address, 8);
  j["impairments"] = Json{{"cfo_max_hz", c.impairments.cfo_max_hz},
                          {"dc_dbc", detail::number_or_null(c.impairments.dc_dbc)},
                          {"delay_max_samples", c.impairments.delay_max_samples}};
  const ReceiverConfig& r = c.receiver;
  j["receiver"] = Json{{"agc_mode", std::string(detail::to_string(r.agc_mode))},
                       {"agc_target_power_db", r.agc_target_power_db},
                       {"notch_radius", r.notch_radius},
                       {"preamble_detect_threshold", r.preamble_detect_threshold},
                       {"cfo_method", std::string(detail::to_string(r.cfo_method))},
                       {"max_cfo_hz", r.max_cfo_hz},
                       {"crc_init", detail::hex_word(r.crc_init, 6)},
                       {"bt", r.bt},
                       {"modulation_index", r.modulation_index},
                       {"pulse_span", r.pulse_span},
                       {"rx_filter_bt", r.rx_filter_bt}};
  j["lead_symbols"] = c.lead_symbols;
  j["tail_symbols"] = c.tail_symbols;
  return j;
}

inline ScenarioConfig scenario_from_json(const Json& j) {
  detail::ObjectReader rd(j, "");
  rd.require("schema_version");
  if (rd.at("schema_version") != kConfigSchemaVersion)
    rd.fail("schema_version", "unsupported version (expected " + std::to_string(kConfigSchemaVersion) + ")");
  rd.require("seed");

  ScenarioConfig c;
  c.id = rd.string("id", c.id);
  c.seed = rd.integer<std::uint64_t>("seed", c.seed);

  if (rd.has("phy_modes")) {
    const Json& v = rd.at("phy_modes");
    if (!v.is_array()) rd.fail("phy_modes", "expected an array of mode names");
    c.phy_modes.clear();
    for (const Json& e : v) {
      if (!e.is_string()) rd.fail("phy_modes", "expected mode names");
      try {
        c.phy_modes.push_back(parse_phy_mode(e.get<std::string>()));
      } catch (const Error& err) {
        rd.fail("phy_modes", err.what());
      }
    }
  }

  if (rd.has("channel")) {
    detail::ObjectReader ch(rd.at("channel"), "channel");
    const std::string mode = ch.string("mode", "fixed");
    if (mode == "fixed") {
      c.channel.mode = HopMode::Fixed;
      c.channel.index = ch.integer<unsigned>("index", c.channel.index);
    } else if (mode == "csa1" || mode == "csa2") {
      c.channel.mode = mode == "csa1" ? HopMode::Csa1 : HopMode::Csa2;
      if (ch.has("map")) {
        const std::string hex = ch.string("map", "");
        try {
          c.channel.map = ChannelMap::from_hex(hex);
        } catch (const Error& e) {
          ch.fail("map", e.what());
        }
      }
      if (c.channel.mode == HopMode::Csa1) c.channel.hop_increment = ch.integer<unsigned>("hop_increment", c.channel.hop_increment);
    } else {
      ch.fail("mode", "expected fixed, csa1 or csa2");
    }
    ch.finish();
  }

  c.snr_sweep = rd.numbers("snr_db", c.snr_sweep);
  if (rd.has("sir_db")) {
    if (rd.at("sir_db").is_null()) c.sir_sweep.reset();
    else c.sir_sweep = rd.numbers("sir_db", {});
  }

  if (rd.has("profile")) {
    detail::ObjectReader pr(rd.at("profile"), "profile");
    pr.require("kind");
    ProfileKind kind{};
    try {
      kind = parse_profile_kind(pr.string("kind", ""));
    } catch (const Error& e) {
      pr.fail("kind", e.what());
    }
    c.profile = default_profile(kind);
    c.profile.rician_k_db = pr.number_or_null("rician_k_db", c.profile.rician_k_db,
                                              kind == ProfileKind::LOS ? kInf : -kInf);
    if (pr.has("taps")) {
      const Json& taps = pr.at("taps");
      if (!taps.is_array()) pr.fail("taps", "expected an array of {delay, power_db}");
      c.profile.taps.clear();
      for (std::size_t i = 0; i < taps.size(); ++i) {
        detail::ObjectReader tr(taps[i], "profile.taps[" + std::to_string(i) + "]");
        tr.require("delay");
        tr.require("power_db");
        c.profile.taps.push_back({tr.number("delay", 0.0), tr.number("power_db", 0.0)});
        tr.finish();
      }
    }
    c.profile.reference_rate = pr.number("reference_rate_hz", c.profile.reference_rate);
    pr.finish();
  }

  if (rd.has("interferer")) {
    const Json& v = rd.at("interferer");
    if (v.is_null()) {
      c.interferer.reset();
    } else {
      detail::ObjectReader ir(v, "interferer");
      InterfererConfig ic;
      ic.bandwidth = ir.number("bandwidth_hz", ic.bandwidth);
      ic.center_offset = ir.number("center_offset_hz", ic.center_offset);
      ic.duty_cycle = ir.number("duty_cycle", ic.duty_cycle);
      ic.burst_symbols = ir.integer<int>("burst_symbols", ic.burst_symbols);
      ir.finish();
      c.interferer = ic;
    }
  }

  c.frames = rd.integer<std::size_t>("frames", c.frames);
  c.pdu_bits = rd.integer<std::size_t>("pdu_bits", c.pdu_bits);
  c.sps = rd.integer<int>("sps", c.sps);
  c.access_address = rd.word("access_address", c.access_address, 0xFFFFFFFFULL);

  if (rd.has("impairments")) {
    detail::ObjectReader ir(rd.at("impairments"), "impairments");
    c.impairments.cfo_max_hz = ir.number("cfo_max_hz", c.impairments.cfo_max_hz);
    c.impairments.dc_dbc = ir.number_or_null("dc_dbc", c.impairments.dc_dbc, -kInf);
    c.impairments.delay_max_samples = ir.integer<std::size_t>("delay_max_samples", c.impairments.delay_max_samples);
    ir.finish();
  }

  if (rd.has("receiver")) {
    detail::ObjectReader rr(rd.at("receiver"), "receiver");
    ReceiverConfig& r = c.receiver;
    const std::string agc = rr.string("agc_mode", std::string(detail::to_string(r.agc_mode)));
    if (agc == "slow_attack") r.agc_mode = AgcMode::SlowAttack;
    else if (agc == "fast_attack") r.agc_mode = AgcMode::FastAttack;
    else rr.fail("agc_mode", "expected slow_attack or fast_attack");
    r.agc_target_power_db = rr.number("agc_target_power_db", r.agc_target_power_db);
    r.notch_radius = rr.number("notch_radius", r.notch_radius);
    r.preamble_detect_threshold = rr.number("preamble_detect_threshold", r.preamble_detect_threshold);
    const std::string cfo = rr.string("cfo_method", std::string(detail::to_string(r.cfo_method)));
    if (cfo == "squared_spectrum") r.cfo_method = CfoMethod::SquaredSpectrum;
    else if (cfo == "correlation") r.cfo_method = CfoMethod::Correlation;
    else rr.fail("cfo_method", "expected squared_spectrum or correlation");
    r.max_cfo_hz = rr.number("max_cfo_hz", r.max_cfo_hz);
    r.crc_init = rr.word("crc_init", r.crc_init, 0xFFFFFFULL);
    r.bt = rr.number("bt", r.bt);
    r.modulation_index = rr.number("modulation_index", r.modulation_index);
    r.pulse_span = rr.integer<int>("pulse_span", r.pulse_span);
    r.rx_filter_bt = rr.number("rx_filter_bt", r.rx_filter_bt);
    rr.finish();
  }

  c.lead_symbols = rd.integer<int>("lead_symbols", c.lead_symbols);
  c.tail_symbols = rd.integer<int>("tail_symbols", c.tail_symbols);
  rd.finish();
  validate(c);
  return c;
}

inline ScenarioConfig parse_scenario(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError(std::string("<root>: malformed JSON: ") + e.what());
  }
  return scenario_from_json(j);
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("read failed for '" + path.string() + "'");
  return ss.str();
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  out.flush();
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

inline ScenarioConfig load_scenario(const std::filesystem::path& path) { return parse_scenario(read_text_file(path)); }

inline std::string dump_scenario(const ScenarioConfig& c) { return to_json(c).dump(2) + "\n"; }

// ---------------------------------------------------------------------------
// Results

inline constexpr const char* kCsvHeader = "scenario,phy,snr_db,sir_db,frames,detected,valid,per,wilson_lo,wilson_hi";

namespace detail {

inline std::string format_db(double v) {
  if (v == kInf) return "inf";
  if (v == -kInf) return "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

inline std::string format_fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace detail

inline std::string results_to_csv(const std::vector<PerResult>& results) {
  std::string out = std::string(kCsvHeader) + "\n";
  for (const PerResult& r : results) {
    out += r.scenario + "," + std::string(to_string(r.phy_mode)) + "," + detail::format_db(r.snr_db) + "," +
           detail::format_db(r.sir_db) + "," + std::to_string(r.frames_sent) + "," + std::to_string(r.frames_detected) +
           "," + std::to_string(r.packets_valid) + "," + detail::format_fixed(r.per) + "," +
           detail::format_fixed(r.wilson_lo) + "," + detail::format_fixed(r.wilson_hi) + "\n";
  }
  return out;
}

// Infinite SNR/SIR (no noise, no interferer) is written as null.
inline std::string results_to_json(const std::vector<PerResult>& results) {
  Json arr = Json::array();
  for (const PerResult& r : results) {
    arr.push_back(Json{{"scenario", r.scenario},
                       {"phy", std::string(to_string(r.phy_mode))},
                       {"snr_db", detail::number_or_null(r.snr_db)},
                       {"sir_db", detail::number_or_null(r.sir_db)},
                       {"frames", r.frames_sent},
                       {"detected", r.frames_detected},
                       {"valid", r.packets_valid},
                       {"per", r.per},
                       {"wilson_lo", r.wilson_lo},
                       {"wilson_hi", r.wilson_hi}});
  }
  return Json{{"schema_version", kResultsSchemaVersion}, {"results", arr}}.dump(2) + "\n";
}

inline std::vector<PerResult> results_from_json(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError(std::string("<root>: malformed JSON: ") + e.what());
  }
  detail::ObjectReader rd(j, "");
  rd.require("schema_version");
  if (rd.at("schema_version") != kResultsSchemaVersion) rd.fail("schema_version", "unsupported version");
  rd.require("results");
  const Json& arr = rd.at("results");
  if (!arr.is_array()) rd.fail("results", "expected an array");
  rd.finish();

  std::vector<PerResult> out;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    detail::ObjectReader er(arr[i], "results[" + std::to_string(i) + "]");
    for (const char* k : {"scenario", "phy", "snr_db", "sir_db", "frames", "detected", "valid", "per", "wilson_lo", "wilson_hi"})
      er.require(k);
    PerResult r;
    r.scenario = er.string("scenario", "");
    try {
      r.phy_mode = parse_phy_mode(er.string("phy", ""));
    } catch (const Error& e) {
      er.fail("phy", e.what());
    }
    r.snr_db = er.number_or_null("snr_db", kInf, kInf);
    r.sir_db = er.number_or_null("sir_db", kInf, kInf);
    r.frames_sent = er.integer<std::size_t>("frames", 0);
    r.frames_detected = er.integer<std::size_t>("detected", 0);
    r.packets_valid = er.integer<std::size_t>("valid", 0);
    r.per = er.number("per", 0.0);
    r.wilson_lo = er.number("wilson_lo", 0.0);
    r.wilson_hi = er.number("wilson_hi", 0.0);
    er.finish();
    out.push_back(std::move(r));
  }
  return out;
}

enum class ResultFormat { Csv, Json };

inline ResultFormat parse_result_format(std::string_view s) {
  if (s == "csv") return ResultFormat::Csv;
  if (s == "json") return ResultFormat::Json;
  throw ConfigError("format: expected csv or json");
}

inline void emit_results(const std::vector<PerResult>& results, ResultFormat format, const std::filesystem::path& path) {
  if (results.empty()) throw ConfigError("results: nothing to write");
  write_text_file(path, format == ResultFormat::Csv ? results_to_csv(results) : results_to_json(results));
}

}  // namespace blesim
