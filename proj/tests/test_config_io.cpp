#include <gtest/gtest.h>

#include <filesystem>

#include "test_util.hpp"

using namespace blesim;

namespace {

std::string error_of(const std::string& text) {
  try {
    parse_scenario(text);
  } catch (const ConfigError& e) {
    const std::string what = e.what();
    const std::string prefix = "ConfigError: ";
    return what.rfind(prefix, 0) == 0 ? what.substr(prefix.size()) : what;
  }
  return "";
}

}  // namespace

TEST(Config, RoundTripsEveryField) {
  ScenarioConfig c;
  c.id = "roundtrip";
  c.phy_modes = {PhyMode::LE125K, PhyMode::LE2M};
  c.channel.mode = HopMode::Csa1;
  c.channel.map = ChannelMap::from_channels({1, 5, 9, 30});
  c.channel.hop_increment = 11;
  c.snr_sweep = {-2.5, 7.0, kInf};
  c.sir_sweep = std::vector<double>{-10.0, kInf};
  c.profile = nlos_profile();
  c.interferer = InterfererConfig{};
  c.interferer->center_offset = 2e6;
  c.interferer->duty_cycle = 0.5;
  c.frames = 123;
  c.pdu_bits = 1000;
  c.seed = 0xFFFFFFFFFFFFULL;
  c.sps = 24;
  c.access_address = 0x71764129;
  c.impairments.cfo_max_hz = 20e3;
  c.impairments.dc_dbc = -kInf;
  c.impairments.delay_max_samples = 33;
  c.receiver.agc_mode = AgcMode::FastAttack;
  c.receiver.cfo_method = CfoMethod::Correlation;
  c.receiver.crc_init = 0x123456;
  c.receiver.rx_filter_bt = 0.4;
  c.lead_symbols = 40;
  c.tail_symbols = 8;
  EXPECT_EQ(parse_scenario(dump_scenario(c)), c);

  for (const ScenarioConfig& s : paper_scenarios()) EXPECT_EQ(parse_scenario(dump_scenario(s)), s);

  ScenarioConfig los = paper_scenarios()[0];
  los.profile.rician_k_db = kInf;
  EXPECT_EQ(parse_scenario(dump_scenario(los)), los);
}

TEST(Config, MinimalDocumentUsesDefaults) {
  const ScenarioConfig c = parse_scenario(R"({"schema_version": 1, "seed": 5})");
  ScenarioConfig d;
  d.seed = 5;
  EXPECT_EQ(c, d);
}

TEST(Config, FieldErrors) {
  EXPECT_EQ(error_of(R"({"seed": 1})").rfind("schema_version:", 0), 0U);
  EXPECT_EQ(error_of(R"({"schema_version": 2, "seed": 1})").rfind("schema_version:", 0), 0U);
  EXPECT_EQ(error_of(R"({"schema_version": 1})").rfind("seed:", 0), 0U);
  EXPECT_EQ(error_of(R"({"schema_version": 1, "seed": 1, "frames": 0})").rfind("frames:", 0), 0U);
  EXPECT_EQ(error_of(R"({"schema_version": 1, "seed": 1, "pdu_bits": 4})").rfind("pdu_bits:", 0), 0U);
  EXPECT_EQ(error_of(R"({"schema_version": 1, "seed": 1, "phy_modes": ["LE9M"]})").rfind("phy_modes:", 0), 0U);
  EXPECT_EQ(error_of(R"({"schema_version": 1, "seed": 1, "profile": {"kind": "urban"}})").rfind("profile.kind:", 0), 0U);
  EXPECT_EQ(error_of(R"({"schema_version": 1, "seed": 1, "channel": {"mode": "csa2", "map": "1"}})").rfind("channel.map:", 0), 0U);
  EXPECT_EQ(error_of(R"({"schema_version": 1, "seed": 1, "frames": "many"})").rfind("frames:", 0), 0U);
  EXPECT_EQ(error_of(R"({"schema_version": 1, "seed": 1, "receiver": {"notch_radius": 2}})").rfind("receiver", 0), 0U);
  EXPECT_NE(error_of("{not json").find("malformed"), std::string::npos);
}

TEST(Config, RejectsUnknownKeys) {
  EXPECT_EQ(error_of(R"({"schema_version": 1, "seed": 1, "frmaes": 10})").rfind("frmaes:", 0), 0U);
  EXPECT_EQ(error_of(R"({"schema_version": 1, "seed": 1, "impairments": {"cfo": 1}})").rfind("impairments.cfo:", 0), 0U);
}

TEST(Config, FileErrorsAreIoErrors) {
  EXPECT_THROW(load_scenario("/nonexistent/blesim/config.json"), IoError);
  EXPECT_THROW(write_text_file("/nonexistent/blesim/out.csv", "x"), IoError);
}

TEST(Results, CsvFormat) {
  const std::vector<PerResult> r = {make_result("s", PhyMode::LE1M, 12.0, kInf, 100, 98, 90)};
  const std::string csv = results_to_csv(r);
  EXPECT_EQ(csv, std::string(kCsvHeader) + "\n" + "s,LE1M,12,inf,100,98,90,0.100000,0.055229,0.174366\n");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 2);
}

TEST(Results, JsonRoundTrip) {
  const std::vector<PerResult> r = {make_result("a", PhyMode::LE125K, kInf, -10.0, 500, 480, 400),
                                    make_result("a", PhyMode::LE2M, 3.5, kInf, 500, 10, 0)};
  EXPECT_EQ(results_from_json(results_to_json(r)), r);
  EXPECT_THROW(results_from_json("[]"), ConfigError);
}

TEST(Results, EmitAndFormat) {
  EXPECT_EQ(parse_result_format("csv"), ResultFormat::Csv);
  EXPECT_EQ(parse_result_format("json"), ResultFormat::Json);
  EXPECT_THROW(parse_result_format("xml"), ConfigError);
  const auto dir = std::filesystem::temp_directory_path() / "blesim_emit_test";
  std::filesystem::create_directories(dir);
  const std::vector<PerResult> r = {make_result("s", PhyMode::LE1M, 0.0, kInf, 10, 10, 10)};
  emit_results(r, ResultFormat::Csv, dir / "r.csv");
  EXPECT_EQ(read_text_file(dir / "r.csv"), results_to_csv(r));
  EXPECT_THROW(emit_results({}, ResultFormat::Csv, dir / "e.csv"), ConfigError);
  std::filesystem::remove_all(dir);
}
