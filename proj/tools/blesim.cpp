// blesim: command-line front end for PER campaigns and receiver debugging.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "blesim/blesim.hpp"

namespace fs = std::filesystem;
using namespace blesim;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;

// "a:step:b" inclusive, or a single value.
std::vector<double> parse_range(const std::string& text) {
  std::vector<double> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t colon = text.find(':', start);
    const std::string tok = text.substr(start, colon == std::string::npos ? std::string::npos : colon - start);
    std::size_t pos = 0;
    double v = 0.0;
    try {
      v = std::stod(tok, &pos);
    } catch (const std::exception&) {
      throw ConfigError("snr: bad number '" + tok + "'");
    }
    if (pos != tok.size()) throw ConfigError("snr: bad number '" + tok + "'");
    parts.push_back(v);
    if (colon == std::string::npos) break;
    start = colon + 1;
  }
  if (parts.size() == 1) return parts;
  if (parts.size() != 3) throw ConfigError("snr: expected a:step:b");
  const double a = parts[0], step = parts[1], b = parts[2];
  if (!(step > 0.0) || b < a) throw ConfigError("snr: need step > 0 and b >= a");
  std::vector<double> out;
  const auto n = static_cast<std::size_t>(std::floor((b - a) / step + 1e-9));
  for (std::size_t i = 0; i <= n; ++i) out.push_back(a + static_cast<double>(i) * step);
  return out;
}

std::vector<double> parse_list(const std::string& text, const char* field) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = text.find(',', start);
    const std::string tok = text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    std::size_t pos = 0;
    try {
      out.push_back(std::stod(tok, &pos));
    } catch (const std::exception&) {
      throw ConfigError(std::string(field) + ": bad number '" + tok + "'");
    }
    if (pos != tok.size()) throw ConfigError(std::string(field) + ": bad number '" + tok + "'");
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

void write_output(const std::vector<PerResult>& results, ResultFormat format, const std::string& out) {
  if (out.empty() || out == "-") {
    std::cout << (format == ResultFormat::Csv ? results_to_csv(results) : results_to_json(results));
    std::cout.flush();
    return;
  }
  emit_results(results, format, out);
}

int cmd_run(const std::string& config, const std::string& out, const std::string& format,
            std::optional<std::uint64_t> seed, unsigned jobs) {
  ScenarioConfig c = load_scenario(config);
  if (seed) c.seed = *seed;
  const ResultFormat f = parse_result_format(format);
  const auto results = run_campaign(c, jobs);
  write_output(results, f, out);
  return kExitOk;
}

int cmd_paper_scenarios(bool list, const std::string& emit_dir) {
  const auto scenarios = paper_scenarios();
  if (list) {
    for (const auto& s : scenarios) {
      std::printf("%-18s profile=%-6s modes=%zu snr_points=%zu sir_points=%zu frames=%zu pdu_bits=%zu\n", s.id.c_str(),
                  std::string(to_string(s.profile.kind)).c_str(), s.phy_modes.size(), s.snr_sweep.size(),
                  s.sir_sweep ? s.sir_sweep->size() : 0, s.frames, s.pdu_bits);
    }
  }
  if (!emit_dir.empty()) {
    std::error_code ec;
    fs::create_directories(emit_dir, ec);
    if (ec) throw IoError("cannot create '" + emit_dir + "': " + ec.message());
    for (const auto& s : scenarios) write_text_file(fs::path(emit_dir) / (s.id + ".json"), dump_scenario(s));
  }
  return kExitOk;
}

int cmd_dump_stages(const std::string& config, std::size_t frame, const std::string& out_dir) {
  const ScenarioConfig c = load_scenario(config);
  if (frame >= c.frames) throw ConfigError("frame: index beyond the configured frame count");
  const PhyMode mode = c.phy_modes.front();
  const double snr = c.snr_sweep.front();
  const double sir = c.sir_sweep ? c.sir_sweep->front() : kInf;
  const FrameTrial t = build_frame(c, mode, snr, sir, frame);
  ReceiverConfig rc = t.receiver;
  rc.keep_stage_frames = true;
  const RxPacketReport rep = receive(t.rx, rc);

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create '" + out_dir + "': " + ec.message());
  const fs::path dir(out_dir);
  write_iq(t.tx, dir / "00_tx.iq");
  int k = 1;
  for (const auto& sf : rep.stage_frames) {
    char name[64];
    std::snprintf(name, sizeof name, "%02d_%s.iq", k++, sf.name.c_str());
    write_iq(sf.frame, dir / name);
  }
  std::string trace;
  for (const auto& s : rep.stages) trace += s + "\n";
  write_text_file(dir / "stages.txt", trace);
  std::printf("phy=%s frame=%zu channel=%u detected=%d aa_ok=%d crc_ok=%d cfo_true_hz=%.1f cfo_est_hz=%.1f timing=%ld/%zu\n",
              std::string(to_string(mode)).c_str(), frame, t.channel.index(), rep.detected, rep.aa_ok, rep.crc_ok,
              t.cfo_hz, rep.cfo_estimate_hz, rep.timing_offset, t.packet_start);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"BLE baseband PHY simulator and PER harness"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run a campaign from a JSON config");
  std::string run_config, run_out, run_format = "csv";
  std::uint64_t run_seed = 0;
  unsigned run_jobs = 1;
  run->add_option("--config", run_config, "scenario config (JSON)")->required();
  run->add_option("--out", run_out, "output path ('-' for stdout)")->required();
  run->add_option("--format", run_format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  auto* run_seed_opt = run->add_option("--seed", run_seed, "override the config seed");
  run->add_option("--jobs", run_jobs, "worker threads")->check(CLI::PositiveNumber);

  auto* paper = app.add_subcommand("paper-scenarios", "list or write the four canned scenarios");
  bool paper_list = false;
  std::string paper_emit;
  auto* list_flag = paper->add_flag("--list", paper_list, "print a summary");
  auto* emit_opt = paper->add_option("--emit", paper_emit, "write <id>.json files into this directory");
  list_flag->excludes(emit_opt);
  paper->require_option(1);

  auto* per = app.add_subcommand("per", "quick PER sweep for one PHY mode");
  std::string per_phy, per_snr, per_sir, per_profile = "los", per_out = "-", per_format = "csv";
  std::size_t per_frames = 1000, per_pdu = 256;
  std::uint64_t per_seed = 1;
  unsigned per_jobs = 1;
  per->add_option("--phy", per_phy, "LE1M, LE2M, LE500K or LE125K")->required();
  per->add_option("--snr", per_snr, "a:step:b in dB")->required();
  per->add_option("--sir", per_sir, "comma-separated SIR list in dB (adds a 20 MHz interferer)");
  per->add_option("--frames", per_frames, "frames per point")->required();
  per->add_option("--profile", per_profile, "los, nlos or reverb")->required()->check(CLI::IsMember({"los", "nlos", "reverb"}));
  per->add_option("--pdu-bits", per_pdu, "PDU length in bits");
  per->add_option("--seed", per_seed, "campaign seed");
  per->add_option("--jobs", per_jobs, "worker threads")->check(CLI::PositiveNumber);
  per->add_option("--out", per_out, "output path ('-' for stdout)");
  per->add_option("--format", per_format, "csv or json")->check(CLI::IsMember({"csv", "json"}));

  auto* dump = app.add_subcommand("dump-stages", "write per-stage receiver frames for one trial");
  std::string dump_config, dump_out;
  std::size_t dump_frame = 0;
  dump->add_option("--config", dump_config, "scenario config (JSON)")->required();
  dump->add_option("--frame", dump_frame, "frame index")->required();
  dump->add_option("--out", dump_out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*run) {
      std::optional<std::uint64_t> seed;
      if (*run_seed_opt) seed = run_seed;
      return cmd_run(run_config, run_out, run_format, seed, run_jobs);
    }
    if (*paper) return cmd_paper_scenarios(paper_list, paper_emit);
    if (*per) {
      ScenarioConfig c;
      c.id = "per_" + per_phy + "_" + per_profile;
      c.phy_modes = {parse_phy_mode(per_phy)};
      c.snr_sweep = parse_range(per_snr);
      c.profile = default_profile(parse_profile_kind(per_profile));
      c.frames = per_frames;
      c.pdu_bits = per_pdu;
      c.seed = per_seed;
      if (!per_sir.empty()) {
        c.sir_sweep = parse_list(per_sir, "sir");
        c.interferer = InterfererConfig{};
      }
      write_output(run_campaign(c, per_jobs), parse_result_format(per_format), per_out);
      return kExitOk;
    }
    if (*dump) return cmd_dump_stages(dump_config, dump_frame, dump_out);
  } catch (const IoError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitIo;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  }
  return kExitOk;
}
