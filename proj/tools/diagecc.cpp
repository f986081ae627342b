// diagecc: schedule, simulate, inject, reliability and area reports.
//
// Exit codes: 0 success, 1 usage error, 2 input error, 3 invariant violation.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "diagecc/fault_injection.hpp"
#include "diagecc/reliability.hpp"
#include "diagecc/run_config.hpp"
#include "diagecc/schedule_io.hpp"
#include "diagecc/scheduler.hpp"

namespace fs = std::filesystem;
using namespace diagecc;

namespace {

std::string num(double x, const char* f = "%.9g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

std::string read_text(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw InputError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

/// Output sink: a file if a path is given, stdout otherwise.
class Sink {
 public:
  explicit Sink(const std::string& path) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw InputError("cannot write '" + path + "'");
    }
  }
  std::ostream& os() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

// Config file, then --set assignments, then dedicated flags.
struct ConfigSources {
  std::string file;
  std::vector<std::string> sets;
  std::vector<std::string> flags;

  RunConfig resolve() const {
    RunConfig c;
    if (!file.empty()) apply_config_file(c, file);
    for (const auto& s : sets) apply_assignment(c, s);
    for (const auto& s : flags) apply_assignment(c, s);
    c.validate();
    return c;
  }
};

void add_config_options(CLI::App* sub, ConfigSources& src,
                        const std::vector<std::pair<std::string, std::string>>& keys) {
  sub->add_option("--config", src.file, "key=value configuration file");
  sub->add_option("--set", src.sets, "override one key (key=value), repeatable");
  for (const auto& [flag, key] : keys)
    sub->add_option_function<std::string>(
        "--" + flag, [&src, key = key](const std::string& v) { src.flags.push_back(key + "=" + v); },
        "sets '" + key + "'");
}

const std::vector<std::pair<std::string, std::string>> kMachineKeys = {
    {"n", "n"}, {"m", "m"}, {"pc-pairs", "pc_pairs"}, {"forwarding", "forwarding"},
    {"xor3", "xor3"}, {"row", "row"}};

// --- schedule ---------------------------------------------------------------

std::string stats_line(const std::string& name, const ScheduleStats& st) {
  std::ostringstream os;
  os << "circuit=" << name << " baseline=" << st.baseline << " proposed=" << st.proposed
     << " overhead_pct=" << num(st.overheadPercent, "%.2f") << " min_pc_pairs=" << st.minPcPairs
     << " stall_cycles=" << st.stallCycles << " pc_pairs_used=" << st.pcPairsUsed
     << " gate_ops=" << st.gateOps << " init_ops=" << st.initOps
     << " critical_ops=" << st.criticalOps << " input_check_cycles=" << st.inputCheckCycles;
  return os.str();
}

int cmd_schedule(const std::string& target, const std::string& out, const std::string& statsPath,
                 const RunConfig& cfg) {
  std::vector<fs::path> files;
  const bool corpus = fs::is_directory(target);
  if (corpus) {
    for (const auto& e : fs::directory_iterator(target))
      if (e.is_regular_file() && e.path().extension() == ".net") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw InputError("no .net files in '" + target + "'");
    if (!out.empty()) fs::create_directories(out);
  } else {
    files.push_back(target);
  }

  Sink stats(statsPath);
  std::vector<std::pair<double, double>> runs;
  std::vector<double> pcs;
  for (const auto& f : files) {
    Netlist nl;
    try {
      nl = parse_netlist(read_text(f.string()));
    } catch (const InputError& e) {
      throw InputError(f.string() + ": " + e.what());
    }
    const auto rp = map_to_row(nl, cfg.machine.geom, cfg.row);
    const auto s = insert_ecc(rp, cfg.machine);
    const auto st = report(s);
    stats.os() << stats_line(f.stem().string(), st) << '\n';
    if (st.baseline > 0) runs.emplace_back(double(st.baseline), double(st.proposed));
    pcs.push_back(double(st.minPcPairs));
    if (!out.empty()) {
      const auto path = corpus ? (fs::path(out) / (f.stem().string() + ".sched")) : fs::path(out);
      Sink sched(path.string());
      write_schedule(sched.os(), s);
    }
  }
  if (corpus) {
    stats.os() << "summary circuits=" << files.size() << " geomean_overhead_pct="
               << (runs.empty() ? std::string("0.00") : num(geomean_overhead_percent(runs), "%.2f"))
               << " geomean_min_pc_pairs=" << num(geometric_mean(pcs), "%.2f") << '\n';
  }
  return 0;
}

// --- simulate ---------------------------------------------------------------

CellAddr parse_cell(const std::string& s) {
  auto comma = s.find(',');
  if (comma == std::string::npos) throw InputError("expected row,col, got '" + s + "'");
  auto v = parse_index_list(s.substr(0, comma));
  auto w = parse_index_list(s.substr(comma + 1));
  if (v.size() != 1 || w.size() != 1) throw InputError("expected row,col, got '" + s + "'");
  return {v[0], w[0]};
}

// bank:diag:blockRow:blockCol, bank L or C
CheckCell parse_check_cell(const std::string& s) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
  if (parts.size() != 4 || (parts[0] != "L" && parts[0] != "C"))
    throw InputError("expected L|C:diag:blockRow:blockCol, got '" + s + "'");
  auto one = [&](const std::string& t) {
    auto v = parse_index_list(t);
    if (v.size() != 1) throw InputError("bad check cell '" + s + "'");
    return v[0];
  };
  return {parts[0] == "L" ? Bank::Leading : Bank::Counter, one(parts[1]), one(parts[2]), one(parts[3])};
}

std::string bits_string(const BitVec& b) {
  std::string s;
  for (auto x : b) s += x ? '1' : '0';
  return s;
}

int cmd_simulate(const std::string& path, const std::string& inputBits,
                 const std::vector<std::string>& flips, const std::vector<std::string>& checkFlips,
                 const std::string& eventsOut, const std::string& outPath) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  const auto s = read_schedule(in);
  const auto& rp = s.program;
  if (inputBits.size() != rp.inputColumns.size() ||
      inputBits.find_first_not_of("01") != std::string::npos)
    throw InputError("--inputs needs " + std::to_string(rp.inputColumns.size()) +
                     " bits (0/1), in .inputs order");
  BitVec inputs;
  for (char c : inputBits) inputs.push_back(c == '1');
  FaultSpec faults;
  for (const auto& f : flips) faults.dataFlips.push_back(parse_cell(f));
  for (const auto& f : checkFlips) faults.checkFlips.push_back(parse_check_cell(f));
  for (const auto& a : faults.dataFlips) block_decompose(a, s.config.geom);

  auto r = simulate(s, inputs, faults);
  Sink out(outPath);
  auto& os = out.os();
  os << "inputs=" << inputBits << " outputs=" << bits_string(r.outputs) << " cycles=" << r.cycles
     << '\n';
  for (std::size_t k = 0; k < rp.outputNames.size(); ++k)
    os << "output " << rp.outputNames[k] << '=' << int(r.outputs[k]) << '\n';

  const auto m = s.config.geom.m;
  const auto br = rp.row / m;
  std::size_t corrected = 0, uncorrectable = 0;
  auto report_block = [&](std::size_t bc, const char* role) {
    std::string status = "clean", diag;
    for (const auto& f : r.findings)
      if (f.blockRow == br && f.blockCol == bc) {
        status = is_correctable(f.diagnosis) ? "corrected" : "uncorrectable";
        diag = to_string(f.diagnosis);
      }
    os << "block=" << br << ',' << bc << " role=" << role << " status=" << status;
    if (!diag.empty()) os << " diagnosis=" << diag;
    os << " consistent=" << int(r.machine.block_consistent(br, bc)) << '\n';
  };
  const auto inBlocks = input_block_ordinals(rp, m);
  for (auto bc : inBlocks) report_block(bc, "input");
  for (auto bc : output_block_ordinals(rp, m))
    if (std::find(inBlocks.begin(), inBlocks.end(), bc) == inBlocks.end()) report_block(bc, "output");
  for (const auto& f : r.findings) (is_correctable(f.diagnosis) ? corrected : uncorrectable)++;
  os << "corrections=" << corrected << " uncorrectable=" << uncorrectable
     << " ecc_consistent=" << int(r.eccConsistent) << '\n';
  if (!eventsOut.empty()) {
    Sink ev(eventsOut);
    write_events(ev.os(), r.machine.sorted_events());
  }
  return 0;
}

// --- inject -----------------------------------------------------------------

int cmd_inject(const std::string& scope, const std::string& schedulePath,
               const std::string& netlistPath, const std::vector<std::string>& flips,
               const std::string& outPath, const RunConfig& cfg) {
  Sink out(outPath);
  auto& os = out.os();
  const std::size_t cells = cfg.machine.geom.m * cfg.machine.geom.m;
  os << "scope=" << scope << " seed=" << cfg.seed << " p_bit=" << num(cfg.pBit)
     << " trials=" << cfg.trials << '\n';
  if (scope == "mc") {
    const auto e = monte_carlo_block_failure(cfg.pBit, cfg.machine.geom.m, cfg.trials, cfg.seed);
    os << "failures=" << e.successes << " estimate=" << num(e.estimate) << " ci95_lo=" << num(e.lo)
       << " ci95_hi=" << num(e.hi) << " closed_form=" << num(block_failure_probability(cfg.pBit, cells))
       << '\n';
    return 0;
  }
  FaultCampaign c;
  c.seed = cfg.seed;
  c.trials = cfg.trials;
  c.pBit = cfg.pBit;
  c.flipCheckBits = cfg.flipCheckBits;
  CampaignReport r;
  if (scope == "block") {
    c.scope = CampaignScope::BlockLevel;
    r = injection_campaign(cfg.machine, c);
  } else if (scope == "machine") {
    c.scope = CampaignScope::MachineLevel;
    if (!schedulePath.empty()) {
      if (netlistPath.empty()) throw InputError("--schedule needs --netlist for the golden outputs");
      std::ifstream in(schedulePath);
      if (!in) throw InputError("cannot open '" + schedulePath + "'");
      const auto s = read_schedule(in);
      const auto nl = parse_netlist(read_text(netlistPath));
      if (nl.inputs.size() != s.program.inputColumns.size() || nl.outputs != s.program.outputNames)
        throw InputError("netlist does not match the schedule's inputs/outputs");
      FunctionRun w{&s, &nl, {}};
      for (const auto& f : flips) w.forcedFlips.push_back(parse_cell(f));
      for (const auto& a : w.forcedFlips) block_decompose(a, s.config.geom);
      r = injection_campaign(s.config, c, w);
    } else {
      r = injection_campaign(cfg.machine, c);
    }
  } else {
    throw InputError("unknown scope '" + scope + "' (block, machine, mc)");
  }
  os << "flips=" << r.flips << " corrected=" << r.corrected << " uncorrectable=" << r.uncorrectable
     << " miscorrected=" << r.miscorrected << " silent=" << r.silent << '\n';
  const auto ci = wilson_interval(r.failedBlocks, r.blocksObserved);
  os << "blocks_observed=" << r.blocksObserved << " blocks_hit=" << r.blocksHit
     << " failed_blocks=" << r.failedBlocks << " failed_fraction=" << num(ci.estimate)
     << " ci95_lo=" << num(ci.lo) << " ci95_hi=" << num(ci.hi)
     << " closed_form=" << num(block_failure_probability(cfg.pBit, cells)) << '\n';
  if (!schedulePath.empty()) os << "wrong_outputs=" << r.wrongOutputs << '\n';
  return 0;
}

// --- reliability / area -------------------------------------------------------

int cmd_reliability(const std::string& outPath, const RunConfig& cfg) {
  const auto rows = sweep(cfg.lambdaMin, cfg.lambdaMax, cfg.pointsPerDecade, cfg.reliability());
  Sink out(outPath);
  auto& os = out.os();
  os << "lambda_fit,mttf_baseline_h,mttf_proposed_h,improvement\n";
  for (const auto& r : rows)
    os << num(r.lambdaFit, "%.6g") << ',' << num(r.mttfBaseline) << ',' << num(r.mttfProposed) << ','
       << num(r.improvement()) << '\n';
  return 0;
}

int cmd_area(std::uint64_t n, std::uint64_t m, std::uint64_t k, const std::string& outPath) {
  const auto d = device_counts(n, m, k);
  Sink out(outPath);
  auto& os = out.os();
  os << "unit,count_expression,memristors,transistors\n";
  os << "mem,n*n," << d.memMemristors << ",0\n";
  os << "check_bit_crossbars,2*m*(n/m)^2," << d.checkBitMemristors << ",0\n";
  os << "processing_crossbars,2*11*k*n," << d.processingMemristors << ",0\n";
  os << "checking_crossbar,2*n," << d.checkingMemristors << ",0\n";
  os << "shifters,4*n*m,0," << d.shifterTransistors << '\n';
  os << "connection_unit,2*n*(k+4),0," << d.connectionTransistors << '\n';
  os << "total,," << d.total_memristors() << ',' << d.total_transistors() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Diagonal-parity ECC for MAGIC crossbars: scheduling, simulation and analysis"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "show help for every subcommand");

  int rc = 0;
  std::function<int()> run;

  // schedule
  ConfigSources schedSrc;
  std::string schedTarget, schedOut, schedStats;
  auto* sched = app.add_subcommand("schedule", "compile a netlist (or a directory of them) with ECC");
  sched->add_option("netlist", schedTarget, "netlist file or corpus directory")->required();
  sched->add_option("-o,--out", schedOut, "schedule file (single netlist) or directory (corpus)");
  sched->add_option("--stats", schedStats, "write stats here instead of stdout");
  add_config_options(sched, schedSrc, kMachineKeys);
  sched->callback([&] { run = [&] { return cmd_schedule(schedTarget, schedOut, schedStats, schedSrc.resolve()); }; });

  // simulate
  std::string simPath, simInputs, simEvents, simOut;
  std::vector<std::string> simFlips, simCheckFlips;
  auto* sim = app.add_subcommand("simulate", "run a schedule file on the timed machine");
  sim->add_option("schedule", simPath, "schedule file")->required();
  sim->add_option("--inputs", simInputs, "input bits in .inputs order, e.g. 101")->required();
  sim->add_option("--flip", simFlips, "inject a data flip before execution: row,col");
  sim->add_option("--flip-check", simCheckFlips, "inject a check-bit flip: L|C:diag:blockRow:blockCol");
  sim->add_option("--events", simEvents, "write the event log of the run");
  sim->add_option("-o,--out", simOut, "write the report here instead of stdout");
  sim->callback([&] {
    run = [&] { return cmd_simulate(simPath, simInputs, simFlips, simCheckFlips, simEvents, simOut); };
  });

  // inject
  ConfigSources injSrc;
  std::string injScope = "machine", injSchedule, injNetlist, injOut;
  std::vector<std::string> injFlips;
  auto* inj = app.add_subcommand("inject", "soft-error injection campaign");
  inj->add_option("--scope", injScope, "block | machine | mc")->capture_default_str();
  inj->add_option("--schedule", injSchedule, "run this schedule each trial instead of full-memory checks");
  inj->add_option("--netlist", injNetlist, "netlist giving the golden outputs for --schedule");
  inj->add_option("--flip", injFlips, "forced data flip each trial: row,col");
  inj->add_option("-o,--out", injOut, "write the report here instead of stdout");
  auto injKeys = kMachineKeys;
  injKeys.insert(injKeys.end(), {{"seed", "seed"}, {"p-bit", "p_bit"}, {"trials", "trials"},
                                 {"flip-check-bits", "flip_check_bits"}});
  add_config_options(inj, injSrc, injKeys);
  inj->callback([&] {
    run = [&] { return cmd_inject(injScope, injSchedule, injNetlist, injFlips, injOut, injSrc.resolve()); };
  });

  // reliability
  ConfigSources relSrc;
  std::string relOut;
  auto* rel = app.add_subcommand("reliability", "MTTF sweep over the soft-error rate (CSV)");
  rel->add_option("-o,--out", relOut, "write the CSV here instead of stdout");
  add_config_options(rel, relSrc,
                     {{"lambda-min", "lambda_min"},
                      {"lambda-max", "lambda_max"},
                      {"points-per-decade", "points_per_decade"},
                      {"t-hours", "t_hours"},
                      {"capacity-bits", "capacity_bits"},
                      {"n", "n"},
                      {"m", "m"}});
  rel->callback([&] { run = [&] { return cmd_reliability(relOut, relSrc.resolve()); }; });

  // area
  std::uint64_t areaN = 1020, areaM = 15, areaK = 3;
  std::string areaOut;
  auto* area = app.add_subcommand("area", "device counts of MEM plus check memory (CSV)");
  area->add_option("--n", areaN, "crossbar side")->capture_default_str();
  area->add_option("--m", areaM, "block side")->capture_default_str();
  area->add_option("--k", areaK, "processing-crossbar pairs")->capture_default_str();
  area->add_option("-o,--out", areaOut, "write the CSV here instead of stdout");
  area->callback([&] { run = [&] { return cmd_area(areaN, areaM, areaK, areaOut); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  try {
    rc = run ? run() : 1;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const InvariantError& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 3;
  }
  return rc;
}
