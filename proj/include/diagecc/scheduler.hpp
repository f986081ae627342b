#pragma once

// Netlist -> single-row MAGIC program -> ECC-aware timed schedule.
//
// Row layout: primary inputs occupy the first columns, outputs start at the
// next block boundary, and intermediates use the remaining blocks. Only input
// and output blocks are covered by the check bits; intermediates are scratch.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "diagecc/core.hpp"
#include "diagecc/machine.hpp"
#include "diagecc/magic.hpp"
#include "diagecc/netlist.hpp"

namespace diagecc {

struct RowProgram {
  std::size_t row = 0;
  std::size_t width = 0;
  std::vector<MicroOp> ops;
  std::unordered_map<std::string, std::size_t> cellMap;  // signal -> column
  std::vector<std::string> inputNames, outputNames;
  std::vector<std::size_t> inputColumns, outputColumns;

  std::size_t init_ops() const {
    return std::count_if(ops.begin(), ops.end(),
                         [](const MicroOp& o) { return o.kind == OpKind::Init; });
  }
  std::size_t gate_ops() const { return ops.size() - init_ops(); }
};

namespace detail {
inline std::size_t round_up(std::size_t x, std::size_t m) { return (x + m - 1) / m * m; }
}  // namespace detail

/// Maps a netlist onto row `row` of a crossbar. Gates are emitted in
/// topological order, breaking ties by largest fanout then source order. An
/// intermediate column returns to the pool once every reader has issued.
inline RowProgram map_to_row(const Netlist& nl, const Geometry& geom, std::size_t row = 0) {
  geom.validate();
  if (row >= geom.n) throw InputError("map_to_row: row out of range");
  const std::size_t m = geom.m, n = geom.n;
  RowProgram rp;
  rp.row = row;
  rp.width = n;
  rp.inputNames = nl.inputs;
  rp.outputNames = nl.outputs;

  const std::size_t nin = nl.inputs.size();
  if (nin > n) throw InputError("map_to_row: row capacity exceeded by inputs");
  for (std::size_t k = 0; k < nin; ++k) {
    rp.cellMap[nl.inputs[k]] = k;
    rp.inputColumns.push_back(k);
  }

  // Output columns: gate-driven outputs get fresh cells; repeats get a copy.
  std::size_t next = detail::round_up(nin, m);
  std::unordered_map<std::string, std::size_t> outCol;
  std::vector<std::pair<std::string, std::size_t>> repeats;
  for (const auto& o : nl.outputs) {
    if (rp.cellMap.count(o) && !outCol.count(o)) {  // a primary input
      rp.outputColumns.push_back(rp.cellMap[o]);
      continue;
    }
    if (next >= n) throw InputError("map_to_row: row capacity exceeded by outputs");
    if (outCol.count(o) || rp.cellMap.count(o)) repeats.emplace_back(o, next);
    else outCol[o] = next;
    rp.outputColumns.push_back(next++);
  }
  std::set<std::size_t> pool;
  for (std::size_t c = detail::round_up(next, m); c < n; ++c) pool.insert(c);

  auto take = [&]() {
    if (pool.empty()) throw InputError("map_to_row: row capacity exceeded (n=" + std::to_string(n) + ")");
    auto c = *pool.begin();
    pool.erase(pool.begin());
    return c;
  };
  auto emit_gate = [&](std::vector<std::size_t> in, std::size_t out) {
    rp.ops.push_back(MicroOp::init(Orientation::InRow, out, {row}));
    rp.ops.push_back(MicroOp::nor(Orientation::InRow, std::move(in), out, {row}));
  };

  auto fanout = nl.fanout();
  std::unordered_map<std::string, std::size_t> remaining = fanout;
  std::unordered_map<std::string, std::size_t> gateOf;
  for (std::size_t k = 0; k < nl.gates.size(); ++k) gateOf[nl.gates[k].id] = k;

  // List scheduling over the ready set.
  std::vector<std::size_t> waiting(nl.gates.size(), 0);
  std::vector<std::vector<std::size_t>> users(nl.gates.size());
  for (std::size_t k = 0; k < nl.gates.size(); ++k)
    for (const auto& o : nl.gates[k].operands)
      if (auto it = gateOf.find(o); it != gateOf.end()) {
        ++waiting[k];
        users[it->second].push_back(k);
      }
  auto better = [&](std::size_t a, std::size_t b) {
    const auto fa = fanout[nl.gates[a].id], fb = fanout[nl.gates[b].id];
    return fa != fb ? fa > fb : a < b;
  };
  std::vector<std::size_t> ready;
  for (std::size_t k = 0; k < nl.gates.size(); ++k)
    if (!waiting[k]) ready.push_back(k);

  auto is_scratch = [&](const std::string& id) {
    return gateOf.count(id) && !outCol.count(id);
  };

  while (!ready.empty()) {
    auto it = std::min_element(ready.begin(), ready.end(), better);
    const auto k = *it;
    ready.erase(it);
    const auto& g = nl.gates[k];
    std::vector<std::size_t> in;
    for (const auto& o : g.operands) in.push_back(rp.cellMap.at(o));
    const std::size_t out = outCol.count(g.id) ? outCol[g.id] : take();
    rp.cellMap[g.id] = out;
    emit_gate(in, out);
    for (const auto& o : g.operands)
      if (--remaining[o] == 0 && is_scratch(o)) pool.insert(rp.cellMap[o]);
    if (fanout[g.id] == 0 && is_scratch(g.id)) pool.insert(out);
    for (auto u : users[k])
      if (--waiting[u] == 0) ready.push_back(u);
  }

  // Repeated outputs: copy through a scratch cell with two NOTs.
  for (const auto& [id, dst] : repeats) {
    const auto src = rp.cellMap.at(id);
    const auto tmp = take();
    emit_gate({src}, tmp);
    emit_gate({tmp}, dst);
    pool.insert(tmp);
  }
  return rp;
}

// ---------------------------------------------------------------------------

struct Instruction {
  enum class Kind : std::uint8_t { Check, Plain, Critical };
  Kind kind = Kind::Plain;
  Orientation orientation = Orientation::InRow;  // Check only
  std::size_t index = 0;                         // Check only: block row/column
  std::vector<std::size_t> blocks;               // Check only: block ordinals
  std::vector<MicroOp> ops;                      // Plain: one op; Critical: group

  friend bool operator==(const Instruction&, const Instruction&) = default;
};

struct EccSchedule {
  MachineConfig config;
  RowProgram program;
  std::vector<Instruction> instructions;
  std::vector<Event> events;
  std::uint64_t totalCycles = 0;
  std::uint64_t baselineCycles = 0;
  std::uint64_t stallCycles = 0;
  std::uint64_t inputCheckCycles = 0;
  std::uint64_t memBusyCycles = 0;
  std::size_t pcPairsUsed = 0;
  std::size_t criticalOps = 0;
};

/// Blocks holding primary inputs (ordinals along the program row).
inline std::vector<std::size_t> input_block_ordinals(const RowProgram& rp, std::size_t m) {
  std::vector<std::size_t> b;
  for (auto c : rp.inputColumns) b.push_back(c / m);
  std::sort(b.begin(), b.end());
  b.erase(std::unique(b.begin(), b.end()), b.end());
  return b;
}

inline std::vector<std::size_t> output_block_ordinals(const RowProgram& rp, std::size_t m) {
  std::vector<std::size_t> b;
  for (auto c : rp.outputColumns) b.push_back(c / m);
  std::sort(b.begin(), b.end());
  b.erase(std::unique(b.begin(), b.end()), b.end());
  return b;
}

/// Splits a row program into ECC instructions: one check of the input
/// blocks, then every op, with writes to output columns wrapped as critical
/// groups (an INIT is grouped with the gate that follows it on the same cell).
inline std::vector<Instruction> ecc_instructions(const RowProgram& rp, const Geometry& geom) {
  std::vector<Instruction> out;
  if (!rp.inputColumns.empty()) {
    Instruction chk;
    chk.kind = Instruction::Kind::Check;
    chk.orientation = Orientation::InRow;
    chk.index = rp.row / geom.m;
    chk.blocks = input_block_ordinals(rp, geom.m);
    out.push_back(std::move(chk));
  }
  std::set<std::size_t> outputs(rp.outputColumns.begin(), rp.outputColumns.end());
  for (auto c : rp.inputColumns) outputs.erase(c);
  for (std::size_t k = 0; k < rp.ops.size(); ++k) {
    const auto& op = rp.ops[k];
    Instruction ins;
    if (op.writes() && op.orientation == Orientation::InRow && outputs.count(op.output)) {
      ins.kind = Instruction::Kind::Critical;
      ins.ops.push_back(op);
      if (op.kind == OpKind::Init && k + 1 < rp.ops.size()) {
        const auto& nx = rp.ops[k + 1];
        if (nx.kind == OpKind::Nor && nx.output == op.output && nx.lanes == op.lanes &&
            nx.orientation == op.orientation) {
          ins.ops.push_back(nx);
          ++k;
        }
      }
    } else {
      ins.kind = Instruction::Kind::Plain;
      ins.ops.push_back(op);
    }
    out.push_back(std::move(ins));
  }
  return out;
}

struct RunTrace {
  std::vector<BlockDiagnosis> checkFindings;  // non-clean diagnoses
  std::uint64_t inputCheckCycles = 0;
};

/// Issues the instructions on a machine in order.
inline RunTrace run_instructions(Machine& machine, std::span<const Instruction> program) {
  RunTrace trace;
  for (const auto& ins : program) {
    switch (ins.kind) {
      case Instruction::Kind::Check: {
        auto r = machine.check_line(ins.orientation, ins.index, ins.blocks);
        trace.inputCheckCycles += r.timing.end - r.timing.start;
        for (auto& b : r.blocks)
          if (!std::holds_alternative<Clean>(b.diagnosis)) trace.checkFindings.push_back(b);
        break;
      }
      case Instruction::Kind::Plain:
        machine.plain_op(ins.ops.at(0));
        break;
      case Instruction::Kind::Critical:
        machine.critical_op(ins.ops);
        break;
    }
  }
  return trace;
}

inline EccSchedule schedule_instructions(RowProgram rp, std::vector<Instruction> program,
                                         const MachineConfig& cfg) {
  Machine machine(cfg);
  auto trace = run_instructions(machine, program);
  EccSchedule s;
  s.config = cfg;
  s.baselineCycles = cycle_count(rp.ops);
  s.program = std::move(rp);
  s.instructions = std::move(program);
  s.events = machine.sorted_events();
  s.totalCycles = machine.total_cycles();
  s.stallCycles = machine.stall_cycles();
  s.inputCheckCycles = trace.inputCheckCycles;
  s.memBusyCycles = machine.mem_busy_cycles();
  s.pcPairsUsed = machine.pc_pairs_used();
  s.criticalOps = machine.critical_ops();
  return s;
}

/// Inserts input checks and critical-op pipelines and schedules them greedily
/// against MEM/CMEM availability.
inline EccSchedule insert_ecc(const RowProgram& rp, const Geometry& geom,
                              const TimingModel& tm, std::size_t kPcPairs,
                              EngineConfig engine = {}, bool forwarding = false) {
  if (kPcPairs < 1) throw InputError("insert_ecc: need at least one PC pair");
  MachineConfig cfg{geom, tm, kPcPairs, forwarding, engine};
  return schedule_instructions(rp, ecc_instructions(rp, geom), cfg);
}

inline EccSchedule insert_ecc(const RowProgram& rp, const MachineConfig& cfg) {
  return insert_ecc(rp, cfg.geom, cfg.timing, cfg.pcPairs, cfg.engine, cfg.forwarding);
}

// ---------------------------------------------------------------------------

struct ScheduleStats {
  std::uint64_t baseline = 0;
  std::uint64_t proposed = 0;
  double overheadPercent = 0.0;
  std::size_t minPcPairs = 0;
  std::uint64_t stallCycles = 0;
  std::size_t pcPairsUsed = 0;
  std::size_t initOps = 0;
  std::size_t gateOps = 0;
  std::size_t criticalOps = 0;
  std::uint64_t inputCheckCycles = 0;
};

inline double overhead_percent(std::uint64_t baseline, std::uint64_t proposed) {
  if (baseline == 0) return 0.0;
  return 100.0 * (static_cast<double>(proposed) - static_cast<double>(baseline)) /
         static_cast<double>(baseline);
}

/// Upper end of the PC-pair search.
inline constexpr std::size_t kMaxPcPairs = 64;

/// Smallest number of PC pairs whose schedule is as short as with unlimited
/// pairs, by binary search over re-schedules.
inline std::size_t min_pc_pairs(const EccSchedule& s) {
  auto cycles = [&](std::size_t k) {
    auto cfg = s.config;
    cfg.pcPairs = k;
    return schedule_instructions(s.program, s.instructions, cfg).totalCycles;
  };
  const auto best = cycles(kMaxPcPairs);
  std::size_t lo = 1, hi = kMaxPcPairs;
  while (lo < hi) {
    const auto mid = lo + (hi - lo) / 2;
    if (cycles(mid) == best) hi = mid;
    else lo = mid + 1;
  }
  return lo;
}

inline ScheduleStats report(const EccSchedule& s) {
  ScheduleStats st;
  st.baseline = s.baselineCycles;
  st.proposed = s.totalCycles;
  st.overheadPercent = overhead_percent(st.baseline, st.proposed);
  st.minPcPairs = min_pc_pairs(s);
  st.stallCycles = s.stallCycles;
  st.pcPairsUsed = s.pcPairsUsed;
  st.initOps = s.program.init_ops();
  st.gateOps = s.program.gate_ops();
  st.criticalOps = s.criticalOps;
  st.inputCheckCycles = s.inputCheckCycles;
  return st;
}

/// exp(mean(ln(x))); all values must be positive.
inline double geometric_mean(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  double acc = 0.0;
  for (auto x : xs) {
    if (!(x > 0.0)) throw InputError("geometric_mean: non-positive value");
    acc += std::log(x);
  }
  return std::exp(acc / static_cast<double>(xs.size()));
}

/// Geometric-mean overhead over (baseline, proposed) pairs, via latency ratios.
inline double geomean_overhead_percent(std::span<const std::pair<double, double>> runs) {
  std::vector<double> ratios;
  for (auto [b, p] : runs) ratios.push_back(p / b);
  return 100.0 * (geometric_mean(ratios) - 1.0);
}

// ---------------------------------------------------------------------------

struct SimulationResult {
  BitVec outputs;
  std::vector<BlockDiagnosis> findings;
  std::uint64_t cycles = 0;
  bool eccConsistent = true;  // input and output blocks
  Machine machine;
};

struct FaultSpec {
  std::vector<CellAddr> dataFlips;
  std::vector<CheckCell> checkFlips;
};

/// Loads the inputs through the controller, injects faults, then runs the
/// scheduled instructions.
inline SimulationResult simulate(const EccSchedule& s, std::span<const std::uint8_t> inputs,
                                 const FaultSpec& faults = {}) {
  const auto& rp = s.program;
  if (inputs.size() != rp.inputColumns.size())
    throw InputError("simulate: expected " + std::to_string(rp.inputColumns.size()) +
                     " input bits");
  Machine machine(s.config);
  for (std::size_t k = 0; k < inputs.size(); ++k)
    machine.host_write({rp.row, rp.inputColumns[k]}, inputs[k]);
  for (auto a : faults.dataFlips) machine.inject_flip(a);
  for (auto c : faults.checkFlips) machine.inject_flip(c);
  auto trace = run_instructions(machine, s.instructions);

  SimulationResult r{{}, std::move(trace.checkFindings), machine.total_cycles(), true,
                     std::move(machine)};
  for (auto c : rp.outputColumns) r.outputs.push_back(r.machine.mem().at(rp.row, c));
  const auto br = rp.row / s.config.geom.m;
  for (auto list : {input_block_ordinals(rp, s.config.geom.m),
                    output_block_ordinals(rp, s.config.geom.m)})
    for (auto bc : list) r.eccConsistent = r.eccConsistent && r.machine.block_consistent(br, bc);
  return r;
}

}  // namespace diagecc
