#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "diagecc/scheduler.hpp"
#include "test_util.hpp"

using namespace diagecc;

namespace {

const Geometry kGeom{1020, 15};

// Runs the plain row program on a bare crossbar.
BitVec run_row_program(const RowProgram& rp, const BitVec& inputs) {
  CrossbarState s(kGeom);
  for (std::size_t k = 0; k < inputs.size(); ++k) s.at(rp.row, rp.inputColumns[k]) = inputs[k];
  const Engine eng;
  for (const auto& op : rp.ops) eng.apply(s, op);
  BitVec out;
  for (auto c : rp.outputColumns) out.push_back(s.at(rp.row, c));
  return out;
}

std::string parse_error(const std::string& text) {
  try {
    parse_netlist(text);
  } catch (const InputError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(Netlist, ParsesFullAdder) {
  const auto text = testutil::read_file(testutil::netlist_dir() + "/full_adder.net");
  const auto nl = parse_netlist(text);
  EXPECT_EQ(nl.inputs, (std::vector<std::string>{"a", "b", "cin"}));
  EXPECT_EQ(nl.outputs, (std::vector<std::string>{"s", "cout"}));
  std::size_t gateLines = 0;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);)
    if (l.find(" = ") != std::string::npos) ++gateLines;
  EXPECT_EQ(nl.gates.size(), gateLines);
}

TEST(Netlist, PassThroughHasNoGates) {
  const auto nl = parse_netlist(".inputs a b\n.outputs a b\n");
  EXPECT_TRUE(nl.gates.empty());
  EXPECT_EQ(evaluate(nl, BitVec{1, 0}), (BitVec{1, 0}));
}

TEST(Netlist, OutOfOrderGatesAreSorted) {
  const auto nl = parse_netlist(".inputs a\n.outputs y\ny = NOT x\nx = NOT a\n");
  ASSERT_EQ(nl.gates.size(), 2u);
  EXPECT_EQ(nl.gates[0].id, "x");
  EXPECT_EQ(evaluate(nl, BitVec{1}), (BitVec{1}));
}

TEST(Netlist, Errors) {
  auto e = parse_error(".inputs a\n.outputs y\ny = NOR a zz\n");
  EXPECT_NE(e.find("line 3"), std::string::npos) << e;
  EXPECT_NE(e.find("zz"), std::string::npos) << e;
  EXPECT_NE(parse_error(".inputs a\n.outputs q\n").find("undefined output 'q'"), std::string::npos);
  EXPECT_NE(parse_error(".inputs a\n.outputs y\ny = AND a a\n").find("unsupported gate kind"),
            std::string::npos);
  EXPECT_NE(parse_error(".inputs a\n.outputs y\ny = NOT a a\n").find("line 3"), std::string::npos);
  EXPECT_NE(parse_error(".inputs a\n.outputs y\ny = NOR x a\nx = NOT y\n").find("cyclic"),
            std::string::npos);
  EXPECT_NE(parse_error(".inputs a a\n").find("already defined"), std::string::npos);
  EXPECT_NE(parse_error(".model m\n").find("unknown directive"), std::string::npos);
  EXPECT_NE(parse_error(".inputs a\ny = NOT a-b\n").find("bad identifier"), std::string::npos);
  EXPECT_THROW(evaluate(parse_netlist(".inputs a\n.outputs a\n"), BitVec{}), InputError);
}

TEST(Netlist, CorpusArithmetic) {
  const auto adder = testutil::load_netlist("ripple_adder4");
  for (std::uint64_t v = 0; v < 512; ++v) {
    const auto a = v & 15, b = (v >> 4) & 15, cin = v >> 8;
    const auto out = evaluate(adder, assignment_bits(v, 9));
    std::uint64_t sum = 0;
    for (std::size_t k = 0; k < 5; ++k) sum |= std::uint64_t(out[k]) << k;
    ASSERT_EQ(sum, a + b + cin);
  }
  const auto dec = testutil::load_netlist("decoder3to8");
  for (std::uint64_t v = 0; v < 8; ++v) {
    const auto out = evaluate(dec, assignment_bits(v, 3));
    for (std::size_t k = 0; k < 8; ++k) ASSERT_EQ(out[k], k == v ? 1 : 0);
  }
  const auto mux = testutil::load_netlist("mux2");
  for (std::uint64_t v = 0; v < 8; ++v) {
    const auto in = assignment_bits(v, 3);
    ASSERT_EQ(evaluate(mux, in)[0], in[2] ? in[1] : in[0]);
  }
  const auto fa = testutil::load_netlist("full_adder");
  for (std::uint64_t v = 0; v < 8; ++v) {
    const auto in = assignment_bits(v, 3);
    const auto out = evaluate(fa, in);
    ASSERT_EQ(out[0] + 2 * out[1], in[0] + in[1] + in[2]);
  }
  const auto nc = testutil::load_netlist("not_chain");
  EXPECT_EQ(evaluate(nc, BitVec{0}), (BitVec{1}));
  EXPECT_EQ(evaluate(nc, BitVec{1}), (BitVec{0}));
}

TEST(MapToRow, CorpusTruthTables) {
  for (const auto& name : testutil::corpus()) {
    const auto nl = testutil::load_netlist(name);
    const auto rp = map_to_row(nl, kGeom);
    EXPECT_EQ(rp.gate_ops(), nl.gates.size()) << name;
    for (std::uint64_t v = 0; v < (1ull << nl.inputs.size()); ++v) {
      const auto in = assignment_bits(v, nl.inputs.size());
      ASSERT_EQ(run_row_program(rp, in), evaluate(nl, in)) << name << " v=" << v;
    }
  }
}

TEST(MapToRow, NotChainProgram) {
  const auto rp = map_to_row(testutil::load_netlist("not_chain"), kGeom);
  EXPECT_EQ(rp.gate_ops(), 3u);
  EXPECT_EQ(rp.init_ops(), 3u);
  EXPECT_EQ(cycle_count(rp.ops), 6u);
}

TEST(MapToRow, PassThroughHasNoOps) {
  const auto rp = map_to_row(testutil::load_netlist("passthrough"), kGeom);
  EXPECT_EQ(rp.gate_ops(), 0u);
  EXPECT_EQ(rp.outputColumns, rp.inputColumns);
}

TEST(MapToRow, LayoutInvariants) {
  for (const auto& name : testutil::corpus()) {
    const auto nl = testutil::load_netlist(name);
    const auto rp = map_to_row(nl, kGeom);
    std::set<std::size_t> inputs(rp.inputColumns.begin(), rp.inputColumns.end());
    std::set<std::size_t> outputs(rp.outputColumns.begin(), rp.outputColumns.end());
    std::set<std::size_t> written;
    std::set<std::size_t> initialized;
    for (const auto& op : rp.ops) {
      ASSERT_EQ(op.lanes, std::vector<std::size_t>{rp.row});
      if (op.kind == OpKind::Init) {
        initialized.insert(op.output);
        continue;
      }
      ASSERT_TRUE(initialized.count(op.output)) << name << ": NOR before INIT";
      initialized.erase(op.output);
      for (auto in : op.inputs) ASSERT_TRUE(inputs.count(in) || written.count(in)) << name;
      ASSERT_FALSE(inputs.count(op.output)) << name << ": input overwritten";
      written.insert(op.output);
    }
    // Output columns are written exactly once.
    for (auto c : outputs) {
      if (inputs.count(c)) continue;
      const auto writes = std::count_if(rp.ops.begin(), rp.ops.end(), [&](const MicroOp& op) {
        return op.kind == OpKind::Nor && op.output == c;
      });
      EXPECT_EQ(writes, 1) << name;
    }
  }
}

TEST(MapToRow, CapacityExceeded) {
  std::string text = ".inputs";
  for (int k = 0; k < 10; ++k) text += " i" + std::to_string(k);
  text += "\n.outputs i0\n";
  EXPECT_THROW(map_to_row(parse_netlist(text), Geometry{9, 3}), InputError);
}

TEST(InsertEcc, SemanticPreservationAndConsistency) {
  for (const auto& name : testutil::corpus()) {
    const auto nl = testutil::load_netlist(name);
    const auto s = insert_ecc(map_to_row(nl, kGeom), kGeom, TimingModel{}, 4);
    for (std::uint64_t v = 0; v < (1ull << nl.inputs.size()); ++v) {
      const auto in = assignment_bits(v, nl.inputs.size());
      const auto r = simulate(s, in);
      ASSERT_EQ(r.outputs, evaluate(nl, in)) << name << " v=" << v;
      ASSERT_TRUE(r.eccConsistent) << name << " v=" << v;
      ASSERT_TRUE(r.findings.empty());
    }
  }
}

TEST(InsertEcc, CriticalOpsAreOutputWritesOnly) {
  for (const auto& name : testutil::corpus()) {
    const auto rp = map_to_row(testutil::load_netlist(name), kGeom);
    const auto instr = ecc_instructions(rp, kGeom);
    std::set<std::size_t> outs(rp.outputColumns.begin(), rp.outputColumns.end());
    for (auto c : rp.inputColumns) outs.erase(c);
    std::size_t critical = 0, ops = 0;
    for (const auto& ins : instr) {
      if (ins.kind == Instruction::Kind::Check) {
        EXPECT_EQ(ins.blocks, input_block_ordinals(rp, kGeom.m));
        continue;
      }
      ops += ins.ops.size();
      for (const auto& op : ins.ops)
        EXPECT_EQ(outs.count(op.output) > 0, ins.kind == Instruction::Kind::Critical) << name;
      critical += ins.kind == Instruction::Kind::Critical;
    }
    EXPECT_EQ(ops, rp.ops.size());
    EXPECT_EQ(critical, outs.size()) << name;
  }
}

TEST(InsertEcc, NoCriticalOpsCostsOnlyTheInputCheck) {
  // Every gate writes an intermediate; the only output is an input.
  const auto nl = parse_netlist(".inputs a b\n.outputs a\nx = NOR a b\n");
  const auto s = insert_ecc(map_to_row(nl, kGeom), kGeom, TimingModel{}, 4);
  EXPECT_EQ(s.criticalOps, 0u);
  // The INIT of x touches no checked block and overlaps the check; the NOR waits for it.
  EXPECT_EQ(s.totalCycles, s.inputCheckCycles + 1);
  EXPECT_LE(s.totalCycles, s.baselineCycles + s.inputCheckCycles);
}

TEST(InsertEcc, SingleCriticalOpInBlockZero) {
  // Single output in block 1, inputs in block 0: one INIT+NOR group.
  Geometry g{45, 15};
  const auto nl = parse_netlist(".inputs a b\n.outputs y\ny = NOR a b\n");
  auto cfg = MachineConfig{g};
  const auto s = insert_ecc(map_to_row(nl, g), cfg);
  EXPECT_EQ(s.criticalOps, 1u);
  EXPECT_EQ(s.memBusyCycles, 15u + 4u) << "copies plus 2 transfer cycles around INIT+NOR";

  // Without output initialization the op alone holds MEM for 3 cycles.
  MachineConfig loose{g};
  loose.engine.requireOutputInit = false;
  RowProgram rp = map_to_row(nl, g);
  rp.ops.erase(std::remove_if(rp.ops.begin(), rp.ops.end(),
                              [](const MicroOp& o) { return o.kind == OpKind::Init; }),
               rp.ops.end());
  const auto t = insert_ecc(rp, loose);
  EXPECT_EQ(t.memBusyCycles, 15u + 3u);
}

TEST(InsertEcc, RejectsZeroPairs) {
  const auto rp = map_to_row(testutil::load_netlist("mux2"), kGeom);
  EXPECT_THROW(insert_ecc(rp, kGeom, TimingModel{}, 0), InputError);
}

TEST(InsertEcc, CyclesMonotoneInPairsAndNoStallsFromFour) {
  for (const auto& name : testutil::corpus()) {
    const auto rp = map_to_row(testutil::load_netlist(name), kGeom);
    std::uint64_t prev = ~0ull;
    for (std::size_t k = 1; k <= 10; ++k) {
      const auto s = insert_ecc(rp, kGeom, TimingModel{}, k);
      EXPECT_LE(s.totalCycles, prev) << name << " k=" << k;
      prev = s.totalCycles;
      if (k >= 4) {
        EXPECT_EQ(s.stallCycles, 0u) << name << " k=" << k;
      }
      EXPECT_LE(s.pcPairsUsed, k);
    }
  }
}

TEST(InsertEcc, ConstantMemOverheadPerCriticalOp) {
  for (const auto& name : testutil::corpus()) {
    const auto rp = map_to_row(testutil::load_netlist(name), kGeom);
    const auto s = insert_ecc(rp, kGeom, TimingModel{}, 4);
    const std::uint64_t checkCopies = rp.inputColumns.empty() ? 0 : kGeom.m;
    EXPECT_LE(s.memBusyCycles, s.baselineCycles + checkCopies + 2 * s.criticalOps) << name;
  }
}

TEST(InsertEcc, EventsNeverDoubleBookAUnit) {
  for (const auto& name : testutil::corpus()) {
    const auto s = insert_ecc(map_to_row(testutil::load_netlist(name), kGeom), kGeom, TimingModel{}, 2);
    std::set<std::pair<std::string, std::uint64_t>> busy;
    for (const auto& e : s.events)
      for (auto c = e.cycle; c < e.end(); ++c) ASSERT_TRUE(busy.insert({e.unit, c}).second) << name;
    ASSERT_TRUE(std::is_sorted(s.events.begin(), s.events.end(),
                               [](const Event& a, const Event& b) { return a.cycle < b.cycle; }));
  }
}

TEST(Report, Fields) {
  EXPECT_DOUBLE_EQ(overhead_percent(100, 126), 26.0);
  EXPECT_DOUBLE_EQ(overhead_percent(0, 50), 0.0);
  for (const auto& name : testutil::corpus()) {
    const auto s = insert_ecc(map_to_row(testutil::load_netlist(name), kGeom), kGeom, TimingModel{}, 4);
    const auto st = report(s);
    EXPECT_TRUE(std::isfinite(st.overheadPercent));
    EXPECT_GE(st.overheadPercent, 0.0);
    EXPECT_GE(st.minPcPairs, 1u);
    EXPECT_LE(st.minPcPairs, 8u) << name;
    // minPcPairs is minimal: one fewer pair is strictly slower.
    if (st.minPcPairs > 1) {
      const auto slower = insert_ecc(s.program, kGeom, TimingModel{}, st.minPcPairs - 1);
      const auto best = insert_ecc(s.program, kGeom, TimingModel{}, kMaxPcPairs);
      EXPECT_GT(slower.totalCycles, best.totalCycles) << name;
    }
  }
}

TEST(Report, GeometricMean) {
  const std::vector<double> xs{1.0, 4.0, 16.0};
  EXPECT_NEAR(geometric_mean(xs), 4.0, 1e-12);
  const std::vector<std::pair<double, double>> runs{{100, 150}, {100, 100}};
  EXPECT_NEAR(geomean_overhead_percent(runs), 100.0 * (std::sqrt(1.5) - 1.0), 1e-9);
  const std::vector<double> bad{1.0, 0.0};
  EXPECT_THROW(geometric_mean(bad), InputError);
}

TEST(Simulate, FaultsInInputBlocks) {
  const auto nl = testutil::load_netlist("full_adder");
  const auto s = insert_ecc(map_to_row(nl, kGeom), kGeom, TimingModel{}, 4);
  const auto in = assignment_bits(5, 3);
  FaultSpec one;
  one.dataFlips.push_back({0, 1});
  const auto r1 = simulate(s, in, one);
  ASSERT_EQ(r1.findings.size(), 1u);
  EXPECT_EQ(r1.findings[0].diagnosis, Diagnosis(DataError{0, 1}));
  EXPECT_EQ(r1.outputs, evaluate(nl, in));

  FaultSpec two;
  two.dataFlips = {{0, 1}, {1, 0}};
  const auto r2 = simulate(s, in, two);
  ASSERT_EQ(r2.findings.size(), 1u);
  EXPECT_TRUE(std::holds_alternative<Uncorrectable>(r2.findings[0].diagnosis));

  FaultSpec cb;
  cb.checkFlips.push_back({Bank::Leading, 4, 0, 0});
  const auto r3 = simulate(s, in, cb);
  ASSERT_EQ(r3.findings.size(), 1u);
  EXPECT_EQ(r3.findings[0].diagnosis, Diagnosis(CheckBitError{Bank::Leading, 4}));
  EXPECT_TRUE(r3.eccConsistent);
  EXPECT_THROW(simulate(s, BitVec{1}), InputError);
}
