#pragma once

// MEM + CMEM machine: functional state, unit reservations and the two timed
// protocols (critical-operation parity update and row/column-of-blocks check).
//
// Functional effects are applied when an instruction is issued; the timeline
// only decides when. Instructions issue in program order, each at the first
// cycle where every unit it needs is free, its data dependencies are met and no
// pending check-bit writeback would be read early.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "diagecc/check_memory.hpp"
#include "diagecc/codec.hpp"
#include "diagecc/core.hpp"
#include "diagecc/magic.hpp"
#include "diagecc/timing.hpp"

namespace diagecc {

struct MachineConfig {
  Geometry geom{};
  TimingModel timing{};
  std::size_t pcPairs = 4;
  /// Let a critical op read check bits whose update is still in flight in a
  /// processing crossbar instead of stalling until the writeback.
  bool forwarding = false;
  EngineConfig engine{};

  void validate() const {
    geom.validate();
    timing.validate();
    if (pcPairs < 1) throw InputError("need at least one processing-crossbar pair");
    if (engine.fanInMax < 1) throw InputError("fanInMax must be >= 1");
  }
};

/// One processing crossbar: 3 operand rows plus 8 XOR3 scratch rows, n wide.
struct ProcessingCrossbar {
  static constexpr std::size_t kRows = 11;
  enum Row : std::size_t { OldData = 0, NewData = 1, OldCheck = 2, Result = kRows - 1 };

  std::vector<BitVec> rows;

  ProcessingCrossbar() = default;
  explicit ProcessingCrossbar(std::size_t n) : rows(kRows, BitVec(n, 0)) {}

  void xor3() {
    auto& out = rows[Result];
    for (std::size_t c = 0; c < out.size(); ++c)
      out[c] = rows[OldData][c] ^ rows[NewData][c] ^ rows[OldCheck][c];
  }
};

struct IssueInfo {
  std::uint64_t start = 0;
  std::uint64_t end = 0;    // first cycle after the last event
  std::uint64_t stall = 0;  // cycles lost to PC or check-bit conflicts
  std::optional<std::size_t> pcPair;
};

struct BlockDiagnosis {
  std::size_t blockRow = 0;
  std::size_t blockCol = 0;
  Diagnosis diagnosis;
};

struct CheckResult {
  std::vector<BlockDiagnosis> blocks;  // masked blocks only
  IssueInfo timing;
};

struct MemoryCheckReport {
  std::size_t clean = 0;
  std::size_t corrected = 0;
  std::size_t uncorrectable = 0;
  std::uint64_t cycles = 0;
  std::vector<BlockDiagnosis> findings;  // non-clean blocks
};

class Machine {
 public:
  explicit Machine(MachineConfig cfg)
      : cfg_((cfg.validate(), cfg)),
        engine_(cfg_.engine),
        mem_(cfg_.geom),
        cm_(cfg_.geom),
        pcs_(2 * cfg_.pcPairs, ProcessingCrossbar(cfg_.geom.n)),
        table_(kFirstPc + cfg_.pcPairs + 2 * cfg_.geom.m),
        pendingWrite_(cm_.total_bits(), 0),
        dataReady_(cfg_.geom.block_count(), 0) {}

  const MachineConfig& config() const { return cfg_; }
  const Geometry& geometry() const { return cfg_.geom; }
  const CrossbarState& mem() const { return mem_; }
  const CheckMem& check_mem() const { return cm_; }

  // --- host-side access (not timed) ---------------------------------------

  /// Replaces MEM and re-encodes every block.
  void load(const CrossbarState& state) {
    if (!(state.geometry() == cfg_.geom)) throw InputError("load: geometry mismatch");
    mem_ = state;
    cm_ = encode_all(mem_);
  }

  /// Ordinary write through the controller; keeps the check bits consistent.
  void host_write(CellAddr a, std::uint8_t bit) {
    const auto bc = block_decompose(a, cfg_.geom);
    const CellUpdate u{bc.localI, bc.localJ, mem_.at(a), static_cast<std::uint8_t>(bit & 1u)};
    auto p = update_parity(cm_.block_parity(bc.blockRow, bc.blockCol), {&u, 1});
    cm_.set_block_parity(bc.blockRow, bc.blockCol, p);
    mem_.at(a.row, a.col) = u.newBit;
  }

  /// Soft error in a data cell.
  void inject_flip(CellAddr a) {
    block_decompose(a, cfg_.geom);
    mem_.flip(a);
  }

  /// Soft error in a stored check bit.
  void inject_flip(const CheckCell& c) {
    if (c.diag >= cfg_.geom.m || c.blockRow >= cfg_.geom.blocks_per_side() ||
        c.blockCol >= cfg_.geom.blocks_per_side())
      throw InputError("inject: check cell out of range");
    cm_.flip(c.bank, c.diag, c.blockRow, c.blockCol);
  }

  /// True if the stored parity of the block matches its data.
  bool block_consistent(std::size_t br, std::size_t bc) const {
    return encode_block(mem_.block(br, bc)) == cm_.block_parity(br, bc);
  }

  // --- timed instructions ---------------------------------------------------

  /// A MEM op that needs no check-bit update.
  IssueInfo plain_op(const MicroOp& op) {
    validate(op, cfg_.geom.n, engine_.config());
    const auto floor = dependency_floor(op_blocks(op));
    const auto t = table_.first_free(kMem, floor, 1);
    engine_.apply(mem_, op);
    table_.reserve(kMem, t, 1);
    memBusy_ += 1;
    emit(t, 1, kMem, to_string(op.kind), op_operands(op) + " crit=0");
    return finish({t, t + 1, 0, std::nullopt});
  }

  IssueInfo critical_op(const MicroOp& op) { return critical_op(std::span(&op, 1)); }

  /// Cancel / perform / add for a group of ops that all write the same line
  /// and lanes (typically INIT followed by the gate). Pipeline per group with
  /// q ops and default latencies: copy old bits to a PC at t, perform at
  /// t+1..t+q while the stored check bits load into the PC, copy new bits at
  /// t+q+1, XOR3 for 8 cycles, write back.
  IssueInfo critical_op(std::span<const MicroOp> group) {
    if (group.empty()) throw InputError("critical op: empty group");
    const auto& head = group.front();
    for (const auto& op : group) {
      validate(op, cfg_.geom.n, engine_.config());
      if (!op.writes() || op.output != head.output ||
          op.orientation != head.orientation || op.lanes != head.lanes)
        throw InputError("critical op: group members must write the same line and lanes");
    }
    const auto& tm = cfg_.timing;
    const std::uint64_t c = tm.copyCycles, q = group.size(), x = tm.xor3Cycles,
                        w = tm.writebackCycles;
    const std::uint64_t memLen = 2 * c + q;
    const std::uint64_t pcLen = memLen + x + w;
    const std::uint64_t readOff = c, xorOff = memLen, wbOff = memLen + x;

    const auto touched = touched_check_cells(head, cfg_.geom);
    std::vector<std::size_t> xbars = crossbars_of(touched);
    std::vector<std::size_t> cellIds;
    for (const auto& cc : touched)
      cellIds.push_back(cm_.cell_id(cc.bank, cc.diag, cc.blockRow, cc.blockCol));

    std::vector<std::size_t> blocks;
    for (const auto& op : group) append_unique(blocks, op_blocks(op));
    const auto floor = dependency_floor(blocks);

    auto fits = [&](std::uint64_t t, bool full) -> std::optional<std::size_t> {
      if (!table_.is_free(kMem, t, memLen)) return std::nullopt;
      if (!full) return 0;
      for (auto u : xbars)
        if (!table_.is_free(u, t + readOff, c) || !table_.is_free(u, t + wbOff, w))
          return std::nullopt;
      if (!cfg_.forwarding)
        for (auto id : cellIds)
          if (pendingWrite_[id] > t + readOff) return std::nullopt;
      return free_pair(t, pcLen);
    };
    const auto [t, pair, stall] = search(floor, fits);

    // Functional effect, routed through the processing crossbars.
    const auto& geom = cfg_.geom;
    const auto o = head.orientation;
    const auto line = head.output;
    const auto slots = shifter_map(o, line, geom);
    auto& pcL = pcs_[2 * pair];
    auto& pcC = pcs_[2 * pair + 1];
    for (std::size_t p = 0; p < geom.n; ++p) {
      const auto bit = mem_.cell(o, p, line);
      pcL.rows[ProcessingCrossbar::OldData][pc_column(slots[p].leading, slots[p].ordinal, geom)] = bit;
      pcC.rows[ProcessingCrossbar::OldData][pc_column(slots[p].counter, slots[p].ordinal, geom)] = bit;
    }
    for (const auto& op : group) engine_.apply(mem_, op);
    for (std::size_t p = 0; p < geom.n; ++p) {
      const auto bit = mem_.cell(o, p, line);
      pcL.rows[ProcessingCrossbar::NewData][pc_column(slots[p].leading, slots[p].ordinal, geom)] = bit;
      pcC.rows[ProcessingCrossbar::NewData][pc_column(slots[p].counter, slots[p].ordinal, geom)] = bit;
    }
    // Block touched by slot (diag, ordinal) of this line.
    auto block_of = [&](std::size_t ordinal) {
      return o == Orientation::InRow ? std::pair{ordinal, line / geom.m}
                                     : std::pair{line / geom.m, ordinal};
    };
    const std::size_t per = geom.blocks_per_side();
    for (auto bank : kBanks) {
      auto& pc = bank == Bank::Leading ? pcL : pcC;
      for (std::size_t d = 0; d < geom.m; ++d)
        for (std::size_t b = 0; b < per; ++b) {
          auto [br, bc] = block_of(b);
          pc.rows[ProcessingCrossbar::OldCheck][pc_column(d, b, geom)] = cm_.get(bank, d, br, bc);
        }
      pc.xor3();
      for (auto u : xbars) {
        if (bank_of_unit(u) != bank) continue;
        const std::size_t d = diag_of_unit(u);
        for (std::size_t b = 0; b < per; ++b) {
          auto [br, bc] = block_of(b);
          cm_.set(bank, d, br, bc, pc.rows[ProcessingCrossbar::Result][pc_column(d, b, geom)]);
        }
      }
    }

    // Timeline.
    const auto pcu = kFirstPc + pair;
    table_.reserve(kMem, t, memLen);
    table_.reserve(pcu, t, pcLen);
    for (auto u : xbars) {
      table_.reserve(u, t + readOff, c);
      table_.reserve(u, t + wbOff, w);
    }
    for (auto id : cellIds) pendingWrite_[id] = std::max(pendingWrite_[id], t + wbOff + w);
    memBusy_ += memLen;
    ++criticalCount_;

    const std::string lineTag = std::string("orient=") + to_string(o) +
                                " line=" + std::to_string(line);
    const std::string pcName = unit_name(pcu);
    emit(t, c, kMem, "COPY_OLD", lineTag + " to=" + pcName);
    emit(t, c, pcu, "LOAD_OLD", lineTag);
    for (std::size_t k = 0; k < group.size(); ++k)
      emit(t + c + k, 1, kMem, to_string(group[k].kind), op_operands(group[k]) + " crit=1");
    for (auto u : xbars) emit(t + readOff, c, u, "READ", "to=" + pcName);
    emit(t + readOff, c, pcu, "LOAD_CHECK", "xbars=" + std::to_string(xbars.size()));
    emit(t + c + q, c, kMem, "COPY_NEW", lineTag + " to=" + pcName);
    emit(t + c + q, c, pcu, "LOAD_NEW", lineTag);
    emit(t + xorOff, x, pcu, "XOR3", lineTag);
    emit(t + wbOff, w, pcu, "WRITEBACK", lineTag);
    for (auto u : xbars) emit(t + wbOff, w, u, "WRITE", "from=" + pcName);
    return finish({t, t + pcLen, stall, pair});
  }

  /// Checks one row (InRow) or column (InColumn) of blocks. Rows/columns are
  /// copied into a PC pair one per `copyCycles`, reduced by an XOR3 tree,
  /// XORed with the stored parity and zero-compared in the checking crossbar.
  /// Nonzero syndromes of masked blocks are read by the controller and fixed.
  /// `blockMask` selects block ordinals along the line; empty means all.
  CheckResult check_line(Orientation orientation, std::size_t index,
                         std::span<const std::size_t> blockMask = {}) {
    const auto& geom = cfg_.geom;
    const auto& tm = cfg_.timing;
    const std::size_t per = geom.blocks_per_side(), m = geom.m;
    if (index >= per)
      throw InputError("check: block line " + std::to_string(index) + " out of range");
    std::vector<std::size_t> ordinals(blockMask.begin(), blockMask.end());
    if (ordinals.empty()) ordinals = all_lanes(per);
    for (auto b : ordinals)
      if (b >= per) throw InputError("check: block ordinal out of range");
    std::sort(ordinals.begin(), ordinals.end());
    ordinals.erase(std::unique(ordinals.begin(), ordinals.end()), ordinals.end());

    auto block_of = [&](std::size_t ordinal) {
      return orientation == Orientation::InRow ? std::pair{index, ordinal}
                                               : std::pair{ordinal, index};
    };

    // Functional: XOR the m shifted lines, then against the stored bits.
    std::vector<BitVec> computed(2, BitVec(geom.n, 0));
    for (std::size_t k = 0; k < m; ++k) {
      const std::size_t fixed = index * m + k;
      // Copying a whole row spans the bitlines: route as an InColumn op.
      const auto lineOrient =
          orientation == Orientation::InRow ? Orientation::InColumn : Orientation::InRow;
      const auto slots = shifter_map(lineOrient, fixed, geom);
      for (std::size_t p = 0; p < geom.n; ++p) {
        const auto bit = lineOrient == Orientation::InColumn ? mem_.at(fixed, p) : mem_.at(p, fixed);
        computed[0][pc_column(slots[p].leading, slots[p].ordinal, geom)] ^= bit;
        computed[1][pc_column(slots[p].counter, slots[p].ordinal, geom)] ^= bit;
      }
    }
    CheckResult result;
    std::vector<std::pair<std::size_t, Diagnosis>> nonzero;  // (ordinal, diag)
    for (auto b : ordinals) {
      auto [br, bc] = block_of(b);
      Syndrome s(m);
      for (std::size_t d = 0; d < m; ++d) {
        s.leading[d] = computed[0][pc_column(d, b, geom)] ^ cm_.get(Bank::Leading, d, br, bc);
        s.counter[d] = computed[1][pc_column(d, b, geom)] ^ cm_.get(Bank::Counter, d, br, bc);
      }
      auto diag = decode_syndrome(s);
      result.blocks.push_back({br, bc, diag});
      if (!s.is_zero()) nonzero.emplace_back(b, diag);
    }

    // Timeline.
    const std::uint64_t c = tm.copyCycles, x = tm.xor3Cycles;
    const std::uint64_t copyLen = m * c;
    const std::uint64_t levels = xor3_tree_levels(m);
    const std::uint64_t readOff = copyLen + levels * x;
    const std::uint64_t finalOff = readOff + c;
    const std::uint64_t sendOff = finalOff + x;
    const std::uint64_t cmpOff = sendOff + c;
    const std::uint64_t pcLen = cmpOff;

    std::vector<std::size_t> blocks;
    std::vector<std::size_t> cellIds;
    for (std::size_t b = 0; b < per; ++b) {
      auto [br, bc] = block_of(b);
      for (auto bank : kBanks)
        for (std::size_t d = 0; d < m; ++d) cellIds.push_back(cm_.cell_id(bank, d, br, bc));
    }
    for (auto b : ordinals) {
      auto [br, bc] = block_of(b);
      blocks.push_back(br * per + bc);
    }
    const auto floor = dependency_floor(blocks);
    auto fits = [&](std::uint64_t t, bool full) -> std::optional<std::size_t> {
      if (!table_.is_free(kMem, t, copyLen)) return std::nullopt;
      if (!full) return 0;
      for (std::size_t u = kFirstPc + cfg_.pcPairs; u < table_.units(); ++u)
        if (!table_.is_free(u, t + readOff, c)) return std::nullopt;
      if (!table_.is_free(kChk, t + sendOff, c + tm.zeroCompareCycles)) return std::nullopt;
      for (auto id : cellIds)
        if (pendingWrite_[id] > t + readOff) return std::nullopt;
      return free_pair(t, pcLen);
    };
    const auto [t, pair, stall] = search(floor, fits);
    const auto pcu = kFirstPc + pair;
    const std::string pcName = unit_name(pcu);
    const std::string tag = std::string("check=") +
                            (orientation == Orientation::InRow ? "row" : "col") +
                            " index=" + std::to_string(index);

    table_.reserve(kMem, t, copyLen);
    table_.reserve(pcu, t, pcLen);
    for (std::size_t u = kFirstPc + cfg_.pcPairs; u < table_.units(); ++u)
      table_.reserve(u, t + readOff, c);
    table_.reserve(kChk, t + sendOff, c + tm.zeroCompareCycles);
    memBusy_ += copyLen;

    for (std::size_t k = 0; k < m; ++k) {
      emit(t + k * c, c, kMem, "CHECK_COPY", tag + " line=" + std::to_string(index * m + k) + " to=" + pcName);
      emit(t + k * c, c, pcu, "LOAD_LINE", tag + " slot=" + std::to_string(k));
    }
    emit(t + copyLen, levels * x, pcu, "XOR3_TREE", tag + " levels=" + std::to_string(levels));
    for (std::size_t u = kFirstPc + cfg_.pcPairs; u < table_.units(); ++u)
      emit(t + readOff, c, u, "READ", tag + " to=" + pcName);
    emit(t + finalOff, x, pcu, "XOR3", tag + " syndrome");
    emit(t + sendOff, c, pcu, "SEND", tag + " to=CHK");
    emit(t + sendOff, c, kChk, "RECV", tag);
    emit(t + cmpOff, tm.zeroCompareCycles, kChk, "ZERO_CMP", tag + " nonzero=" + std::to_string(nonzero.size()));

    std::uint64_t done = t + cmpOff + tm.zeroCompareCycles;
    std::uint64_t ctrlAt = done;
    for (auto& [b, diag] : nonzero) {
      auto [br, bc] = block_of(b);
      const std::string where = "block=" + std::to_string(br) + "," + std::to_string(bc);
      const auto rt = table_.first_free(kCtrl, ctrlAt, tm.controllerReadCycles);
      table_.reserve(kCtrl, rt, tm.controllerReadCycles);
      emit(rt, tm.controllerReadCycles, kCtrl, "READ_SYNDROME", where + " diag=" + to_string(diag));
      ctrlAt = rt + tm.controllerReadCycles;
      done = std::max(done, ctrlAt);
      if (auto* e = std::get_if<DataError>(&diag)) {
        const CellAddr a{br * m + e->i, bc * m + e->j};
        const auto wt = table_.first_free(kMem, ctrlAt, tm.correctionWriteCycles);
        table_.reserve(kMem, wt, tm.correctionWriteCycles);
        memBusy_ += tm.correctionWriteCycles;
        mem_.flip(a);
        emit(wt, tm.correctionWriteCycles, kMem, "CORRECT",
             where + " cell=" + std::to_string(a.row) + "," + std::to_string(a.col));
        done = std::max<std::uint64_t>(done, wt + tm.correctionWriteCycles);
      } else if (auto* cb = std::get_if<CheckBitError>(&diag)) {
        const auto u = xbar_unit(cb->bank, cb->idx);
        const auto wt = table_.first_free(u, ctrlAt, tm.correctionWriteCycles);
        table_.reserve(u, wt, tm.correctionWriteCycles);
        cm_.flip(cb->bank, cb->idx, br, bc);
        emit(wt, tm.correctionWriteCycles, u, "CORRECT", where);
        const auto id = cm_.cell_id(cb->bank, cb->idx, br, bc);
        pendingWrite_[id] = std::max<std::uint64_t>(pendingWrite_[id], wt + tm.correctionWriteCycles);
        done = std::max<std::uint64_t>(done, wt + tm.correctionWriteCycles);
      }
    }
    for (auto blk : blocks) dataReady_[blk] = std::max(dataReady_[blk], done);
    result.timing = finish({t, done, stall, pair});
    return result;
  }

  /// Checks every row of blocks in order.
  MemoryCheckReport full_memory_check() {
    MemoryCheckReport rep;
    std::uint64_t first = std::numeric_limits<std::uint64_t>::max(), last = 0;
    for (std::size_t br = 0; br < cfg_.geom.blocks_per_side(); ++br) {
      auto r = check_line(Orientation::InRow, br);
      first = std::min(first, r.timing.start);
      last = std::max(last, r.timing.end);
      for (auto& b : r.blocks) {
        if (std::holds_alternative<Clean>(b.diagnosis)) {
          ++rep.clean;
          continue;
        }
        if (is_correctable(b.diagnosis)) ++rep.corrected;
        else ++rep.uncorrectable;
        rep.findings.push_back(b);
      }
    }
    rep.cycles = last - first;
    return rep;
  }

  /// Clears a block and writes its check bits directly (no XOR3 pass).
  IssueInfo reset_block(std::size_t br, std::size_t bc) {
    const auto& geom = cfg_.geom;
    const std::size_t m = geom.m, per = geom.blocks_per_side();
    if (br >= per || bc >= per) throw InputError("reset: block out of range");
    const std::uint64_t w = cfg_.timing.writebackCycles;
    std::vector<std::size_t> cellIds;
    for (auto bank : kBanks)
      for (std::size_t d = 0; d < m; ++d) cellIds.push_back(cm_.cell_id(bank, d, br, bc));
    const auto floor = dependency_floor(std::vector<std::size_t>{br * per + bc});
    auto fits = [&](std::uint64_t t, bool full) -> std::optional<std::size_t> {
      if (!table_.is_free(kMem, t, m)) return std::nullopt;
      if (!full) return 0;
      for (std::size_t u = kFirstPc + cfg_.pcPairs; u < table_.units(); ++u)
        if (!table_.is_free(u, t, w)) return std::nullopt;
      for (auto id : cellIds)
        if (pendingWrite_[id] > t) return std::nullopt;
      return 0;
    };
    const auto [t, unused, stall] = search(floor, fits);
    (void)unused;
    std::vector<std::size_t> lanes;
    for (std::size_t i = 0; i < m; ++i) lanes.push_back(br * m + i);
    for (std::size_t j = 0; j < m; ++j) {
      const auto op = MicroOp::write(Orientation::InRow, bc * m + j, lanes, BitVec(m, 0));
      engine_.apply(mem_, op);
      emit(t + j, 1, kMem, "WRITE", op_operands(op) + " reset=1");
    }
    cm_.set_block_parity(br, bc, BlockParity(m));
    table_.reserve(kMem, t, m);
    memBusy_ += m;
    const std::string where = "block=" + std::to_string(br) + "," + std::to_string(bc);
    for (std::size_t u = kFirstPc + cfg_.pcPairs; u < table_.units(); ++u) {
      table_.reserve(u, t, w);
      emit(t, w, u, "RESET", where);
    }
    for (auto id : cellIds) pendingWrite_[id] = t + w;
    return finish({t, t + std::max<std::uint64_t>(m, w), stall, std::nullopt});
  }

  // --- accounting -------------------------------------------------------------

  const std::vector<Event>& events() const { return events_; }

  /// Events ordered by cycle, then unit, then issue order.
  std::vector<Event> sorted_events() const {
    std::vector<std::pair<std::size_t, std::size_t>> key(events_.size());
    for (std::size_t i = 0; i < events_.size(); ++i) key[i] = {eventUnit_[i], i};
    std::vector<std::size_t> order(events_.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (events_[a].cycle != events_[b].cycle) return events_[a].cycle < events_[b].cycle;
      return eventUnit_[a] < eventUnit_[b];
    });
    std::vector<Event> out;
    out.reserve(order.size());
    for (auto i : order) out.push_back(events_[i]);
    return out;
  }

  std::uint64_t total_cycles() const { return horizon_; }
  std::uint64_t stall_cycles() const { return stalls_; }
  std::uint64_t mem_busy_cycles() const { return memBusy_; }
  std::size_t critical_ops() const { return criticalCount_; }
  std::size_t pc_pairs_used() const { return pairsUsed_; }

  std::string unit_name(std::size_t u) const {
    if (u == kMem) return "MEM";
    if (u == kChk) return "CHK";
    if (u == kCtrl) return "CTRL";
    if (u < kFirstPc + cfg_.pcPairs) return "PC" + std::to_string(u - kFirstPc);
    return (bank_of_unit(u) == Bank::Leading ? "CBL" : "CBC") + std::to_string(diag_of_unit(u));
  }

 private:
  static constexpr std::size_t kMem = 0, kChk = 1, kCtrl = 2, kFirstPc = 3;

  std::size_t xbar_unit(Bank b, std::size_t d) const {
    return kFirstPc + cfg_.pcPairs + (b == Bank::Leading ? 0 : cfg_.geom.m) + d;
  }
  Bank bank_of_unit(std::size_t u) const {
    return (u - kFirstPc - cfg_.pcPairs) < cfg_.geom.m ? Bank::Leading : Bank::Counter;
  }
  std::size_t diag_of_unit(std::size_t u) const {
    return (u - kFirstPc - cfg_.pcPairs) % cfg_.geom.m;
  }

  std::vector<std::size_t> crossbars_of(const std::vector<CheckCell>& cells) const {
    std::vector<std::size_t> u;
    for (const auto& c : cells) u.push_back(xbar_unit(c.bank, c.diag));
    std::sort(u.begin(), u.end());
    u.erase(std::unique(u.begin(), u.end()), u.end());
    return u;
  }

  /// Dense ids of the blocks an op reads or writes.
  std::vector<std::size_t> op_blocks(const MicroOp& op) const {
    const std::size_t m = cfg_.geom.m, per = cfg_.geom.blocks_per_side();
    std::vector<std::size_t> ids;
    auto add = [&](std::size_t lane, std::size_t line) {
      const std::size_t r = op.orientation == Orientation::InRow ? lane : line;
      const std::size_t c = op.orientation == Orientation::InRow ? line : lane;
      ids.push_back((r / m) * per + c / m);
    };
    for (auto lane : op.lanes) {
      for (auto in : op.inputs) add(lane, in);
      if (op.writes()) add(lane, op.output);
    }
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    return ids;
  }

  static void append_unique(std::vector<std::size_t>& dst, const std::vector<std::size_t>& src) {
    for (auto v : src)
      if (std::find(dst.begin(), dst.end(), v) == dst.end()) dst.push_back(v);
  }

  std::uint64_t dependency_floor(const std::vector<std::size_t>& blocks) const {
    std::uint64_t f = lastStart_;
    for (auto b : blocks) f = std::max(f, dataReady_[b]);
    return f;
  }

  std::optional<std::size_t> free_pair(std::uint64_t t, std::uint64_t len) const {
    for (std::size_t p = 0; p < cfg_.pcPairs; ++p)
      if (table_.is_free(kFirstPc + p, t, len)) return p;
    return std::nullopt;
  }

  struct Slot {
    std::uint64_t t;
    std::size_t pair;
    std::uint64_t stall;
  };

  /// Earliest feasible start. The MEM-only start (fits(t, false)) is the
  /// reference the stall count is measured against.
  template <class Fits>
  Slot search(std::uint64_t floor, Fits&& fits) const {
    std::uint64_t ideal = floor;
    while (!fits(ideal, false)) ++ideal;
    std::uint64_t t = ideal;
    std::optional<std::size_t> p;
    while (!(p = fits(t, true))) ++t;
    return {t, *p, t - ideal};
  }

  IssueInfo finish(IssueInfo info) {
    lastStart_ = info.start;
    stalls_ += info.stall;
    if (info.pcPair) pairsUsed_ = std::max(pairsUsed_, *info.pcPair + 1);
    return info;
  }

  void emit(std::uint64_t cycle, std::uint64_t len, std::size_t unit,
            std::string action, std::string operands) {
    events_.push_back({cycle, static_cast<std::uint32_t>(len), unit_name(unit),
                       std::move(action), std::move(operands)});
    eventUnit_.push_back(unit);
    horizon_ = std::max(horizon_, cycle + len);
  }

  static std::string op_operands(const MicroOp& op) {
    auto s = to_string(op);
    return s.substr(s.find(' ') + 1);
  }

  MachineConfig cfg_;
  Engine engine_;
  CrossbarState mem_;
  CheckMem cm_;
  std::vector<ProcessingCrossbar> pcs_;  // 2 per pair: leading, counter
  ReservationTable table_;
  std::vector<std::uint64_t> pendingWrite_;  // per check cell: writeback end
  std::vector<std::uint64_t> dataReady_;     // per block: check completion
  std::vector<Event> events_;
  std::vector<std::size_t> eventUnit_;
  std::uint64_t lastStart_ = 0;
  std::uint64_t horizon_ = 0;
  std::uint64_t stalls_ = 0;
  std::uint64_t memBusy_ = 0;
  std::size_t criticalCount_ = 0;
  std::size_t pairsUsed_ = 0;
};

}  // namespace diagecc
