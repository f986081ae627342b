#pragma once

// Check Memory storage and the MEM -> CMEM routing.
//
// The check bits live in m crossbars per bank, each (n/m) x (n/m). Cell (a, b)
// of crossbar i holds the check bit of diagonal i of the block a blocks from
// the left and b blocks from the top. The shifters reroute a MEM line into
// (diagonal, block ordinal) slots so that the check bits of one diagonal arrive
// in one crossbar.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "diagecc/codec.hpp"
#include "diagecc/core.hpp"
#include "diagecc/magic.hpp"

namespace diagecc {

class CheckMem {
 public:
  CheckMem() = default;
  explicit CheckMem(const Geometry& geom)
      : geom_(geom),
        per_side_(geom.blocks_per_side()),
        bits_{BitVec(geom.m * per_side_ * per_side_, 0),
              BitVec(geom.m * per_side_ * per_side_, 0)} {}

  const Geometry& geometry() const { return geom_; }
  std::size_t total_bits() const { return bits_[0].size() + bits_[1].size(); }

  std::uint8_t get(Bank bank, std::size_t diag, std::size_t blockRow,
                   std::size_t blockCol) const {
    return bits_[idx(bank)][offset(diag, blockRow, blockCol)];
  }
  void set(Bank bank, std::size_t diag, std::size_t blockRow,
           std::size_t blockCol, std::uint8_t v) {
    bits_[idx(bank)][offset(diag, blockRow, blockCol)] = v & 1u;
  }
  void flip(Bank bank, std::size_t diag, std::size_t blockRow,
            std::size_t blockCol) {
    bits_[idx(bank)][offset(diag, blockRow, blockCol)] ^= 1u;
  }

  BlockParity block_parity(std::size_t blockRow, std::size_t blockCol) const {
    BlockParity p(geom_.m);
    for (std::size_t d = 0; d < geom_.m; ++d) {
      p.leading[d] = get(Bank::Leading, d, blockRow, blockCol);
      p.counter[d] = get(Bank::Counter, d, blockRow, blockCol);
    }
    return p;
  }

  void set_block_parity(std::size_t blockRow, std::size_t blockCol,
                        const BlockParity& p) {
    for (std::size_t d = 0; d < geom_.m; ++d) {
      set(Bank::Leading, d, blockRow, blockCol, p.leading[d]);
      set(Bank::Counter, d, blockRow, blockCol, p.counter[d]);
    }
  }

  /// Dense index of a check cell; used for hazard bookkeeping.
  std::size_t cell_id(Bank bank, std::size_t diag, std::size_t blockRow,
                      std::size_t blockCol) const {
    return idx(bank) * bits_[0].size() + offset(diag, blockRow, blockCol);
  }

  friend bool operator==(const CheckMem&, const CheckMem&) = default;

 private:
  static std::size_t idx(Bank b) { return static_cast<std::size_t>(b); }
  // Crossbar `diag`, cell (a = blockCol, b = blockRow).
  std::size_t offset(std::size_t diag, std::size_t blockRow,
                     std::size_t blockCol) const {
    return (diag * per_side_ + blockCol) * per_side_ + blockRow;
  }

  Geometry geom_{};
  std::size_t per_side_ = 0;
  BitVec bits_[2];
};

/// Encodes every block of `mem`.
inline CheckMem encode_all(const CrossbarState& mem) {
  const auto& g = mem.geometry();
  CheckMem cm(g);
  for (std::size_t br = 0; br < g.blocks_per_side(); ++br)
    for (std::size_t bc = 0; bc < g.blocks_per_side(); ++bc)
      cm.set_block_parity(br, bc, encode_block(mem.block(br, bc)));
  return cm;
}

struct ShifterSlot {
  std::size_t leading = 0;  // leading diagonal index
  std::size_t counter = 0;  // counter diagonal index
  std::size_t ordinal = 0;  // block index along the line direction

  std::size_t diag(Bank b) const { return b == Bank::Leading ? leading : counter; }
  friend bool operator==(const ShifterSlot&, const ShifterSlot&) = default;
};

/// Routing for an operation of the given orientation on `fixedLine`.
///
/// InRow ops fix a column c and span wordlines r; InColumn ops fix a row r
/// and span bitlines c. Either way the cell is (r, c) and its slot is the
/// block-local diagonal pair plus the block ordinal along the spanned lines.
inline std::vector<ShifterSlot> shifter_map(Orientation orientation,
                                            std::size_t fixedLine,
                                            const Geometry& geom) {
  if (fixedLine >= geom.n)
    throw InputError("shifter_map: line " + std::to_string(fixedLine) +
                     " out of range");
  const std::size_t m = geom.m;
  std::vector<ShifterSlot> out(geom.n);
  for (std::size_t p = 0; p < geom.n; ++p) {
    const std::size_t r = orientation == Orientation::InRow ? p : fixedLine;
    const std::size_t c = orientation == Orientation::InRow ? fixedLine : p;
    out[p] = {(r % m + c % m) % m, (r % m + m - c % m) % m, p / m};
  }
  return out;
}

/// Position of a slot inside an n-wide processing-crossbar row.
inline std::size_t pc_column(std::size_t diag, std::size_t ordinal,
                             const Geometry& geom) {
  return diag * geom.blocks_per_side() + ordinal;
}

struct CheckCell {
  Bank bank = Bank::Leading;
  std::size_t diag = 0;
  std::size_t blockRow = 0;
  std::size_t blockCol = 0;
  friend bool operator==(const CheckCell&, const CheckCell&) = default;
  friend auto operator<=>(const CheckCell&, const CheckCell&) = default;
};

/// Check cells whose data a single op modifies: one per written cell and bank.
inline std::vector<CheckCell> touched_check_cells(const MicroOp& op,
                                                  const Geometry& geom) {
  std::vector<CheckCell> out;
  if (!op.writes()) return out;
  const std::size_t m = geom.m;
  for (auto lane : op.lanes) {
    const std::size_t r = op.orientation == Orientation::InRow ? lane : op.output;
    const std::size_t c = op.orientation == Orientation::InRow ? op.output : lane;
    const auto bc = block_decompose({r, c}, geom);
    for (auto bank : kBanks)
      out.push_back({bank, diag_index(bank, bc.localI, bc.localJ, m), bc.blockRow,
                     bc.blockCol});
  }
  return out;
}

/// True if no (block, bank, diagonal) receives more than one written cell.
inline bool touches_each_diagonal_once(const MicroOp& op, const Geometry& geom) {
  auto cells = touched_check_cells(op, geom);
  std::sort(cells.begin(), cells.end());
  return std::adjacent_find(cells.begin(), cells.end()) == cells.end();
}

struct DeviceCounts {
  std::uint64_t memMemristors = 0;
  std::uint64_t checkBitMemristors = 0;
  std::uint64_t processingMemristors = 0;
  std::uint64_t checkingMemristors = 0;
  std::uint64_t shifterTransistors = 0;
  std::uint64_t connectionTransistors = 0;

  std::uint64_t total_memristors() const {
    return memMemristors + checkBitMemristors + processingMemristors +
           checkingMemristors;
  }
  std::uint64_t total_transistors() const {
    return shifterTransistors + connectionTransistors;
  }
};

/// Device counts of MEM plus CMEM for k processing-crossbar pairs.
inline DeviceCounts device_counts(std::uint64_t n, std::uint64_t m, std::uint64_t k) {
  if (m == 0 || n == 0 || n % m != 0)
    throw InputError("device_counts: m must divide n (n=" + std::to_string(n) +
                     ", m=" + std::to_string(m) + ")");
  if (k == 0) throw InputError("device_counts: need at least one processing crossbar");
  const std::uint64_t b = n / m;
  DeviceCounts d;
  d.memMemristors = n * n;
  d.checkBitMemristors = 2 * m * b * b;
  d.processingMemristors = 2 * 11 * k * n;
  d.checkingMemristors = 2 * n;
  d.shifterTransistors = 4 * n * m;
  d.connectionTransistors = 2 * n * (k + 4);
  return d;
}

}  // namespace diagecc
