#pragma once

// Functional model of MAGIC stateful logic on a single crossbar.
//
// A row-parallel (InRow) gate reads and writes fixed column lines across the
// active rows; a column-parallel (InColumn) gate is its transpose. Every
// micro-op costs exactly one cycle.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "diagecc/bits.hpp"
#include "diagecc/core.hpp"

namespace diagecc {

enum class Orientation : std::uint8_t { InRow, InColumn };

enum class OpKind : std::uint8_t { Nor, Init, Read, Write };

inline const char* to_string(Orientation o) {
  return o == Orientation::InRow ? "row" : "col";
}

inline const char* to_string(OpKind k) {
  switch (k) {
    case OpKind::Nor: return "NOR";
    case OpKind::Init: return "INIT";
    case OpKind::Read: return "READ";
    case OpKind::Write: return "WRITE";
  }
  return "?";
}

/// One MAGIC micro-operation.
///
/// `inputs` are the operand lines of a NOR (one input = NOT) or the lines
/// sampled by a READ. `output` is the line written by NOR/INIT/WRITE. `lanes`
/// are the rows (InRow) or columns (InColumn) the op is applied to. WRITE
/// carries one value per lane.
struct MicroOp {
  OpKind kind = OpKind::Nor;
  Orientation orientation = Orientation::InRow;
  std::vector<std::size_t> inputs;
  std::size_t output = 0;
  std::vector<std::size_t> lanes;
  BitVec values;

  bool writes() const { return kind != OpKind::Read; }

  friend bool operator==(const MicroOp&, const MicroOp&) = default;

  static MicroOp nor(Orientation o, std::vector<std::size_t> in,
                     std::size_t out, std::vector<std::size_t> lanes) {
    return {OpKind::Nor, o, std::move(in), out, std::move(lanes), {}};
  }
  static MicroOp init(Orientation o, std::size_t out,
                      std::vector<std::size_t> lanes) {
    return {OpKind::Init, o, {}, out, std::move(lanes), {}};
  }
  static MicroOp write(Orientation o, std::size_t out,
                       std::vector<std::size_t> lanes, BitVec values) {
    return {OpKind::Write, o, {}, out, std::move(lanes), std::move(values)};
  }
};

struct EngineConfig {
  std::size_t fanInMax = 2;
  bool requireOutputInit = true;
};

inline std::vector<std::size_t> all_lanes(std::size_t n) {
  std::vector<std::size_t> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = i;
  return v;
}

/// Memristor states of one n x n crossbar (1 = LRS, 0 = HRS).
class CrossbarState {
 public:
  CrossbarState() = default;
  explicit CrossbarState(Geometry geom) : geom_(geom), cells_(geom.n) {}

  const Geometry& geometry() const { return geom_; }
  std::size_t side() const { return geom_.n; }

  std::uint8_t at(std::size_t r, std::size_t c) const { return cells_.at(r, c); }
  std::uint8_t& at(std::size_t r, std::size_t c) { return cells_.at(r, c); }
  std::uint8_t at(CellAddr a) const { return cells_.at(a.row, a.col); }
  void flip(CellAddr a) { cells_.flip(a.row, a.col); }

  /// Cell addressed by (lane, line) under an orientation.
  std::uint8_t& cell(Orientation o, std::size_t lane, std::size_t line) {
    return o == Orientation::InRow ? cells_.at(lane, line) : cells_.at(line, lane);
  }
  std::uint8_t cell(Orientation o, std::size_t lane, std::size_t line) const {
    return o == Orientation::InRow ? cells_.at(lane, line) : cells_.at(line, lane);
  }

  /// Extract one m x m block.
  BitSquare block(std::size_t blockRow, std::size_t blockCol) const {
    const std::size_t m = geom_.m;
    BitSquare b(m);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j)
        b.at(i, j) = cells_.at(blockRow * m + i, blockCol * m + j);
    return b;
  }

  void set_block(std::size_t blockRow, std::size_t blockCol, const BitSquare& b) {
    const std::size_t m = geom_.m;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j)
        cells_.at(blockRow * m + i, blockCol * m + j) = b.at(i, j);
  }

  CrossbarState transposed() const {
    CrossbarState t(geom_);
    t.cells_ = cells_.transposed();
    return t;
  }

  const BitSquare& bits() const { return cells_; }
  BitSquare& bits() { return cells_; }

  friend bool operator==(const CrossbarState&, const CrossbarState&) = default;

 private:
  Geometry geom_{};
  BitSquare cells_;
};

namespace detail {
inline void check_line(std::size_t line, std::size_t n, const char* what) {
  if (line >= n)
    throw InputError(std::string(what) + " index " + std::to_string(line) +
                     " out of range (n=" + std::to_string(n) + ")");
}
}  // namespace detail

/// Throws InputError unless `op` is well formed for a crossbar of side n.
inline void validate(const MicroOp& op, std::size_t n, const EngineConfig& cfg) {
  detail::check_line(op.output, n, "output line");
  for (auto l : op.inputs) detail::check_line(l, n, "input line");
  for (auto l : op.lanes) detail::check_line(l, n, "lane");
  switch (op.kind) {
    case OpKind::Nor:
      if (op.inputs.empty())
        throw InputError("NOR needs at least one input line");
      if (op.inputs.size() > cfg.fanInMax)
        throw InputError("NOR fan-in " + std::to_string(op.inputs.size()) +
                         " exceeds limit " + std::to_string(cfg.fanInMax));
      if (std::find(op.inputs.begin(), op.inputs.end(), op.output) !=
          op.inputs.end())
        throw InputError("NOR output line is also an input line");
      [[fallthrough]];
    case OpKind::Init:
      if (op.lanes.empty()) throw InputError("empty lane mask");
      break;
    case OpKind::Write:
      if (op.lanes.empty()) throw InputError("empty lane mask");
      if (op.values.size() != op.lanes.size())
        throw InputError("WRITE needs one value per lane");
      break;
    case OpKind::Read:
      break;
  }
}

/// Stateless executor for micro-ops.
class Engine {
 public:
  explicit Engine(EngineConfig cfg = {}) : cfg_(cfg) {
    if (cfg_.fanInMax < 1) throw InputError("fanInMax must be >= 1");
  }

  const EngineConfig& config() const { return cfg_; }

  /// Applies `op` in place. Every lane reads the pre-state; outputs never feed
  /// inputs within one op since the output line is disjoint from the inputs.
  void apply(CrossbarState& state, const MicroOp& op) const {
    validate(op, state.side(), cfg_);
    const auto o = op.orientation;
    switch (op.kind) {
      case OpKind::Nor:
        if (cfg_.requireOutputInit)
          for (auto lane : op.lanes)
            if (state.cell(o, lane, op.output) != 1)
              throw InputError("NOR output cell (lane " + std::to_string(lane) +
                               ", line " + std::to_string(op.output) +
                               ") not initialized");
        for (auto lane : op.lanes) {
          std::uint8_t any = 0;
          for (auto in : op.inputs) any |= state.cell(o, lane, in);
          state.cell(o, lane, op.output) = any ? 0 : 1;
        }
        break;
      case OpKind::Init:
        for (auto lane : op.lanes) state.cell(o, lane, op.output) = 1;
        break;
      case OpKind::Write:
        for (std::size_t k = 0; k < op.lanes.size(); ++k)
          state.cell(o, op.lanes[k], op.output) = op.values[k] ? 1 : 0;
        break;
      case OpKind::Read:
        break;
    }
  }

  CrossbarState exec(CrossbarState state, const MicroOp& op) const {
    apply(state, op);
    return state;
  }

 private:
  EngineConfig cfg_;
};

/// Sets every named (lane, line) cell to 1 in a single cycle.
inline CrossbarState init_lines(CrossbarState state, Orientation o,
                                std::span<const std::size_t> lines,
                                std::span<const std::size_t> lanes) {
  if (lanes.empty()) throw InputError("init: empty lane mask");
  if (lines.empty()) throw InputError("init: no lines");
  for (auto l : lines) detail::check_line(l, state.side(), "line");
  for (auto l : lanes) detail::check_line(l, state.side(), "lane");
  for (auto lane : lanes)
    for (auto line : lines) state.cell(o, lane, line) = 1;
  return state;
}

inline std::size_t cycle_count(std::span<const MicroOp> trace) {
  return trace.size();
}

// ---------------------------------------------------------------------------
// Text form, one op per line:
//   NOR row in=0,1 out=2 lanes=0-8
//   INIT col out=4 lanes=3
//   WRITE row out=7 lanes=0,1 values=1,0
//   READ row in=3 lanes=0
// Index lists are comma-separated; "a-b" denotes an inclusive range.

inline std::string format_index_list(std::span<const std::size_t> v) {
  std::string s;
  std::size_t k = 0;
  while (k < v.size()) {
    std::size_t e = k;
    while (e + 1 < v.size() && v[e + 1] == v[e] + 1) ++e;
    if (!s.empty()) s += ',';
    s += std::to_string(v[k]);
    if (e > k + 1) {
      s += '-';
      s += std::to_string(v[e]);
    } else if (e == k + 1) {
      s += ',';
      s += std::to_string(v[e]);
    }
    k = e + 1;
  }
  return s;
}

inline std::vector<std::size_t> parse_index_list(std::string_view s) {
  std::vector<std::size_t> out;
  auto num = [&](std::string_view t) -> std::size_t {
    if (t.empty() || t.find_first_not_of("0123456789") != std::string_view::npos)
      throw InputError("bad index '" + std::string(t) + "'");
    return std::stoull(std::string(t));
  };
  while (!s.empty()) {
    auto comma = s.find(',');
    auto tok = s.substr(0, comma);
    auto dash = tok.find('-');
    if (dash == std::string_view::npos) {
      out.push_back(num(tok));
    } else {
      auto a = num(tok.substr(0, dash)), b = num(tok.substr(dash + 1));
      if (b < a) throw InputError("bad index range '" + std::string(tok) + "'");
      for (auto x = a; x <= b; ++x) out.push_back(x);
    }
    if (comma == std::string_view::npos) break;
    s.remove_prefix(comma + 1);
  }
  return out;
}

inline std::string to_string(const MicroOp& op) {
  std::string s = to_string(op.kind);
  s += ' ';
  s += to_string(op.orientation);
  if (op.kind == OpKind::Nor || op.kind == OpKind::Read)
    s += " in=" + format_index_list(op.inputs);
  if (op.kind != OpKind::Read) s += " out=" + std::to_string(op.output);
  s += " lanes=" + format_index_list(op.lanes);
  if (op.kind == OpKind::Write) {
    s += " values=";
    for (std::size_t k = 0; k < op.values.size(); ++k)
      s += (k ? "," : "") + std::to_string(int(op.values[k]));
  }
  return s;
}

inline MicroOp parse_micro_op(std::string_view text) {
  std::istringstream is{std::string(text)};
  std::string kind, orient, tok;
  if (!(is >> kind >> orient)) throw InputError("micro-op: missing fields");
  MicroOp op;
  if (kind == "NOR") op.kind = OpKind::Nor;
  else if (kind == "INIT") op.kind = OpKind::Init;
  else if (kind == "READ") op.kind = OpKind::Read;
  else if (kind == "WRITE") op.kind = OpKind::Write;
  else throw InputError("micro-op: unknown kind '" + kind + "'");
  if (orient == "row") op.orientation = Orientation::InRow;
  else if (orient == "col") op.orientation = Orientation::InColumn;
  else throw InputError("micro-op: unknown orientation '" + orient + "'");
  bool haveOut = false, haveLanes = false;
  while (is >> tok) {
    auto eq = tok.find('=');
    if (eq == std::string::npos) throw InputError("micro-op: bad field '" + tok + "'");
    auto key = tok.substr(0, eq);
    auto val = std::string_view(tok).substr(eq + 1);
    if (key == "in") op.inputs = parse_index_list(val);
    else if (key == "out") {
      auto v = parse_index_list(val);
      if (v.size() != 1) throw InputError("micro-op: out takes one index");
      op.output = v[0];
      haveOut = true;
    } else if (key == "lanes") {
      op.lanes = parse_index_list(val);
      haveLanes = true;
    } else if (key == "values") {
      for (auto x : parse_index_list(val)) {
        if (x > 1) throw InputError("micro-op: values must be 0/1");
        op.values.push_back(static_cast<std::uint8_t>(x));
      }
    } else {
      throw InputError("micro-op: unknown field '" + key + "'");
    }
  }
  if (!haveLanes || (op.kind != OpKind::Read && !haveOut))
    throw InputError("micro-op: missing out/lanes");
  return op;
}

}  // namespace diagecc
