#pragma once

// Cycle bookkeeping: latency constants, per-unit reservation tables and the
// line-oriented event log.

#include <cstddef>
#include <cstdint>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "diagecc/core.hpp"

namespace diagecc {

struct TimingModel {
  std::uint32_t xor3Cycles = 8;
  std::uint32_t copyCycles = 1;
  std::uint32_t writebackCycles = 1;
  std::uint32_t controllerReadCycles = 1;
  std::uint32_t correctionWriteCycles = 1;
  std::uint32_t zeroCompareCycles = 1;

  void validate() const {
    if (!xor3Cycles || !copyCycles || !writebackCycles || !controllerReadCycles ||
        !correctionWriteCycles || !zeroCompareCycles)
      throw InputError("timing: every latency must be >= 1 cycle");
  }

  friend bool operator==(const TimingModel&, const TimingModel&) = default;
};

/// Levels of a base-3 reduction tree over `inputs` vectors (15 -> 5 -> 2 -> 1).
inline std::uint32_t xor3_tree_levels(std::size_t inputs) {
  std::uint32_t levels = 0;
  while (inputs > 1) {
    inputs = (inputs + 2) / 3;
    ++levels;
  }
  return levels;
}

struct Event {
  std::uint64_t cycle = 0;
  std::uint32_t len = 1;
  std::string unit;
  std::string action;
  std::string operands;

  std::uint64_t end() const { return cycle + len; }
  friend bool operator==(const Event&, const Event&) = default;
};

/// One event per line: `<cycle> <unit> <action> len=<cycles> [operands...]`.
inline std::string to_string(const Event& e) {
  std::string s = std::to_string(e.cycle) + ' ' + e.unit + ' ' + e.action +
                  " len=" + std::to_string(e.len);
  if (!e.operands.empty()) s += ' ' + e.operands;
  return s;
}

inline Event parse_event(const std::string& line) {
  std::istringstream is(line);
  Event e;
  std::string len;
  if (!(is >> e.cycle >> e.unit >> e.action >> len) || len.rfind("len=", 0) != 0)
    throw InputError("event: malformed record '" + line + "'");
  try {
    e.len = static_cast<std::uint32_t>(std::stoul(len.substr(4)));
  } catch (const std::exception&) {
    throw InputError("event: bad len in '" + line + "'");
  }
  std::getline(is >> std::ws, e.operands);
  return e;
}

inline void write_events(std::ostream& os, const std::vector<Event>& events) {
  for (const auto& e : events) os << to_string(e) << '\n';
}

/// Busy map per unit. A reservation claims a half-open cycle window.
class ReservationTable {
 public:
  explicit ReservationTable(std::size_t units = 0) : busy_(units) {}

  std::size_t units() const { return busy_.size(); }

  bool is_free(std::size_t unit, std::uint64_t start, std::uint64_t len) const {
    const auto& b = busy_[unit];
    for (std::uint64_t c = start; c < start + len; ++c)
      if (c < b.size() && b[c]) return false;
    return true;
  }

  void reserve(std::size_t unit, std::uint64_t start, std::uint64_t len) {
    auto& b = busy_[unit];
    if (b.size() < start + len) b.resize(start + len, false);
    for (std::uint64_t c = start; c < start + len; ++c) {
      if (b[c])
        throw InvariantError("unit " + std::to_string(unit) +
                             " double-booked at cycle " + std::to_string(c));
      b[c] = true;
    }
  }

  /// First cycle >= `from` with the whole window free.
  std::uint64_t first_free(std::size_t unit, std::uint64_t from,
                           std::uint64_t len) const {
    while (!is_free(unit, from, len)) ++from;
    return from;
  }

  std::uint64_t horizon() const {
    std::uint64_t h = 0;
    for (const auto& b : busy_)
      for (std::uint64_t c = b.size(); c > h; --c)
        if (b[c - 1]) {
          h = c;
          break;
        }
    return h;
  }

 private:
  std::vector<std::vector<bool>> busy_;
};

}  // namespace diagecc
