#pragma once

// Diagonal parity code over one m x m block.
//
// Each block carries 2m check bits: the parity of every wrap-around leading
// diagonal and of every counter diagonal. A single flipped data bit sets one
// bit in each half of the syndrome; a flipped check bit sets exactly one bit
// in one half.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "diagecc/bits.hpp"
#include "diagecc/core.hpp"

namespace diagecc {

struct BlockParity {
  BitVec leading;
  BitVec counter;

  BlockParity() = default;
  explicit BlockParity(std::size_t m) : leading(m, 0), counter(m, 0) {}

  std::size_t size() const { return leading.size(); }
  BitVec& bank(Bank b) { return b == Bank::Leading ? leading : counter; }
  const BitVec& bank(Bank b) const { return b == Bank::Leading ? leading : counter; }

  friend bool operator==(const BlockParity&, const BlockParity&) = default;
};

/// Computed parity XOR stored parity.
struct Syndrome : BlockParity {
  using BlockParity::BlockParity;

  bool is_zero() const {
    for (auto b : leading) if (b) return false;
    for (auto b : counter) if (b) return false;
    return true;
  }
};

struct Clean {
  friend bool operator==(const Clean&, const Clean&) = default;
};
struct DataError {
  std::size_t i = 0, j = 0;
  friend bool operator==(const DataError&, const DataError&) = default;
};
struct CheckBitError {
  Bank bank = Bank::Leading;
  std::size_t idx = 0;
  friend bool operator==(const CheckBitError&, const CheckBitError&) = default;
};
struct Uncorrectable {
  friend bool operator==(const Uncorrectable&, const Uncorrectable&) = default;
};

using Diagnosis = std::variant<Clean, DataError, CheckBitError, Uncorrectable>;

inline bool is_correctable(const Diagnosis& d) {
  return std::holds_alternative<DataError>(d) ||
         std::holds_alternative<CheckBitError>(d);
}

inline std::string to_string(const Diagnosis& d) {
  if (std::holds_alternative<Clean>(d)) return "clean";
  if (auto* e = std::get_if<DataError>(&d))
    return "data(" + std::to_string(e->i) + "," + std::to_string(e->j) + ")";
  if (auto* c = std::get_if<CheckBitError>(&d))
    return std::string("check(") + to_string(c->bank) + "," +
           std::to_string(c->idx) + ")";
  return "uncorrectable";
}

namespace detail {
inline void require_odd_block(std::size_t m) {
  if (m < 3 || m % 2 == 0)
    throw InputError("block size must be odd and >= 3 (m=" + std::to_string(m) + ")");
}
}  // namespace detail

inline BlockParity encode_block(const BitSquare& block) {
  const std::size_t m = block.side();
  detail::require_odd_block(m);
  BlockParity p(m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      const auto v = block.at(i, j);
      p.leading[(i + j) % m] ^= v;
      p.counter[(i + m - j) % m] ^= v;
    }
  return p;
}

struct CellUpdate {
  std::size_t i = 0, j = 0;
  std::uint8_t oldBit = 0, newBit = 0;
};

/// Cancels the old bits and adds the new ones. Throws InvariantError if two
/// updates land on the same diagonal of either bank; a single parallel MAGIC
/// op can never produce that.
inline BlockParity update_parity(BlockParity parity,
                                 std::span<const CellUpdate> updates) {
  const std::size_t m = parity.size();
  std::vector<std::uint8_t> seenL(m, 0), seenC(m, 0);
  for (const auto& u : updates) {
    const auto dl = leading_diag(u.i, u.j, m);
    const auto dc = counter_diag(u.i, u.j, m);
    if (seenL[dl]++ || seenC[dc]++)
      throw InvariantError("update_parity: two updates on one diagonal "
                           "(cell " + std::to_string(u.i) + "," +
                           std::to_string(u.j) + ")");
    const std::uint8_t delta = (u.oldBit ^ u.newBit) & 1u;
    parity.leading[dl] ^= delta;
    parity.counter[dc] ^= delta;
  }
  return parity;
}

inline Syndrome compute_syndrome(const BitSquare& block, const BlockParity& stored) {
  if (stored.leading.size() != block.side() || stored.counter.size() != block.side())
    throw InputError("compute_syndrome: parity size does not match block");
  const auto computed = encode_block(block);
  Syndrome s(block.side());
  for (std::size_t d = 0; d < block.side(); ++d) {
    s.leading[d] = computed.leading[d] ^ stored.leading[d];
    s.counter[d] = computed.counter[d] ^ stored.counter[d];
  }
  return s;
}

inline Diagnosis decode_syndrome(const Syndrome& s) {
  std::size_t popL = 0, popC = 0, dL = 0, dC = 0;
  for (std::size_t d = 0; d < s.leading.size(); ++d)
    if (s.leading[d]) ++popL, dL = d;
  for (std::size_t d = 0; d < s.counter.size(); ++d)
    if (s.counter[d]) ++popC, dC = d;
  if (popL == 0 && popC == 0) return Clean{};
  if (popL == 1 && popC == 1) {
    // Even m has no unique intersection; treat as undecodable.
    if (s.leading.size() % 2 == 0) return Uncorrectable{};
    auto [i, j] = cell_from_diags(dL, dC, s.leading.size());
    return DataError{i, j};
  }
  if (popL == 1 && popC == 0) return CheckBitError{Bank::Leading, dL};
  if (popL == 0 && popC == 1) return CheckBitError{Bank::Counter, dC};
  return Uncorrectable{};
}

/// Flips the diagnosed data bit or stored check bit in place.
inline void apply_correction_in_place(BitSquare& block, BlockParity& stored,
                                      const Diagnosis& diag) {
  if (auto* e = std::get_if<DataError>(&diag)) {
    if (e->i >= block.side() || e->j >= block.side())
      throw InputError("apply_correction: cell outside block");
    block.flip(e->i, e->j);
  } else if (auto* c = std::get_if<CheckBitError>(&diag)) {
    auto& bank = stored.bank(c->bank);
    if (c->idx >= bank.size()) throw InputError("apply_correction: bad check-bit index");
    bank[c->idx] ^= 1u;
  } else {
    throw InputError("apply_correction: diagnosis " + to_string(diag) +
                     " is not correctable");
  }
}

struct CorrectedBlock {
  BitSquare block;
  BlockParity stored;
};

inline CorrectedBlock apply_correction(BitSquare block, BlockParity stored,
                                       const Diagnosis& diag) {
  apply_correction_in_place(block, stored, diag);
  return {std::move(block), std::move(stored)};
}

}  // namespace diagecc
