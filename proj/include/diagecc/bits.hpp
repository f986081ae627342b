#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "diagecc/core.hpp"

namespace diagecc {

using BitVec = std::vector<std::uint8_t>;

/// Dense square bit matrix, row-major, one byte per bit.
class BitSquare {
 public:
  BitSquare() = default;
  explicit BitSquare(std::size_t side, std::uint8_t fill = 0)
      : side_(side), bits_(side * side, fill) {}

  std::size_t side() const { return side_; }

  std::uint8_t at(std::size_t r, std::size_t c) const {
    return bits_[r * side_ + c];
  }
  std::uint8_t& at(std::size_t r, std::size_t c) { return bits_[r * side_ + c]; }

  void flip(std::size_t r, std::size_t c) { bits_[r * side_ + c] ^= 1u; }

  BitSquare transposed() const {
    BitSquare t(side_);
    for (std::size_t r = 0; r < side_; ++r)
      for (std::size_t c = 0; c < side_; ++c) t.at(c, r) = at(r, c);
    return t;
  }

  const BitVec& raw() const { return bits_; }
  BitVec& raw() { return bits_; }

  friend bool operator==(const BitSquare&, const BitSquare&) = default;

 private:
  std::size_t side_ = 0;
  BitVec bits_;
};

}  // namespace diagecc
