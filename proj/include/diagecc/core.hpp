#pragma once

// Crossbar geometry and the per-block diagonal index arithmetic.
//
// An n x n crossbar is tiled by an imaginary grid of m x m blocks. Inside a
// block, cell (i, j) lies on exactly one leading diagonal (i + j) mod m and
// one counter diagonal (i - j) mod m. For odd m the pair of indices names the
// cell uniquely.

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>

namespace diagecc {

/// Raised when an input violates a documented precondition (bad geometry,
/// out-of-range index, malformed file).
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when an internal consistency check fails. Indicates a bug, not bad
/// input.
class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

enum class Bank : std::uint8_t { Leading = 0, Counter = 1 };

inline constexpr Bank kBanks[] = {Bank::Leading, Bank::Counter};

inline const char* to_string(Bank b) {
  return b == Bank::Leading ? "leading" : "counter";
}

struct Geometry {
  std::size_t n = 1020;
  std::size_t m = 15;

  std::size_t blocks_per_side() const { return n / m; }
  std::size_t block_count() const { return blocks_per_side() * blocks_per_side(); }

  void validate() const {
    if (m < 3 || n < m)
      throw InputError("geometry: need n >= m >= 3 (n=" + std::to_string(n) +
                       ", m=" + std::to_string(m) + ")");
    if (m % 2 == 0)
      throw InputError("geometry: block size m must be odd (m=" +
                       std::to_string(m) + ")");
    if (n % m != 0)
      throw InputError("geometry: m must divide n (n=" + std::to_string(n) +
                       ", m=" + std::to_string(m) + ")");
  }

  friend bool operator==(const Geometry&, const Geometry&) = default;
};

inline Geometry make_geometry(std::size_t n, std::size_t m) {
  Geometry g{n, m};
  g.validate();
  return g;
}

struct CellAddr {
  std::size_t row = 0;
  std::size_t col = 0;
  friend bool operator==(const CellAddr&, const CellAddr&) = default;
  friend auto operator<=>(const CellAddr&, const CellAddr&) = default;
};

struct BlockCoord {
  std::size_t blockRow = 0;
  std::size_t blockCol = 0;
  std::size_t localI = 0;
  std::size_t localJ = 0;

  CellAddr cell(std::size_t m) const {
    return {blockRow * m + localI, blockCol * m + localJ};
  }
  friend bool operator==(const BlockCoord&, const BlockCoord&) = default;
};

struct DiagIdx {
  Bank bank = Bank::Leading;
  std::size_t idx = 0;
  friend bool operator==(const DiagIdx&, const DiagIdx&) = default;
};

namespace detail {
inline void check_local(std::size_t i, std::size_t j, std::size_t m) {
  if (m == 0 || i >= m || j >= m)
    throw InputError("local coordinate (" + std::to_string(i) + "," +
                     std::to_string(j) + ") outside block of size " +
                     std::to_string(m));
}
}  // namespace detail

inline std::size_t leading_diag(std::size_t i, std::size_t j, std::size_t m) {
  detail::check_local(i, j, m);
  return (i + j) % m;
}

inline std::size_t counter_diag(std::size_t i, std::size_t j, std::size_t m) {
  detail::check_local(i, j, m);
  return (i + m - j) % m;
}

inline std::size_t diag_index(Bank bank, std::size_t i, std::size_t j,
                              std::size_t m) {
  return bank == Bank::Leading ? leading_diag(i, j, m) : counter_diag(i, j, m);
}

/// Multiplicative inverse of 2 modulo an odd m.
inline std::size_t inverse_of_two(std::size_t m) {
  if (m % 2 == 0) throw InputError("no inverse of 2 modulo even m");
  return (m + 1) / 2;
}

/// The unique local cell lying on leading diagonal `dL` and counter diagonal
/// `dC`. Requires odd m: for even m the two diagonals meet twice or never.
inline std::pair<std::size_t, std::size_t> cell_from_diags(std::size_t dL,
                                                           std::size_t dC,
                                                           std::size_t m) {
  if (m < 1 || m % 2 == 0)
    throw InputError("cell_from_diags: block size must be odd (m=" +
                     std::to_string(m) + ")");
  if (dL >= m || dC >= m)
    throw InputError("cell_from_diags: diagonal index out of range");
  const std::size_t inv2 = inverse_of_two(m);
  const std::size_t i = (inv2 * (dL + dC)) % m;
  const std::size_t j = (inv2 * (dL + m - dC)) % m;
  return {i, j};
}

inline BlockCoord block_decompose(CellAddr addr, const Geometry& geom) {
  if (addr.row >= geom.n || addr.col >= geom.n)
    throw InputError("cell (" + std::to_string(addr.row) + "," +
                     std::to_string(addr.col) + ") outside crossbar of side " +
                     std::to_string(geom.n));
  return {addr.row / geom.m, addr.col / geom.m, addr.row % geom.m,
          addr.col % geom.m};
}

}  // namespace diagecc
