#include <gtest/gtest.h>

#include <set>

#include "diagecc/core.hpp"

using namespace diagecc;

TEST(Diagonals, LeadingExamples) {
  EXPECT_EQ(leading_diag(0, 0, 3), 0u);
  EXPECT_EQ(leading_diag(2, 4, 5), 1u);
  EXPECT_EQ(leading_diag(14, 14, 15), 13u);
}

TEST(Diagonals, CounterExamples) {
  EXPECT_EQ(counter_diag(0, 0, 3), 0u);
  EXPECT_EQ(counter_diag(0, 1, 3), 2u);
  EXPECT_EQ(counter_diag(2, 4, 5), 3u);
}

TEST(Diagonals, OutOfRangeLocalCoordinatesThrow) {
  EXPECT_THROW(leading_diag(3, 0, 3), InputError);
  EXPECT_THROW(counter_diag(0, 5, 5), InputError);
}

TEST(Diagonals, CellFromDiagsExamples) {
  using Cell = std::pair<std::size_t, std::size_t>;
  for (std::size_t m : {3u, 5u, 15u}) EXPECT_EQ(cell_from_diags(0, 0, m), Cell(0, 0));
  // Oracle: scan the 3x3 block for the cell on leading 1 and counter 2.
  std::pair<std::size_t, std::size_t> found{99, 99};
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      if ((i + j) % 3 == 1 && (i + 3 - j) % 3 == 2) found = {i, j};
  EXPECT_EQ(found, (std::pair<std::size_t, std::size_t>(0, 1)));
  EXPECT_EQ(cell_from_diags(1, 2, 3), found);
}

TEST(Diagonals, RoundTripEveryOddBlockSize) {
  for (std::size_t m = 3; m <= 15; m += 2) {
    std::set<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j) {
        const auto dl = leading_diag(i, j, m), dc = counter_diag(i, j, m);
        pairs.insert({dl, dc});
        EXPECT_EQ(cell_from_diags(dl, dc, m), (std::pair<std::size_t, std::size_t>(i, j)));
      }
    EXPECT_EQ(pairs.size(), m * m) << "m=" << m;
  }
}

TEST(Diagonals, EvenBlockSizeCollides) {
  for (std::size_t m : {4u, 6u}) {
    bool collision = false;
    std::set<std::pair<std::size_t, std::size_t>> seen;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j)
        collision |= !seen.insert({(i + j) % m, (i + m - j) % m}).second;
    EXPECT_TRUE(collision);
    EXPECT_THROW(cell_from_diags(0, 0, m), InputError);
  }
}

TEST(Diagonals, DistinctCellsShareAtMostOneDiagonal) {
  for (std::size_t m = 3; m <= 9; m += 2)
    for (std::size_t a = 0; a < m * m; ++a)
      for (std::size_t b = a + 1; b < m * m; ++b) {
        const auto ia = a / m, ja = a % m, ib = b / m, jb = b % m;
        const int shared = (leading_diag(ia, ja, m) == leading_diag(ib, jb, m)) +
                           (counter_diag(ia, ja, m) == counter_diag(ib, jb, m));
        ASSERT_LE(shared, 1);
      }
}

TEST(Geometry, Validation) {
  EXPECT_NO_THROW(make_geometry(1020, 15));
  EXPECT_NO_THROW(make_geometry(9, 3));
  EXPECT_THROW(make_geometry(10, 3), InputError);
  EXPECT_THROW(make_geometry(8, 4), InputError);
  EXPECT_THROW(make_geometry(2, 1), InputError);
  EXPECT_THROW(make_geometry(3, 5), InputError);
  const Geometry g{1020, 15};
  EXPECT_EQ(g.blocks_per_side(), 68u);
  EXPECT_EQ(g.block_count(), 68u * 68u);
}

TEST(BlockDecompose, Examples) {
  const Geometry g{1020, 15};
  EXPECT_EQ(block_decompose({0, 0}, g), (BlockCoord{0, 0, 0, 0}));
  EXPECT_EQ(block_decompose({17, 31}, g), (BlockCoord{1, 2, 2, 1}));
  EXPECT_EQ(block_decompose({1019, 1019}, g), (BlockCoord{67, 67, 14, 14}));
  EXPECT_THROW(block_decompose({1020, 0}, g), InputError);
}

TEST(BlockDecompose, ReconstructsEveryCell) {
  const Geometry g{45, 15};
  for (std::size_t r = 0; r < g.n; ++r)
    for (std::size_t c = 0; c < g.n; ++c)
      ASSERT_EQ(block_decompose({r, c}, g).cell(g.m), (CellAddr{r, c}));
}
