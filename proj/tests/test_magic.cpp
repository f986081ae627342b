#include <gtest/gtest.h>

#include <random>

#include "diagecc/magic.hpp"

using namespace diagecc;

namespace {

CrossbarState random_state(const Geometry& g, std::mt19937_64& rng) {
  CrossbarState s(g);
  for (auto& b : s.bits().raw()) b = rng() & 1u;
  return s;
}

}  // namespace

TEST(Nor, TruthTable) {
  const Engine eng;
  const Geometry g{3, 3};
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      CrossbarState s(g);
      s.at(0, 0) = a;
      s.at(0, 1) = b;
      s = init_lines(s, Orientation::InRow, std::vector<std::size_t>{2}, std::vector<std::size_t>{0});
      s = eng.exec(s, MicroOp::nor(Orientation::InRow, {0, 1}, 2, {0}));
      EXPECT_EQ(s.at(0, 2), (a | b) ? 0 : 1);
    }
}

TEST(Nor, SingleInputIsNot) {
  const Engine eng;
  for (int a = 0; a < 2; ++a) {
    CrossbarState s(Geometry{3, 3});
    s.at(1, 0) = a;
    s.at(1, 2) = 1;
    s = eng.exec(s, MicroOp::nor(Orientation::InRow, {0}, 2, {1}));
    EXPECT_EQ(s.at(1, 2), a ? 0 : 1);
  }
}

TEST(Nor, RowParallelLanes) {
  CrossbarState s(Geometry{3, 3});
  const int in[3][2] = {{0, 0}, {0, 1}, {1, 1}};
  for (std::size_t r = 0; r < 3; ++r) {
    s.at(r, 0) = in[r][0];
    s.at(r, 1) = in[r][1];
    s.at(r, 2) = 1;
  }
  s = Engine{}.exec(s, MicroOp::nor(Orientation::InRow, {0, 1}, 2, {0, 1, 2}));
  EXPECT_EQ(s.at(0, 2), 1);
  EXPECT_EQ(s.at(1, 2), 0);
  EXPECT_EQ(s.at(2, 2), 0);
}

TEST(Nor, Errors) {
  const Engine eng;
  CrossbarState s(Geometry{9, 3});
  EXPECT_THROW(eng.exec(s, MicroOp::nor(Orientation::InRow, {0, 1}, 2, {0})), InputError)
      << "uninitialized output";
  EXPECT_THROW(eng.exec(s, MicroOp::nor(Orientation::InRow, {0, 1, 3}, 2, {0})), InputError)
      << "fan-in";
  EXPECT_THROW(eng.exec(s, MicroOp::nor(Orientation::InRow, {0, 9}, 2, {0})), InputError);
  EXPECT_THROW(eng.exec(s, MicroOp::nor(Orientation::InRow, {0, 2}, 2, {0})), InputError);
  EXPECT_THROW(eng.exec(s, MicroOp::nor(Orientation::InRow, {0}, 2, {})), InputError);
  const Engine loose(EngineConfig{3, false});
  EXPECT_NO_THROW(loose.exec(s, MicroOp::nor(Orientation::InRow, {0, 1, 3}, 2, {0})));
  EXPECT_THROW(Engine(EngineConfig{0, true}), InputError);
}

TEST(Init, SetsNamedCells) {
  CrossbarState s(Geometry{9, 3});
  s = init_lines(s, Orientation::InRow, std::vector<std::size_t>{5}, all_lanes(9));
  for (std::size_t r = 0; r < 9; ++r) EXPECT_EQ(s.at(r, 5), 1);
  EXPECT_EQ(s.at(0, 4), 0);
  EXPECT_NO_THROW(Engine{}.exec(s, MicroOp::nor(Orientation::InRow, {0}, 5, all_lanes(9))));
  EXPECT_THROW(init_lines(s, Orientation::InRow, std::vector<std::size_t>{5}, std::vector<std::size_t>{}),
               InputError);
  EXPECT_THROW(init_lines(s, Orientation::InRow, std::vector<std::size_t>{9}, all_lanes(9)),
               InputError);
}

TEST(CycleCount, OnePerOp) {
  EXPECT_EQ(cycle_count({}), 0u);
  std::vector<MicroOp> ops(3, MicroOp::init(Orientation::InRow, 0, {0}));
  EXPECT_EQ(cycle_count(ops), 3u);
}

TEST(Properties, LocalityAndParallelEquivalence) {
  std::mt19937_64 rng(11);
  const Geometry g{9, 3};
  const Engine eng(EngineConfig{2, false});
  for (int trial = 0; trial < 300; ++trial) {
    const auto pre = random_state(g, rng);
    const auto o = (rng() & 1) ? Orientation::InRow : Orientation::InColumn;
    const std::size_t out = rng() % 9;
    std::size_t a = rng() % 9, b = rng() % 9;
    while (a == out) a = (a + 1) % 9;
    while (b == out) b = (b + 1) % 9;
    std::vector<std::size_t> lanes;
    for (std::size_t l = 0; l < 9; ++l)
      if (rng() & 1) lanes.push_back(l);
    if (lanes.empty()) lanes.push_back(0);
    const auto op = MicroOp::nor(o, {a, b}, out, lanes);
    const auto post = eng.exec(pre, op);

    for (std::size_t lane = 0; lane < 9; ++lane)
      for (std::size_t line = 0; line < 9; ++line) {
        const bool active = line == out && std::find(lanes.begin(), lanes.end(), lane) != lanes.end();
        if (!active) {
          ASSERT_EQ(post.cell(o, lane, line), pre.cell(o, lane, line));
        }
      }

    auto serial = pre;
    for (auto l : lanes) {
      auto single = pre;
      single = eng.exec(single, MicroOp::nor(o, {a, b}, out, {l}));
      serial.cell(o, l, out) = single.cell(o, l, out);
    }
    ASSERT_EQ(serial, post);
  }
}

TEST(Properties, TransposeSymmetry) {
  std::mt19937_64 rng(12);
  const Geometry g{9, 3};
  const Engine eng(EngineConfig{2, false});
  for (int trial = 0; trial < 200; ++trial) {
    const auto x = random_state(g, rng);
    const std::size_t out = rng() % 9;
    const std::size_t a = (out + 1 + rng() % 8) % 9;
    std::vector<std::size_t> lanes{rng() % 9, (rng() % 4) + 5};
    std::sort(lanes.begin(), lanes.end());
    lanes.erase(std::unique(lanes.begin(), lanes.end()), lanes.end());
    const auto colResult = eng.exec(x, MicroOp::nor(Orientation::InColumn, {a}, out, lanes));
    const auto rowResult = eng.exec(x.transposed(), MicroOp::nor(Orientation::InRow, {a}, out, lanes));
    ASSERT_EQ(colResult, rowResult.transposed());
  }
}

TEST(TextFormat, RoundTrip) {
  const std::vector<MicroOp> ops = {
      MicroOp::nor(Orientation::InRow, {0, 1}, 2, all_lanes(9)),
      MicroOp::init(Orientation::InColumn, 4, {3}),
      MicroOp::write(Orientation::InRow, 7, {0, 1, 5}, {1, 0, 1}),
  };
  for (const auto& op : ops) EXPECT_EQ(parse_micro_op(to_string(op)), op);
  EXPECT_EQ(to_string(ops[0]), "NOR row in=0,1 out=2 lanes=0-8");
  EXPECT_THROW(parse_micro_op("XOR row in=0 out=1 lanes=0"), InputError);
  EXPECT_THROW(parse_micro_op("NOR diag in=0 out=1 lanes=0"), InputError);
  EXPECT_THROW(parse_micro_op("NOR row in=0 out=1 lanes=3-1"), InputError);
}
