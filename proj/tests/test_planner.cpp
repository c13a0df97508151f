#include <gtest/gtest.h>

#include "sgnav/planner.hpp"

using namespace sgnav;

namespace {
Raster<std::uint8_t> open_raster(int w, int h) { return Raster<std::uint8_t>(w, h, 1); }
}  // namespace

TEST(Fmm, GoalIsZero) {
  auto t = open_raster(10, 10);
  auto f = fmm_distance_field(t, {0, 0}, {0.05});
  EXPECT_EQ(f.at({0, 0}), 0.0);
}

TEST(Fmm, EuclideanOnEmptyGrid) {
  auto t = open_raster(10, 10);
  auto f = fmm_distance_field(t, {0, 0}, {0.05});
  EXPECT_NEAR(f.at({3, 4}), 5.0 * 0.05, 0.05 * 5.0 * 0.05);
}

TEST(Fmm, WalledOffIsInfinite) {
  auto t = open_raster(10, 10);
  for (int r = 0; r < 10; ++r) t.at(r, 5) = 0;
  auto f = fmm_distance_field(t, {0, 0});
  EXPECT_TRUE(std::isinf(f.at({0, 9})));
  EXPECT_TRUE(std::isinf(f.at({0, 5})));
}

TEST(Fmm, SnapsGoalWithinRadius) {
  auto t = open_raster(20, 20);
  t.at(5, 5) = 0;
  auto f = fmm_distance_field(t, {5, 5}, {0.05, 0.5});
  ASSERT_EQ(f.goals.size(), 1u);
  EXPECT_NE(f.goals[0], (Cell{5, 5}));
  auto blocked = Raster<std::uint8_t>(30, 30, 0);
  blocked.at(29, 29) = 1;
  EXPECT_THROW(fmm_distance_field(blocked, {0, 0}, {0.05, 0.5}), UnreachableError);
}

TEST(Fmm, BoundedByEuclideanAndDijkstra) {
  for (int seed = 0; seed < 10; ++seed) {
    Rng rng(seed + 100);
    Raster<std::uint8_t> t(32, 32, 1);
    for (auto& v : t.data) v = rng.bernoulli(0.25) ? 0 : 1;
    Cell g{rng.uniform_int(0, 31), rng.uniform_int(0, 31)};
    t[g] = 1;
    auto f = fmm_distance_field(t, g);
    auto d = dijkstra8(t, g);
    for (int r = 0; r < 32; ++r)
      for (int c = 0; c < 32; ++c) {
        double fv = f.at({r, c}), dv = d.at(r, c);
        ASSERT_EQ(std::isinf(fv), std::isinf(dv));
        if (std::isinf(fv)) continue;
        ASSERT_GE(fv + 1e-9, std::hypot(r - g.r, c - g.c));
        ASSERT_LE(fv, dv * 1.01 + 1e-9);
      }
  }
}

TEST(Fmm, EarlyStopKeepsFinalizedValues) {
  auto t = open_raster(40, 40);
  auto full = fmm_distance_field(t, {0, 0});
  FmmOptions o;
  o.stop_at = Cell{10, 10};
  auto part = fmm_distance_field(t, {0, 0}, o);
  EXPECT_DOUBLE_EQ(part.at({10, 10}), full.at({10, 10}));
  EXPECT_TRUE(std::isinf(part.at({39, 39})));
  auto p1 = descend(full, {10, 10});
  auto p2 = descend(part, {10, 10});
  EXPECT_EQ(p1, p2);
}

TEST(Fmm, MultiSourceTakesNearest) {
  auto t = open_raster(30, 1);
  auto f = fmm_multi_source(t, {{0, 0}, {0, 29}});
  EXPECT_DOUBLE_EQ(f.at({0, 5}), 5.0);
  EXPECT_DOUBLE_EQ(f.at({0, 25}), 4.0);
}

TEST(Waypoints, StartIsGoal) {
  auto t = open_raster(5, 5);
  auto f = fmm_distance_field(t, {2, 2});
  auto w = extract_waypoints(f, {2, 2});
  ASSERT_EQ(w.size(), 1u);
  EXPECT_EQ(w[0], (Cell{2, 2}));
}

TEST(Waypoints, StraightCorridorSubsamplesToTwelve) {
  Raster<std::uint8_t> t(40, 1, 1);
  auto f = fmm_distance_field(t, {0, 0});
  auto dense = descend(f, {0, 39});
  ASSERT_EQ(dense.size(), 40u);
  auto w = extract_waypoints(f, {0, 39}, 12);
  ASSERT_EQ(w.size(), 12u);
  EXPECT_EQ(w.front(), (Cell{0, 39}));
  EXPECT_EQ(w.back(), (Cell{0, 0}));
  // round(i*39/11)
  std::vector<int> cols;
  for (const Cell& k : w) cols.push_back(k.c);
  std::vector<int> expect;
  for (int i = 0; i < 12; ++i) expect.push_back(39 - static_cast<int>(std::lround(i * 39.0 / 11.0)));
  EXPECT_EQ(cols, expect);
}

TEST(Waypoints, LShapedCorridorStrictlyDecreasing) {
  Raster<std::uint8_t> t(20, 20, 0);
  for (int c = 0; c < 20; ++c) t.at(0, c) = 1;
  for (int r = 0; r < 20; ++r) t.at(r, 19) = 1;
  auto f = fmm_distance_field(t, {19, 19});
  auto dense = descend(f, {0, 0});
  for (std::size_t i = 1; i < dense.size(); ++i) {
    ASSERT_LT(f.at(dense[i]), f.at(dense[i - 1]));
    ASSERT_TRUE(t[dense[i]]);
  }
  auto w = extract_waypoints(f, {0, 0});
  for (std::size_t i = 1; i < w.size(); ++i) ASSERT_LT(f.at(w[i]), f.at(w[i - 1]));
}

TEST(Waypoints, InfiniteStartThrows) {
  Raster<std::uint8_t> t(10, 1, 1);
  t.at(0, 5) = 0;
  auto f = fmm_distance_field(t, {0, 0});
  EXPECT_THROW(extract_waypoints(f, {0, 9}), UnreachableError);
}

TEST(NextAction, Cases) {
  AgentPose p{0, 0, 0, 0, 0};
  EXPECT_EQ(next_action(p, {1, 0}), Action::MoveForward);
  EXPECT_EQ(next_action(p, {0, 1}), Action::TurnLeft);
  EXPECT_EQ(next_action(p, {0, -1}), Action::TurnRight);
  EXPECT_EQ(next_action(p, {-1, 0}), Action::TurnLeft);
  // 10 degrees off stays forward
  EXPECT_EQ(next_action(p, {std::cos(0.17), std::sin(0.17)}), Action::MoveForward);
  EXPECT_EQ(next_action_to_goal(p, {0.05, 0}, true, 0.05, 0.1), Action::Stop);
  EXPECT_EQ(next_action_to_goal(p, {0.05, 0}, false, 0.05, 0.1), Action::MoveForward);
}

namespace {

// Flat floor at z=0 with a 0.15 m staircase running along +x from column 20.
OccupancyGrid staircase(int steps) {
  OccupancyGrid g(20 + steps * 5 + 40, 30, 0.05);
  for (int r = 0; r < 30; ++r)
    for (int c = 0; c < g.width(); ++c) {
      float h = 0.0f;
      if (c >= 20) h = 0.15f * std::min(steps, (c - 20) / 5 + 1);
      g.set({r, c}, CellState::Free, h);
    }
  return g;
}

}  // namespace

TEST(Stairs, FrontiersKeepInactive) {
  auto g = staircase(16);
  auto L = compute_layers(g);
  StairClimbState s;
  s.up_list.push_back({{2.0, 0.75}, {0.5, 0.5}, 1.0, true, {10, 20}, true});
  AgentPose p{0.2, 0.75, 0, 0, 0};
  auto u = update_stair_state(s, g, L, p, 3, 0, {});
  EXPECT_EQ(u.state.stage, StairStage::Inactive);
  EXPECT_FALSE(u.goal);
}

TEST(Stairs, ZeroFrontiersApproachLowestPoint) {
  auto g = staircase(16);
  auto L = compute_layers(g);
  StairParams sp;
  // detection box over the stair run
  auto cand = classify_stair(g, L, {1.0 + 2.0, 0.75}, {2.0, 0.5}, 0.0, sp);
  ASSERT_TRUE(cand);
  EXPECT_TRUE(cand->up);
  ASSERT_TRUE(cand->has_entrance);
  EXPECT_NEAR(g.height_at(cand->entrance), 0.15, 1e-6);
  StairClimbState s;
  s.up_list.push_back(*cand);
  AgentPose p{0.2, 0.75, 0, 0, 0};
  auto u = update_stair_state(s, g, L, p, 0, 0, sp);
  EXPECT_EQ(u.state.stage, StairStage::ApproachEntrance);
  ASSERT_TRUE(u.goal);
  EXPECT_EQ(*u.goal, cand->entrance);
}

TEST(Stairs, NothingLeftIsExhaustion) {
  auto g = staircase(4);
  auto L = compute_layers(g);
  auto u = update_stair_state({}, g, L, {0.2, 0.75, 0, 0, 0}, 0, 0, {});
  EXPECT_TRUE(u.exhausted);
}

TEST(Stairs, ClimbGoalsAscendMonotonically) {
  auto g = staircase(16);
  auto L = compute_layers(g);
  Cell cur{15, 20};
  double last = g.height_at(cur);
  int guard = 0;
  while (guard++ < 50) {
    auto goal = climb_local_goal(g, L, cur, true, 2.0);
    ASSERT_TRUE(goal);
    ASSERT_TRUE(L.traversable[*goal]);
    double h = g.height_at(*goal);
    ASSERT_GE(h, last);
    if (*goal == cur) break;
    last = h;
    cur = *goal;
  }
  EXPECT_NEAR(last, 2.4, 1e-5);
  // at the top the sweep over the upper plane passes the floor-point threshold
  VisibilitySweep sweep;
  for (int r = 0; r < 30; ++r)
    for (int c = 20 + 80; c < g.width(); ++c) sweep.cells.push_back({{r, c}, CellState::Free, g.height_at(Cell{r, c})});
  int pts = count_floor_points(sweep, 2.4, 0.1);
  EXPECT_GT(pts, 800);
  StairClimbState s;
  s.stage = StairStage::Climbing;
  s.climb_start_z = 0.0;
  Vec2 at = g.cell_center(cur);
  auto u = update_stair_state(s, g, L, {at.x, at.y, 0, 2.4, 0}, 0, pts, {});
  EXPECT_EQ(u.state.stage, StairStage::Confirming);
}

TEST(Stairs, DownCandidateUsesHighestCell) {
  auto g = staircase(16);
  auto L = compute_layers(g);
  // seen from the upper level, base 2.4
  auto cand = classify_stair(g, L, {3.0, 0.75}, {2.0, 0.5}, 2.4, {});
  ASSERT_TRUE(cand);
  EXPECT_FALSE(cand->up);
  EXPECT_NEAR(g.height_at(cand->entrance), 2.4, 1e-5);
}
