#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <set>

#include "sgnav/gridmap.hpp"

using namespace sgnav;

namespace {

AgentPose pose_at(const OccupancyGrid& g, Cell k) {
  Vec2 p = g.cell_center(k);
  return {p.x, p.y, 0.0, 0.0, g.floor_id()};
}

void fill(OccupancyGrid& g, CellState s, float h = 0.0f) {
  for (int r = 0; r < g.height(); ++r)
    for (int c = 0; c < g.width(); ++c) g.set({r, c}, s, h);
}

}  // namespace

TEST(Integrate, EmptySweepIsIdentity) {
  OccupancyGrid g(10, 10, 0.05);
  integrate_observation(g, pose_at(g, {5, 5}), {});
  EXPECT_EQ(g.count(CellState::Unknown), 100u);
}

TEST(Integrate, SingleFreeCell) {
  OccupancyGrid g(10, 10, 0.05);
  integrate_observation(g, pose_at(g, {5, 5}), {{{{5, 5}, CellState::Free, 0.0f}}});
  EXPECT_EQ(g.count(CellState::Unknown), 99u);
  EXPECT_EQ(g.state(Cell{5, 5}), CellState::Free);
}

TEST(Integrate, LaterSweepOverridesFreeWithOccupied) {
  OccupancyGrid g(10, 10, 0.05);
  integrate_observation(g, pose_at(g, {1, 1}), {{{{5, 5}, CellState::Free, 0.0f}}});
  integrate_observation(g, pose_at(g, {1, 1}), {{{{5, 5}, CellState::Occupied, 1.0f}}});
  EXPECT_EQ(g.state(Cell{5, 5}), CellState::Occupied);
  EXPECT_FLOAT_EQ(g.height_at(Cell{5, 5}), 1.0f);
}

TEST(Integrate, OccupiedWinsInsideOneSweep) {
  OccupancyGrid g(10, 10, 0.05);
  VisibilitySweep s{{{{3, 3}, CellState::Occupied, 1.0f}, {{3, 3}, CellState::Free, 0.0f}}};
  integrate_observation(g, pose_at(g, {1, 1}), s);
  EXPECT_EQ(g.state(Cell{3, 3}), CellState::Occupied);
}

TEST(Integrate, PoseOutsideGridRejected) {
  OccupancyGrid g(10, 10, 0.05);
  AgentPose p{5.0, 5.0, 0, 0, 0};
  EXPECT_THROW(integrate_observation(g, p, {}), OutOfBoundsError);
}

TEST(Integrate, UnknownNeverReturns) {
  Rng rng(11);
  OccupancyGrid g(24, 24, 0.05);
  std::size_t unknown = g.count(CellState::Unknown);
  for (int t = 0; t < 50; ++t) {
    VisibilitySweep s;
    for (int i = 0; i < 20; ++i)
      s.cells.push_back({{rng.uniform_int(0, 23), rng.uniform_int(0, 23)},
                         rng.bernoulli(0.3) ? CellState::Occupied : CellState::Free, 0.0f});
    integrate_observation(g, pose_at(g, {12, 12}), s);
    std::size_t now = g.count(CellState::Unknown);
    ASSERT_LE(now, unknown);
    unknown = now;
  }
}

TEST(Frontiers, FullyKnownAndFullyUnknownHaveNone) {
  OccupancyGrid a(8, 8, 0.05);
  EXPECT_TRUE(detect_frontiers(a, 1).empty());
  fill(a, CellState::Free);
  EXPECT_TRUE(detect_frontiers(a, 1).empty());
}

TEST(Frontiers, ColumnBoundaryOracle) {
  OccupancyGrid g(5, 5, 0.05);
  for (int r = 0; r < 5; ++r)
    for (int c = 0; c <= 2; ++c) g.set({r, c}, CellState::Free, 0.0f);
  // brute force over all 25 cells
  std::vector<Cell> expect;
  for (int r = 0; r < 5; ++r) {
    for (int c = 0; c < 5; ++c) {
      if (g.state(Cell{r, c}) != CellState::Free) continue;
      bool adj = false;
      for (auto [dr, dc] : {std::pair{-1, 0}, {1, 0}, {0, -1}, {0, 1}}) {
        Cell n{r + dr, c + dc};
        if (g.in_bounds(n) && g.state(n) == CellState::Unknown) adj = true;
      }
      if (adj) expect.push_back({r, c});
    }
  }
  auto fs = detect_frontiers(g, 1);
  ASSERT_EQ(fs.size(), 1u);
  EXPECT_EQ(fs[0].cells, expect);
  ASSERT_EQ(expect.size(), 5u);
  for (const Cell& k : expect) EXPECT_EQ(k.c, 2);
  EXPECT_EQ(fs[0].representative, (Cell{2, 2}));
}

TEST(Frontiers, SoundAndCompleteOnRandomGrids) {
  for (int seed = 0; seed < 30; ++seed) {
    Rng rng(seed);
    OccupancyGrid g(32, 32, 0.05);
    for (int r = 0; r < 32; ++r)
      for (int c = 0; c < 32; ++c) {
        double u = rng.uniform();
        if (u < 0.45) g.set({r, c}, CellState::Free, 0.0f);
        else if (u < 0.6) g.set({r, c}, CellState::Occupied, 1.0f);
      }
    auto fs = detect_frontiers(g, 1);
    std::set<Cell> seen;
    for (std::size_t i = 0; i < fs.size(); ++i) {
      for (const Cell& k : fs[i].cells) {
        ASSERT_TRUE(is_frontier_cell(g, k));
        ASSERT_TRUE(seen.insert(k).second) << "cell in two frontiers";
      }
      // one 8-connected component
      std::set<Cell> members(fs[i].cells.begin(), fs[i].cells.end());
      std::set<Cell> reach{fs[i].cells.front()};
      std::vector<Cell> st{fs[i].cells.front()};
      while (!st.empty()) {
        Cell k = st.back();
        st.pop_back();
        for (int dr = -1; dr <= 1; ++dr)
          for (int dc = -1; dc <= 1; ++dc) {
            Cell n{k.r + dr, k.c + dc};
            if (members.count(n) && reach.insert(n).second) st.push_back(n);
          }
      }
      ASSERT_EQ(reach.size(), members.size());
      ASSERT_TRUE(members.count(fs[i].representative));
      if (i > 0) ASSERT_LT(fs[i - 1].representative, fs[i].representative);
    }
    for (int r = 0; r < 32; ++r)
      for (int c = 0; c < 32; ++c)
        if (is_frontier_cell(g, {r, c})) ASSERT_TRUE(seen.count({r, c}));
  }
}

TEST(Frontiers, MinSizeFiltersSmallClusters) {
  OccupancyGrid g(10, 10, 0.05);
  g.set({5, 5}, CellState::Free, 0.0f);
  EXPECT_EQ(detect_frontiers(g, 1).size(), 1u);
  EXPECT_TRUE(detect_frontiers(g, 4).empty());
}

TEST(Layers, FlatFloorHasNoWallsOrStairs) {
  OccupancyGrid g(8, 8, 0.05);
  fill(g, CellState::Free, 0.0f);
  auto L = compute_layers(g);
  for (std::size_t i = 0; i < L.gradient.data.size(); ++i) {
    EXPECT_EQ(L.gradient.data[i], 0.0f);
    EXPECT_EQ(L.wall.data[i], 0);
    EXPECT_EQ(L.traversable.data[i], 1);
    EXPECT_EQ(L.stair.data[i], 0);
  }
}

TEST(Layers, LedgeIsWallAndNotTraversable) {
  OccupancyGrid g(2, 1, 0.05);
  g.set({0, 0}, CellState::Free, 0.0f);
  g.set({0, 1}, CellState::Free, 1.5f);
  auto L = compute_layers(g);
  EXPECT_FLOAT_EQ(L.gradient.at(0, 0), 1.5f);
  EXPECT_FLOAT_EQ(L.gradient.at(0, 1), 1.5f);
  EXPECT_EQ(L.wall.at(0, 0), 1);
  EXPECT_EQ(L.wall.at(0, 1), 1);
  EXPECT_EQ(L.traversable.at(0, 0), 0);
}

TEST(Layers, StaircaseRisersAreStairCells) {
  // 0.15 m steps, each 5 cells deep
  OccupancyGrid g(40, 6, 0.05);
  for (int r = 0; r < 6; ++r)
    for (int c = 0; c < 40; ++c) g.set({r, c}, CellState::Free, 0.15f * (c / 5));
  auto L = compute_layers(g);
  int stairs = 0;
  for (int r = 0; r < 6; ++r) {
    for (int c = 0; c < 40; ++c) {
      bool riser = (c % 5 == 4 && c < 39) || (c % 5 == 0 && c > 0);
      EXPECT_NEAR(L.gradient.at(r, c), riser ? 0.15f : 0.0f, 1e-6) << r << "," << c;
      EXPECT_EQ(L.wall.at(r, c), 0);
      EXPECT_EQ(L.traversable.at(r, c), 1);
      EXPECT_EQ(L.stair.at(r, c), riser ? 1 : 0);
      stairs += L.stair.at(r, c);
      // stair implies traversable
      if (L.stair.at(r, c)) EXPECT_TRUE(L.traversable.at(r, c));
    }
  }
  EXPECT_GT(stairs, 0);
}

TEST(Layers, NanNeighboursSkipped) {
  OccupancyGrid g(3, 3, 0.05);
  g.set({1, 1}, CellState::Free, 2.0f);
  auto L = compute_layers(g);
  EXPECT_EQ(L.gradient.at(1, 1), 0.0f);
}

TEST(Layers, PureFunctionOfHeights) {
  Rng rng(5);
  OccupancyGrid g(20, 20, 0.05);
  for (int r = 0; r < 20; ++r)
    for (int c = 0; c < 20; ++c)
      if (rng.bernoulli(0.8)) g.set({r, c}, CellState::Free, static_cast<float>(rng.uniform(0, 2)));
  auto a = compute_layers(g);
  integrate_observation(g, pose_at(g, {0, 0}), {});
  auto b = compute_layers(g);
  EXPECT_EQ(a.wall.data, b.wall.data);
  EXPECT_EQ(a.stair.data, b.stair.data);
}

TEST(Layers, IncrementalUpdateMatchesFullRecompute) {
  Rng rng(6);
  OccupancyGrid g(30, 30, 0.05);
  auto L = compute_layers(g);
  for (int t = 0; t < 20; ++t) {
    VisibilitySweep s;
    int r0 = rng.uniform_int(0, 25), c0 = rng.uniform_int(0, 25);
    for (int i = 0; i < 10; ++i)
      s.cells.push_back({{r0 + rng.uniform_int(0, 4), c0 + rng.uniform_int(0, 4)},
                         rng.bernoulli(0.2) ? CellState::Occupied : CellState::Free,
                         static_cast<float>(rng.uniform(0, 1.5))});
    BBox box = integrate_observation(g, pose_at(g, {0, 0}), s);
    update_layers(g, L, box);
    auto F = compute_layers(g);
    ASSERT_EQ(L.gradient.data, F.gradient.data);
    ASSERT_EQ(L.traversable.data, F.traversable.data);
    ASSERT_EQ(L.stair.data, F.stair.data);
  }
}

TEST(Raycast, OpenFieldMatchesPolygonArea) {
  OccupancyGrid g(240, 240, 0.05, {-6.0, -6.0});
  auto cells = raycast_visible_cells(g, {0.0, 0.0}, 20, 4.0);
  double area = 0.5 * 20 * 16.0 * std::sin(2 * kPi / 20);
  double expect = area / (0.05 * 0.05);
  EXPECT_NEAR(static_cast<double>(cells.size()), expect, 0.10 * expect);
}

TEST(Raycast, EnclosedByRing) {
  OccupancyGrid g(11, 11, 0.05);
  for (int dr = -1; dr <= 1; ++dr)
    for (int dc = -1; dc <= 1; ++dc)
      if (dr || dc) g.set({5 + dr, 5 + dc}, CellState::Occupied, 1.0f);
  g.set({5, 5}, CellState::Free, 0.0f);
  auto cells = raycast_visible_cells(g, g.cell_center({5, 5}), 20, 4.0);
  EXPECT_LE(cells.size(), 9u);
  EXPECT_FALSE(cells.empty());
}

TEST(Raycast, OnOccupiedIsEmpty) {
  OccupancyGrid g(11, 11, 0.05);
  g.set({5, 5}, CellState::Occupied, 1.0f);
  EXPECT_TRUE(raycast_visible_cells(g, g.cell_center({5, 5})).empty());
}

TEST(Raycast, FourRaysGiveDiamond) {
  // vertices at distance r along the axes: a square of diagonal 2r
  OccupancyGrid g(200, 200, 0.05, {-5.0, -5.0});
  const double r = 2.0;
  Vec2 p{0.025, 0.025};
  auto cells = raycast_visible_cells(g, p, 4, r);
  // hand rasterization: centres with |dx|+|dy| <= r, plus cells the edges touch
  std::set<std::size_t> expect;
  for (int rr = 0; rr < 200; ++rr)
    for (int cc = 0; cc < 200; ++cc) {
      Vec2 c = g.cell_center({rr, cc});
      if (std::fabs(c.x - p.x) + std::fabs(c.y - p.y) < r - 1e-9) expect.insert(g.idx({rr, cc}));
    }
  std::set<std::size_t> got(cells.begin(), cells.end());
  for (std::size_t i : expect) EXPECT_TRUE(got.count(i));
  // every extra cell is a boundary cell within one cell of the diamond
  for (std::size_t i : got) {
    Vec2 c = g.cell_center({static_cast<int>(i / 200), static_cast<int>(i % 200)});
    EXPECT_LE(std::fabs(c.x - p.x) + std::fabs(c.y - p.y), r + 0.1 + 1e-9);
  }
  double diamond = 2 * r * r / (0.05 * 0.05);
  EXPECT_NEAR(static_cast<double>(cells.size()), diamond, 0.1 * diamond);
}

TEST(Raycast, ContainedInDisk) {
  for (int seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    OccupancyGrid g(120, 120, 0.05);
    for (int i = 0; i < 800; ++i)
      g.set({rng.uniform_int(0, 119), rng.uniform_int(0, 119)}, CellState::Occupied, 1.0f);
    Cell o{rng.uniform_int(20, 99), rng.uniform_int(20, 99)};
    if (g.state(o) == CellState::Occupied) continue;
    Vec2 p = g.cell_center(o);
    double rr = rng.uniform(0.5, 3.0);
    for (std::size_t i : raycast_visible_cells(g, p, 20, rr)) {
      Vec2 c = g.cell_center({static_cast<int>(i / 120), static_cast<int>(i % 120)});
      ASSERT_LE(distance(c, p), rr + 0.05 * std::sqrt(2.0) + 1e-9);
    }
  }
}

TEST(Io, PgmRoundTrip) {
  OccupancyGrid g(7, 5, 0.05, {1.0, -2.0}, 1);
  g.set({0, 0}, CellState::Free, 0.0f);
  g.set({4, 6}, CellState::Occupied, 1.0f);
  auto dir = std::filesystem::temp_directory_path() / "sgnav_pgm";
  std::filesystem::create_directories(dir);
  auto path = (dir / "m.pgm").string();
  write_pgm(g, path);
  auto h = read_pgm(path);
  EXPECT_EQ(h.width(), 7);
  EXPECT_EQ(h.height(), 5);
  EXPECT_EQ(h.floor_id(), 1);
  EXPECT_DOUBLE_EQ(h.origin().x, 1.0);
  EXPECT_EQ(h.cells().data, g.cells().data);
}

TEST(Io, FloatRasterRoundTrip) {
  OccupancyGrid g(4, 3, 0.05, {0.5, 0.5}, 2);
  Raster<float> r(4, 3, 0.0f);
  for (std::size_t i = 0; i < r.data.size(); ++i) r.data[i] = 0.25f * i;
  auto path = (std::filesystem::temp_directory_path() / "sgnav_r.sgf").string();
  write_float_raster(r, g, path);
  auto back = read_float_raster(path);
  EXPECT_EQ(back.raster.data, r.data);
  EXPECT_EQ(back.floor_id, 2);
  EXPECT_DOUBLE_EQ(back.resolution, 0.05);
}
