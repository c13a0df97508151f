#include "sgnav/planner.hpp"

#include <algorithm>
#include <queue>

namespace sgnav {

namespace {
constexpr int kDr8[8] = {-1, -1, -1, 0, 0, 1, 1, 1};
constexpr int kDc8[8] = {-1, 0, 1, -1, 1, -1, 0, 1};
constexpr double kSqrt2 = 1.4142135623730951;

using HeapItem = std::pair<double, std::size_t>;
using MinHeap = std::priority_queue<HeapItem, std::vector<HeapItem>, std::greater<>>;

double solve_pair(double a, double b, double h) {
  if (a > b) std::swap(a, b);
  if (!std::isfinite(a)) return kInf;
  if (!std::isfinite(b) || b - a >= h) return a + h;
  double d = b - a;
  return 0.5 * (a + b + std::sqrt(2.0 * h * h - d * d));
}

}  // namespace

std::optional<Cell> snap_to_traversable(const Raster<std::uint8_t>& trav, Cell c, double radius_cells) {
  if (trav.in_bounds(c) && trav[c]) return c;
  int R = static_cast<int>(std::ceil(radius_cells));
  std::optional<Cell> best;
  double bd = kInf;
  for (int dr = -R; dr <= R; ++dr) {
    for (int dc = -R; dc <= R; ++dc) {
      Cell k{c.r + dr, c.c + dc};
      double d = std::hypot(dr, dc);
      if (d > radius_cells || !trav.in_bounds(k) || !trav[k]) continue;
      if (d < bd) {
        bd = d;
        best = k;
      }
    }
  }
  return best;
}

DistanceField fmm_multi_source(const Raster<std::uint8_t>& trav, const std::vector<Cell>& goals,
                               const FmmOptions& opt) {
  DistanceField f;
  f.resolution = opt.resolution;
  f.values = Raster<double>(trav.width, trav.height, kInf);
  const int W = trav.width;
  // 0 far, 1 considered, 2 accepted
  std::vector<std::uint8_t> st(trav.data.size(), 0);
  std::vector<double>& T = f.values.data;
  MinHeap heap;
  for (Cell g : goals) {
    if (!trav.in_bounds(g) || !trav[g]) continue;
    std::size_t i = trav.idx(g);
    if (T[i] == 0.0) continue;
    T[i] = 0.0;
    st[i] = 1;
    heap.push({0.0, i});
    f.goals.push_back(g);
  }
  if (f.goals.empty()) throw UnreachableError("no traversable goal cell");
  std::size_t stop = opt.stop_at && trav.in_bounds(*opt.stop_at) ? trav.idx(*opt.stop_at) : SIZE_MAX;
  auto val = [&](int r, int c) -> double {
    if (r < 0 || c < 0 || r >= trav.height || c >= W) return kInf;
    std::size_t j = static_cast<std::size_t>(r) * W + c;
    return st[j] == 2 ? T[j] : kInf;
  };
  bool stopped = false;
  while (!heap.empty()) {
    auto [d, i] = heap.top();
    heap.pop();
    if (st[i] == 2 || d > T[i]) continue;
    st[i] = 2;
    if (i == stop) {
      stopped = true;
      break;
    }
    int r = static_cast<int>(i / W), c = static_cast<int>(i % W);
    for (int k = 0; k < 8; ++k) {
      int rr = r + kDr8[k], cc = c + kDc8[k];
      if (rr < 0 || cc < 0 || rr >= trav.height || cc >= W) continue;
      std::size_t j = static_cast<std::size_t>(rr) * W + cc;
      if (st[j] == 2 || !trav.data[j]) continue;
      double a1 = std::min(val(rr - 1, cc), val(rr + 1, cc));
      double b1 = std::min(val(rr, cc - 1), val(rr, cc + 1));
      double a2 = std::min(val(rr - 1, cc - 1), val(rr + 1, cc + 1));
      double b2 = std::min(val(rr - 1, cc + 1), val(rr + 1, cc - 1));
      double t = std::min(solve_pair(a1, b1, 1.0), solve_pair(a2, b2, kSqrt2));
      if (t < T[j]) {
        T[j] = t;
        st[j] = 1;
        heap.push({t, j});
      }
    }
  }
  for (std::size_t i = 0; i < T.size(); ++i) {
    if (stopped && st[i] != 2) T[i] = kInf;
    else if (std::isfinite(T[i])) T[i] *= opt.resolution;
  }
  return f;
}

DistanceField fmm_distance_field(const Raster<std::uint8_t>& trav, Cell goal, const FmmOptions& opt) {
  auto snapped = snap_to_traversable(trav, goal, opt.snap_radius / opt.resolution);
  if (!snapped) throw UnreachableError("goal not traversable and nothing to snap to");
  return fmm_multi_source(trav, {*snapped}, opt);
}

Raster<double> dijkstra8(const Raster<std::uint8_t>& trav, Cell goal, double resolution) {
  Raster<double> D(trav.width, trav.height, kInf);
  if (!trav.in_bounds(goal) || !trav[goal]) return D;
  MinHeap heap;
  D[goal] = 0.0;
  heap.push({0.0, trav.idx(goal)});
  while (!heap.empty()) {
    auto [d, i] = heap.top();
    heap.pop();
    if (d > D.data[i]) continue;
    Cell k = trav.cell_of(i);
    for (int n = 0; n < 8; ++n) {
      Cell m{k.r + kDr8[n], k.c + kDc8[n]};
      if (!trav.in_bounds(m) || !trav[m]) continue;
      double nd = d + ((kDr8[n] != 0 && kDc8[n] != 0) ? kSqrt2 : 1.0);
      if (nd < D[m]) {
        D[m] = nd;
        heap.push({nd, trav.idx(m)});
      }
    }
  }
  for (double& v : D.data)
    if (std::isfinite(v)) v *= resolution;
  return D;
}

std::vector<Cell> descend(const DistanceField& field, Cell start) {
  if (!field.finite(start)) throw UnreachableError("start is not connected to the goal");
  std::vector<Cell> path{start};
  Cell cur = start;
  while (field.at(cur) > 0.0) {
    Cell best = cur;
    double bv = field.at(cur);
    for (int k = 0; k < 8; ++k) {
      Cell n{cur.r + kDr8[k], cur.c + kDc8[k]};
      double v = field.at(n);
      if (v < bv) {
        bv = v;
        best = n;
      }
    }
    if (best == cur) break;  // unreachable for a finished solve
    cur = best;
    path.push_back(cur);
  }
  return path;
}

std::vector<Cell> subsample(const std::vector<Cell>& dense, int n_max) {
  const int L = static_cast<int>(dense.size());
  const int n = std::min(n_max, L);
  if (n <= 1) return dense.empty() ? dense : std::vector<Cell>{dense.front()};
  std::vector<Cell> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    int j = static_cast<int>(std::lround(static_cast<double>(i) * (L - 1) / (n - 1)));
    out.push_back(dense[j]);
  }
  return out;
}

std::vector<Cell> extract_waypoints(const DistanceField& field, Cell start, int n_max) {
  return subsample(descend(field, start), n_max);
}

Action next_action(const AgentPose& pose, Vec2 waypoint, double turn_threshold_deg) {
  double dx = waypoint.x - pose.x, dy = waypoint.y - pose.y;
  if (std::hypot(dx, dy) < 1e-9) return Action::MoveForward;
  double delta = wrap_angle(std::atan2(dy, dx) - pose.heading);
  if (std::fabs(delta) <= turn_threshold_deg * kPi / 180.0) return Action::MoveForward;
  if (std::fabs(delta) >= kPi - 1e-9) return Action::TurnLeft;
  return delta > 0 ? Action::TurnLeft : Action::TurnRight;
}

Action next_action_to_goal(const AgentPose& pose, Vec2 waypoint, bool is_verified_goal, double goal_distance,
                           double success_threshold, double turn_threshold_deg) {
  if (is_verified_goal && goal_distance <= success_threshold) return Action::Stop;
  return next_action(pose, waypoint, turn_threshold_deg);
}

const char* stair_stage_name(StairStage s) {
  switch (s) {
    case StairStage::Inactive: return "inactive";
    case StairStage::ApproachEntrance: return "approach";
    case StairStage::Climbing: return "climbing";
    case StairStage::Confirming: return "confirming";
  }
  return "inactive";
}

std::optional<StairCandidate> classify_stair(const OccupancyGrid& grid, const DerivedLayers& layers, Vec2 center,
                                             Vec2 half, double base_height, const StairParams& p) {
  Cell a = grid.world_to_cell(center - half);
  Cell b = grid.world_to_cell(center + half);
  double sum = 0;
  int n = 0;
  for (int r = std::max(0, a.r); r <= std::min(grid.height() - 1, b.r); ++r) {
    for (int c = std::max(0, a.c); c <= std::min(grid.width() - 1, b.c); ++c) {
      Cell k{r, c};
      if (grid.state(k) != CellState::Free) continue;
      sum += grid.height_at(k);
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  StairCandidate s;
  s.center = center;
  s.half = half;
  s.mean_height = sum / n;
  s.up = s.mean_height - base_height > p.base_band;
  // up: lowest traversable cell of the box; down: highest one.
  double best = s.up ? kInf : -kInf;
  for (int r = std::max(0, a.r); r <= std::min(grid.height() - 1, b.r); ++r) {
    for (int c = std::max(0, a.c); c <= std::min(grid.width() - 1, b.c); ++c) {
      Cell k{r, c};
      if (!layers.traversable[k]) continue;
      double h = grid.height_at(k);
      if (s.up ? (h < best) : (h > best)) {
        best = h;
        s.entrance = k;
        s.has_entrance = true;
      }
    }
  }
  return s;
}

std::optional<Cell> climb_local_goal(const OccupancyGrid& grid, const DerivedLayers& layers, Cell start, bool up,
                                     double window_m) {
  if (!grid.in_bounds(start) || !layers.traversable[start]) return std::nullopt;
  int half = static_cast<int>(std::round(window_m / grid.resolution() / 2.0));
  auto inside = [&](Cell k) {
    return std::abs(k.r - start.r) <= half && std::abs(k.c - start.c) <= half && grid.in_bounds(k);
  };
  std::vector<Cell> stack{start};
  std::vector<std::uint8_t> seen(static_cast<std::size_t>(2 * half + 1) * (2 * half + 1), 0);
  auto sidx = [&](Cell k) {
    return static_cast<std::size_t>(k.r - start.r + half) * (2 * half + 1) + (k.c - start.c + half);
  };
  seen[sidx(start)] = 1;
  Cell best = start;
  double bh = grid.height_at(start);
  double bd = 0.0;
  while (!stack.empty()) {
    Cell k = stack.back();
    stack.pop_back();
    double h = grid.height_at(k);
    double d = std::hypot(k.r - start.r, k.c - start.c);
    // Prefer the extreme height; among equals, the farthest, then row-major.
    bool better = up ? h > bh + 1e-6 : h < bh - 1e-6;
    bool tie = std::fabs(h - bh) <= 1e-6;
    if (better || (tie && (d > bd + 1e-9 || (std::fabs(d - bd) <= 1e-9 && k < best)))) {
      best = k;
      bh = h;
      bd = d;
    }
    for (int n = 0; n < 8; ++n) {
      Cell m{k.r + kDr8[n], k.c + kDc8[n]};
      if (!inside(m) || !layers.traversable[m] || seen[sidx(m)]) continue;
      seen[sidx(m)] = 1;
      stack.push_back(m);
    }
  }
  return best;
}

int count_floor_points(const VisibilitySweep& sweep, double z, double band) {
  int n = 0;
  for (const auto& sc : sweep.cells)
    if (sc.state == CellState::Free && std::fabs(sc.height - z) <= band) ++n;
  return n;
}

StairUpdate update_stair_state(StairClimbState state, const OccupancyGrid& grid, const DerivedLayers& layers,
                               const AgentPose& pose, int frontier_count, int floor_points, const StairParams& p,
                               const DistanceField* agent_field) {
  StairUpdate u;
  Cell here = grid.world_to_cell(pose.xy());
  switch (state.stage) {
    case StairStage::Inactive: {
      if (frontier_count > 0) break;
      auto pick = [&](std::vector<StairCandidate>& list) -> int {
        int best = -1;
        double bd = kInf;
        for (std::size_t i = 0; i < list.size(); ++i) {
          if (!list[i].has_entrance) continue;
          double d = agent_field ? agent_field->at(list[i].entrance)
                                 : distance(grid.cell_center(list[i].entrance), pose.xy());
          if (d < bd) {
            bd = d;
            best = static_cast<int>(i);
          }
        }
        return best;
      };
      int i = pick(state.up_list);
      bool up = true;
      if (i < 0) {
        i = pick(state.down_list);
        up = false;
      }
      if (i < 0) {
        u.exhausted = true;
        break;
      }
      state.stage = StairStage::ApproachEntrance;
      state.up = up;
      state.candidate = i;
      state.entrance = up ? state.up_list[i].entrance : state.down_list[i].entrance;
      u.goal = state.entrance;
      break;
    }
    case StairStage::ApproachEntrance: {
      if (distance(grid.cell_center(state.entrance), pose.xy()) <= p.arrival_radius) {
        state.stage = StairStage::Climbing;
        state.climb_start_z = pose.z;
        u.goal = climb_local_goal(grid, layers, here, state.up, p.window);
      } else {
        u.goal = state.entrance;
      }
      break;
    }
    case StairStage::Climbing: {
      if (floor_points > p.floor_points && std::fabs(pose.z - state.climb_start_z) >= p.climb_rise) {
        state.stage = StairStage::Confirming;
        state.scan_turns_left = 12;
        break;
      }
      u.goal = climb_local_goal(grid, layers, here, state.up, p.window);
      break;
    }
    case StairStage::Confirming: {
      if (state.scan_turns_left > 0) --state.scan_turns_left;
      if (state.scan_turns_left == 0) state.stage = StairStage::Inactive;
      break;
    }
  }
  u.state = std::move(state);
  return u;
}

}  // namespace sgnav
