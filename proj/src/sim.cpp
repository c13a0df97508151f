#include "sgnav/sim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <queue>
#include <set>

#include "sgnav/metrics.hpp"

namespace sgnav {

namespace {

constexpr double kEps = 1e-9;
constexpr double kWallHeight = 2.5;
constexpr double kRailHeight = 1.0;
constexpr double kSnap = 0.1;

double snap(double v) { return std::round(v / kSnap) * kSnap; }

struct Rect {
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  double w() const { return x1 - x0; }
  double h() const { return y1 - y0; }
  bool overlaps(const Rect& o, double gap) const {
    return x0 < o.x1 + gap && o.x0 < x1 + gap && y0 < o.y1 + gap && o.y0 < y1 + gap;
  }
};

Rect room_rect(const Room& r) { return {r.x0, r.y0, r.x1, r.y1}; }

Rect object_rect(const SceneObject& o) {
  return {o.position.x - o.half_x, o.position.y - o.half_y, o.position.x + o.half_x, o.position.y + o.half_y};
}

// Run extended by a landing at both ends.
Rect stair_strip(const Stair& s) {
  Rect r{s.x0, s.y0, s.x1, s.y1};
  if (s.along_x()) {
    r.x0 -= s.landing;
    r.x1 += s.landing;
  } else {
    r.y0 -= s.landing;
    r.y1 += s.landing;
  }
  return r;
}

// Position along the rise direction, 0 at the foot of the run.
double along_run(const Stair& s, Vec2 p) {
  if (s.along_x()) return s.rise_dir.x > 0 ? p.x - s.x0 : s.x1 - p.x;
  return s.rise_dir.y > 0 ? p.y - s.y0 : s.y1 - p.y;
}

Vec2 landing_center(const Stair& s, bool upper) {
  double run_len = s.steps * s.step_run;
  Vec2 foot = s.center() - s.rise_dir * (run_len / 2);
  return upper ? foot + s.rise_dir * (run_len + s.landing / 2) : foot - s.rise_dir * (s.landing / 2);
}

// Shared wall between two rooms: along_y when the wall runs along y.
struct SharedWall {
  bool along_y = false;
  double coord = 0, lo = 0, hi = 0;
};

std::optional<SharedWall> shared_wall(const Rect& a, const Rect& b) {
  SharedWall w;
  if (std::abs(a.x1 - b.x0) < kEps || std::abs(b.x1 - a.x0) < kEps) {
    w.along_y = true;
    w.coord = std::abs(a.x1 - b.x0) < kEps ? a.x1 : a.x0;
    w.lo = std::max(a.y0, b.y0);
    w.hi = std::min(a.y1, b.y1);
  } else if (std::abs(a.y1 - b.y0) < kEps || std::abs(b.y1 - a.y0) < kEps) {
    w.coord = std::abs(a.y1 - b.y0) < kEps ? a.y1 : a.y0;
    w.lo = std::max(a.x0, b.x0);
    w.hi = std::min(a.x1, b.x1);
  } else {
    return std::nullopt;
  }
  if (w.hi - w.lo <= kEps) return std::nullopt;
  return w;
}

struct UnionFind {
  std::vector<int> p;
  explicit UnionFind(int n) : p(n) { std::iota(p.begin(), p.end(), 0); }
  int find(int x) { return p[x] == x ? x : p[x] = find(p[x]); }
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    p[b] = a;
    return true;
  }
};

std::vector<std::pair<int, int>> disk_offsets(double radius_cells) {
  std::vector<std::pair<int, int>> out;
  int k = static_cast<int>(std::ceil(radius_cells));
  for (int dr = -k; dr <= k; ++dr)
    for (int dc = -k; dc <= k; ++dc)
      if (dr * dr + dc * dc <= radius_cells * radius_cells + kEps) out.push_back({dr, dc});
  return out;
}

const char* level_name(int floor) { return floor == 0 ? "ground" : "upper"; }

template <class F>
void for_cells_in(const Scene& s, const Rect& r, F&& fn) {
  const double res = s.config.resolution;
  const Vec2 o = s.origin();
  int c0 = std::max(0, static_cast<int>(std::floor((r.x0 - o.x) / res)) - 1);
  int c1 = std::min(s.grid_width() - 1, static_cast<int>(std::floor((r.x1 - o.x) / res)) + 1);
  int r0 = std::max(0, static_cast<int>(std::floor((r.y0 - o.y) / res)) - 1);
  int r1 = std::min(s.grid_height() - 1, static_cast<int>(std::floor((r.y1 - o.y) / res)) + 1);
  for (int rr = r0; rr <= r1; ++rr)
    for (int cc = c0; cc <= c1; ++cc) {
      Vec2 p = s.cell_center({rr, cc});
      if (p.x >= r.x0 - kEps && p.x <= r.x1 + kEps && p.y >= r.y0 - kEps && p.y <= r.y1 + kEps) fn(Cell{rr, cc}, p);
    }
}

bool compute_clear(const FloorRaster& fr, Cell k, const std::vector<std::pair<int, int>>& disk) {
  if (fr.solid[k]) return false;
  for (auto [dr, dc] : disk) {
    Cell n{k.r + dr, k.c + dc};
    if (!fr.solid.in_bounds(n) || fr.solid[n]) return false;
  }
  return true;
}

}  // namespace

// ---------------------------------------------------------------- config

int SimConfig::steps_per_flight() const { return static_cast<int>(std::lround(floor_height / step_rise)); }

void SimConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError("sim config: " + m); };
  if (floors < 1 || floors > 3) fail("floors must be 1-3");
  if (rooms_per_floor < 3 || rooms_per_floor > 10) fail("rooms_per_floor must be 3-10");
  if (width > 24.0 + kEps || depth > 24.0 + kEps) fail("house larger than 24 x 24 m");
  if (!(resolution > 0)) fail("resolution must be positive");
  auto on_snap = [](double v) { return std::abs(v / kSnap - std::round(v / kSnap)) < 1e-6; };
  if (!on_snap(width) || !on_snap(depth)) fail("width and depth must be multiples of 0.1 m");
  if (!(step_rise > 0) || std::abs(steps_per_flight() * step_rise - floor_height) > 1e-6)
    fail("floor_height must be a whole number of step rises");
  if (step_rise > max_climb + kEps) fail("step_rise exceeds max_climb");
  double turns = 360.0 / turn_deg;
  if (!(turn_deg > 0) || std::abs(turns - std::round(turns)) > 1e-9) fail("turn_deg must divide 360");
  if (!(forward_step > 0) || !(range > 0) || !(fov_deg > 0) || fov_deg > 360) fail("bad motion or sensor settings");
  if (decoys < 0 || decoy_confidence < 0 || decoy_confidence > 1 || base_confidence < 0 || base_confidence > 1)
    fail("bad detection settings");
  if (decoys > 0 && decoy_category.empty()) fail("decoys need a decoy_category");
  if (floors > 1) {
    if (width < hall_length() + min_room - kEps) fail("width too small for the stair hall");
    if (depth < hall_depth() + min_room - kEps) fail("depth too small for the stair hall");
  } else if (width < min_room || depth < min_room) {
    fail("house smaller than one room");
  }
}

nlohmann::ordered_json SimConfig::to_json() const {
  return {{"floors", floors},
          {"rooms_per_floor", rooms_per_floor},
          {"width", width},
          {"depth", depth},
          {"resolution", resolution},
          {"wall_thickness", wall_thickness},
          {"door_width", door_width},
          {"min_room", min_room},
          {"extra_door_p", extra_door_p},
          {"floor_height", floor_height},
          {"step_rise", step_rise},
          {"step_run", step_run},
          {"lane_width", lane_width},
          {"landing", landing},
          {"walkway", walkway},
          {"max_objects_per_room", max_objects_per_room},
          {"decoy_category", decoy_category},
          {"decoys", decoys},
          {"decoy_confidence", decoy_confidence},
          {"base_confidence", base_confidence},
          {"confidence_noise", confidence_noise},
          {"fov_deg", fov_deg},
          {"range", range},
          {"agent_radius", agent_radius},
          {"max_climb", max_climb},
          {"forward_step", forward_step},
          {"turn_deg", turn_deg},
          {"viewpoint_radius", viewpoint_radius}};
}

SimConfig SimConfig::from_json(const nlohmann::json& j) {
  SimConfig c;
#define SGNAV_GET(k) c.k = j.value(#k, c.k)
  SGNAV_GET(floors);
  SGNAV_GET(rooms_per_floor);
  SGNAV_GET(width);
  SGNAV_GET(depth);
  SGNAV_GET(resolution);
  SGNAV_GET(wall_thickness);
  SGNAV_GET(door_width);
  SGNAV_GET(min_room);
  SGNAV_GET(extra_door_p);
  SGNAV_GET(floor_height);
  SGNAV_GET(step_rise);
  SGNAV_GET(step_run);
  SGNAV_GET(lane_width);
  SGNAV_GET(landing);
  SGNAV_GET(walkway);
  SGNAV_GET(max_objects_per_room);
  SGNAV_GET(decoy_category);
  SGNAV_GET(decoys);
  SGNAV_GET(decoy_confidence);
  SGNAV_GET(base_confidence);
  SGNAV_GET(confidence_noise);
  SGNAV_GET(fov_deg);
  SGNAV_GET(range);
  SGNAV_GET(agent_radius);
  SGNAV_GET(max_climb);
  SGNAV_GET(forward_step);
  SGNAV_GET(turn_deg);
  SGNAV_GET(viewpoint_radius);
#undef SGNAV_GET
  return c;
}

// ---------------------------------------------------------------- scene basics

double SceneObject::footprint_distance(Vec2 p) const {
  double dx = std::max(0.0, std::abs(p.x - position.x) - half_x);
  double dy = std::max(0.0, std::abs(p.y - position.y) - half_y);
  return std::hypot(dx, dy);
}

int Scene::grid_width() const { return static_cast<int>(std::ceil((config.width + 1.0) / config.resolution - 1e-6)); }
int Scene::grid_height() const { return static_cast<int>(std::ceil((config.depth + 1.0) / config.resolution - 1e-6)); }

OccupancyGrid Scene::make_grid(int floor_id) const {
  return OccupancyGrid(grid_width(), grid_height(), config.resolution, origin(), floor_id);
}

Cell Scene::cell_of(Vec2 p) const {
  return {static_cast<int>(std::floor((p.y - origin().y) / config.resolution)),
          static_cast<int>(std::floor((p.x - origin().x) / config.resolution))};
}

Vec2 Scene::cell_center(Cell k) const {
  return {origin().x + (k.c + 0.5) * config.resolution, origin().y + (k.r + 0.5) * config.resolution};
}

int Scene::floor_of_z(double z) const {
  long f = std::lround(z / config.floor_height);
  return static_cast<int>(std::clamp<long>(f, 0, static_cast<long>(floors.empty() ? config.floors : floors.size()) - 1));
}

const Room* Scene::room_at(int floor, Vec2 p) const {
  if (floor < 0 || floor >= static_cast<int>(floors.size())) return nullptr;
  Cell k = cell_of(p);
  if (!floors[floor].room.in_bounds(k)) return nullptr;
  int id = floors[floor].room[k];
  return id >= 0 && id < static_cast<int>(rooms.size()) ? &rooms[id] : nullptr;
}

bool Scene::is_stair_cell(int floor, Cell k) const {
  if (floor < 0 || floor >= static_cast<int>(floors.size()) || !floors[floor].stair.in_bounds(k)) return false;
  return floors[floor].stair[k] >= 0;
}

std::string lookalike_category(const std::string& q) {
  static const std::map<std::string, std::string> table = {{"bed", "sofa"},     {"sofa", "bed"},
                                                           {"toilet", "sink"},  {"tv", "picture"},
                                                           {"chair", "armchair"}, {"plant", "lamp"}};
  auto it = table.find(q);
  return it == table.end() ? "box" : it->second;
}

// ---------------------------------------------------------------- rasterization

void Scene::rasterize() {
  const int gw = grid_width(), gh = grid_height();
  const double t2 = config.wall_thickness / 2;
  const double res = config.resolution;
  auto disk = disk_offsets(config.agent_radius / res);
  floors.assign(config.floors, {});
  for (int f = 0; f < config.floors; ++f) {
    FloorRaster& fr = floors[f];
    fr.z = f * config.floor_height;
    fr.solid = Raster<std::uint8_t>(gw, gh, 1);
    fr.height = Raster<float>(gw, gh, static_cast<float>(fr.z + kWallHeight));
    fr.room = Raster<int>(gw, gh, -1);
    fr.stair = Raster<std::int8_t>(gw, gh, -1);
    auto set = [&](Cell k, bool solid, double h) {
      fr.solid[k] = solid ? 1 : 0;
      fr.height[k] = static_cast<float>(h);
    };
    for (const Room& rm : rooms) {
      if (rm.floor != f) continue;
      for_cells_in(*this, room_rect(rm), [&](Cell k, Vec2) {
        set(k, false, fr.z);
        fr.room[k] = rm.id;
      });
    }
    for (const Stair& s : stairs) {
      const bool touches = s.lower == f || s.upper == f;
      const double run_len = s.steps * s.step_run;
      const double z_lo = s.lower * config.floor_height, z_hi = s.upper * config.floor_height;
      const double rail = s.along_x() ? (s.rail_side.y > 0 ? s.y1 : s.y0) : (s.rail_side.x > 0 ? s.x1 : s.x0);
      for_cells_in(*this, stair_strip(s), [&](Cell k, Vec2 p) {
        if (!touches) {
          // a flight between other floors passes overhead or below the slab
          set(k, false, fr.z);
          return;
        }
        double t = along_run(s, p);
        if (t >= 0 && t < run_len) {
          int step = std::min(s.steps - 1, static_cast<int>(std::floor(t / s.step_run)));
          double h = z_lo + s.step_rise * (step + 1);
          double across = s.along_x() ? p.y : p.x;
          if (std::abs(across - rail) < res)
            set(k, true, h + kRailHeight);
          else
            set(k, false, h);
          fr.stair[k] = static_cast<std::int8_t>(s.id);
        } else if (t < 0) {
          set(k, f != s.lower, f == s.lower ? z_lo : fr.z + kWallHeight);
        } else {
          set(k, f != s.upper, f == s.upper ? z_hi : fr.z + kWallHeight);
        }
      });
    }
    for (const Room& rm : rooms) {
      if (rm.floor != f) continue;
      const Rect edges[4] = {{rm.x0 - t2, rm.y0 - t2, rm.x0 + t2, rm.y1 + t2},
                             {rm.x1 - t2, rm.y0 - t2, rm.x1 + t2, rm.y1 + t2},
                             {rm.x0 - t2, rm.y0 - t2, rm.x1 + t2, rm.y0 + t2},
                             {rm.x0 - t2, rm.y1 - t2, rm.x1 + t2, rm.y1 + t2}};
      for (const Rect& e : edges) for_cells_in(*this, e, [&](Cell k, Vec2) { set(k, true, fr.z + kWallHeight); });
    }
    for (const Door& d : doors) {
      if (d.floor != f) continue;
      double hw = d.width / 2;
      Rect r = d.along_y ? Rect{d.center.x - t2, d.center.y - hw, d.center.x + t2, d.center.y + hw}
                         : Rect{d.center.x - hw, d.center.y - t2, d.center.x + hw, d.center.y + t2};
      for_cells_in(*this, r, [&](Cell k, Vec2) { set(k, false, fr.z); });
    }
    for (const SceneObject& o : objects) {
      if (o.floor != f || !o.solid) continue;
      for_cells_in(*this, object_rect(o), [&](Cell k, Vec2) { set(k, true, fr.z + o.height); });
    }
    fr.clear = Raster<std::uint8_t>(gw, gh, 0);
    for (int r = 0; r < gh; ++r)
      for (int c = 0; c < gw; ++c) fr.clear.at(r, c) = compute_clear(fr, {r, c}, disk) ? 1 : 0;
  }
}

// ---------------------------------------------------------------- generation

Scene generate_layout(std::uint64_t seed, const SimConfig& cfg) {
  cfg.validate();
  const Fixtures& fx = Fixtures::builtin();
  Rng rng(hash_mix(seed, 0x1a7e57));
  const double W = cfg.width, D = cfg.depth;
  const bool multi = cfg.floors > 1;
  const double hl = cfg.hall_length(), hd = cfg.hall_depth();

  // Canonical frame: stair hall in the (0,0) corner, lanes along x.
  std::vector<Rect> rects;
  int hall = -1;
  std::vector<Rect> pool;
  if (multi) {
    rects.push_back({0, 0, hl, hd});
    hall = 0;
    pool.push_back({hl, 0, W, hd});
    pool.push_back({0, hd, W, D});
  } else {
    pool.push_back({0, 0, W, D});
  }
  const int need = cfg.rooms_per_floor - static_cast<int>(rects.size());
  const double mr = cfg.min_room;
  while (static_cast<int>(pool.size()) < need) {
    int best = -1;
    double best_area = -1;
    for (int i = 0; i < static_cast<int>(pool.size()); ++i) {
      const Rect& r = pool[i];
      bool ok = r.w() >= 2 * mr - kEps || r.h() >= 2 * mr - kEps;
      if (ok && r.w() * r.h() > best_area) {
        best = i;
        best_area = r.w() * r.h();
      }
    }
    if (best < 0)
      throw GenerationError("cannot fit " + std::to_string(cfg.rooms_per_floor) + " rooms in " +
                            py_float(W) + " x " + py_float(D) + " m");
    Rect r = pool[best];
    bool cut_x = r.w() >= r.h();
    if (cut_x && r.w() < 2 * mr - kEps) cut_x = false;
    if (!cut_x && r.h() < 2 * mr - kEps) cut_x = true;
    double lo = (cut_x ? r.x0 : r.y0) + mr, hi = (cut_x ? r.x1 : r.y1) - mr;
    double cut = std::clamp(snap(rng.uniform(lo, hi)), std::ceil(lo / kSnap - 1e-6) * kSnap,
                            std::floor(hi / kSnap + 1e-6) * kSnap);
    Rect a = r, b = r;
    if (cut_x) {
      a.x1 = cut;
      b.x0 = cut;
    } else {
      a.y1 = cut;
      b.y0 = cut;
    }
    pool[best] = a;
    pool.insert(pool.begin() + best + 1, b);
  }
  for (const Rect& r : pool) rects.push_back(r);
  const int n = static_cast<int>(rects.size());

  // Walls wide enough for a door.
  struct Adj {
    int a, b;
    SharedWall wall;
    double lo, hi;  // admissible door centres
  };
  std::vector<Adj> adjs;
  const double dw = cfg.door_width;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      auto w = shared_wall(rects[i], rects[j]);
      if (!w) continue;
      double lo = w->lo + dw / 2 + 0.2, hi = w->hi - dw / 2 - 0.2;
      if ((i == hall || j == hall) && w->along_y) {
        // end walls of the hall only open onto the walkway
        double lanes = (cfg.floors - 1) * cfg.lane_width;
        lo = std::max(lo, lanes + dw / 2 + 0.1);
        hi = std::min(hi, hd - dw / 2 - 0.1);
      }
      if (hi < lo - kEps) continue;
      adjs.push_back({i, j, *w, lo, hi});
    }

  const bool flip_x = rng.bernoulli(0.5), flip_y = rng.bernoulli(0.5);
  auto fx_ = [&](double x) { return flip_x ? W - x : x; };
  auto fy_ = [&](double y) { return flip_y ? D - y : y; };
  auto flip_rect = [&](const Rect& r) {
    return Rect{std::min(fx_(r.x0), fx_(r.x1)), std::min(fy_(r.y0), fy_(r.y1)), std::max(fx_(r.x0), fx_(r.x1)),
                std::max(fy_(r.y0), fy_(r.y1))};
  };

  Scene s;
  s.seed = seed;
  s.config = cfg;
  for (int f = 0; f < cfg.floors; ++f) {
    // doors: random spanning tree plus a few extra
    std::vector<int> order(adjs.size());
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    UnionFind uf(n);
    std::vector<int> chosen;
    for (int k : order)
      if (uf.unite(adjs[k].a, adjs[k].b)) chosen.push_back(k);
    for (int k : order)
      if (std::find(chosen.begin(), chosen.end(), k) == chosen.end() && rng.bernoulli(cfg.extra_door_p))
        chosen.push_back(k);
    for (int i = 1; i < n; ++i)
      if (uf.find(i) != uf.find(0)) throw GenerationError("room graph is disconnected");
    std::sort(chosen.begin(), chosen.end());
    for (int k : chosen) {
      const Adj& a = adjs[k];
      double c = std::clamp(snap(rng.uniform(a.lo, a.hi)), a.lo, a.hi);
      Vec2 p = a.wall.along_y ? Vec2{a.wall.coord, c} : Vec2{c, a.wall.coord};
      s.doors.push_back({f, f * n + a.a, f * n + a.b, {fx_(p.x), fy_(p.y)}, a.wall.along_y, dw});
    }

    // labels in BFS order from the hall, weighted by the floor prior and
    // the adjacency table against already-labelled neighbours
    std::vector<std::string> labels(n);
    std::vector<std::vector<int>> nb(n);
    for (const Adj& a : adjs) {
      nb[a.a].push_back(a.b);
      nb[a.b].push_back(a.a);
    }
    std::vector<int> bfs{hall >= 0 ? hall : 0};
    std::vector<bool> seen(n, false);
    seen[bfs[0]] = true;
    for (std::size_t q = 0; q < bfs.size(); ++q)
      for (int m : nb[bfs[q]])
        if (!seen[m]) {
          seen[m] = true;
          bfs.push_back(m);
        }
    for (int i = 0; i < n; ++i)
      if (!seen[i]) bfs.push_back(i);
    std::map<std::string, int> used;
    const auto& prior = fx.floor_priors().at(level_name(f));
    for (int i : bfs) {
      if (i == hall) {
        labels[i] = "stair hall";
        continue;
      }
      std::vector<std::string> names;
      std::vector<double> w;
      for (const auto& [label, p] : prior) {
        double v = p * std::pow(0.35, used[label]);
        for (int m : nb[i])
          if (!labels[m].empty()) v *= std::pow(fx.adjacency(label, labels[m]), 2);
        names.push_back(label);
        w.push_back(v);
      }
      labels[i] = names[rng.weighted(w)];
      ++used[labels[i]];
    }
    for (int i = 0; i < n; ++i) {
      Rect r = flip_rect(rects[i]);
      s.rooms.push_back({f * n + i, f, labels[i], r.x0, r.y0, r.x1, r.y1});
    }
  }

  for (int i = 0; i + 1 < cfg.floors; ++i) {
    Stair st;
    st.id = i;
    st.lower = i;
    st.upper = i + 1;
    st.step_rise = cfg.step_rise;
    st.step_run = cfg.step_run;
    st.steps = cfg.steps_per_flight();
    st.landing = cfg.landing;
    Rect run{cfg.landing, i * cfg.lane_width, cfg.landing + st.steps * st.step_run, (i + 1) * cfg.lane_width};
    Rect fr = flip_rect(run);
    st.x0 = fr.x0;
    st.y0 = fr.y0;
    st.x1 = fr.x1;
    st.y1 = fr.y1;
    // alternate directions so consecutive flights share a landing end
    double dir = (i % 2 == 0) ? 1.0 : -1.0;
    st.rise_dir = {flip_x ? -dir : dir, 0};
    st.rail_side = {0, flip_y ? -1.0 : 1.0};
    st.room = i * n + hall;
    s.stairs.push_back(st);
  }
  return s;
}

namespace {

struct FloorBuilder {
  Scene& s;
  int f;
  std::vector<std::pair<int, int>> disk;
  std::vector<Cell> anchors;
  std::vector<std::uint32_t> mark;
  std::uint32_t stamp = 0;

  FloorBuilder(Scene& scene, int floor) : s(scene), f(floor) {
    disk = disk_offsets(s.config.agent_radius / s.config.resolution);
    for (const Door& d : s.doors)
      if (d.floor == f) anchors.push_back(s.cell_of(d.center));
    for (const Stair& st : s.stairs) {
      if (st.lower == f) anchors.push_back(s.cell_of(landing_center(st, false)));
      if (st.upper == f) anchors.push_back(s.cell_of(landing_center(st, true)));
    }
    mark.assign(static_cast<std::size_t>(s.grid_width()) * s.grid_height(), 0);
  }

  FloorRaster& fr() { return s.floors[f]; }

  bool connected() {
    if (anchors.empty()) return true;
    ++stamp;
    const auto& clear = fr().clear;
    const auto& height = fr().height;
    std::vector<Cell> stack;
    if (!clear[anchors[0]]) return false;
    mark[clear.idx(anchors[0])] = stamp;
    stack.push_back(anchors[0]);
    while (!stack.empty()) {
      Cell k = stack.back();
      stack.pop_back();
      for (int dr = -1; dr <= 1; ++dr)
        for (int dc = -1; dc <= 1; ++dc) {
          Cell m{k.r + dr, k.c + dc};
          if (!clear.in_bounds(m) || !clear[m] || mark[clear.idx(m)] == stamp) continue;
          if (std::abs(height[m] - height[k]) > s.config.max_climb + kEps) continue;
          mark[clear.idx(m)] = stamp;
          stack.push_back(m);
        }
    }
    for (Cell a : anchors)
      if (mark[clear.idx(a)] != stamp) return false;
    return true;
  }

  void refresh_clear(const Rect& r) {
    double m = s.config.agent_radius + 2 * s.config.resolution;
    for_cells_in(s, {r.x0 - m, r.y0 - m, r.x1 + m, r.y1 + m},
                 [&](Cell k, Vec2) { fr().clear[k] = compute_clear(fr(), k, disk) ? 1 : 0; });
  }

  // Rasterizes the object; undone when it disconnects the floor.
  bool add(const SceneObject& o) {
    Rect r = object_rect(o);
    std::vector<std::pair<Cell, std::pair<std::uint8_t, float>>> saved;
    for_cells_in(s, r, [&](Cell k, Vec2) {
      saved.push_back({k, {fr().solid[k], fr().height[k]}});
      fr().solid[k] = 1;
      fr().height[k] = static_cast<float>(fr().z + o.height);
    });
    refresh_clear(r);
    if (connected()) return true;
    for (auto& [k, v] : saved) {
      fr().solid[k] = v.first;
      fr().height[k] = v.second;
    }
    refresh_clear(r);
    return false;
  }
};

bool try_place(Scene& s, FloorBuilder& b, Rng& rng, const Room& room, const std::string& cat, bool decoy,
               const std::string& detected_as) {
  const SimConfig& cfg = s.config;
  ObjectShape shape = Fixtures::builtin().shape(cat);
  const double t2 = cfg.wall_thickness / 2, gap = 0.02;
  for (int attempt = 0; attempt < 25; ++attempt) {
    int side = rng.uniform_int(0, 3);
    bool horizontal_wall = side < 2;
    double hx = horizontal_wall ? shape.half_x : shape.half_y;
    double hy = horizontal_wall ? shape.half_y : shape.half_x;
    double lo_x = room.x0 + t2 + hx + gap, hi_x = room.x1 - t2 - hx - gap;
    double lo_y = room.y0 + t2 + hy + gap, hi_y = room.y1 - t2 - hy - gap;
    if (hi_x < lo_x || hi_y < lo_y) continue;
    Vec2 p;
    switch (side) {
      case 0: p = {rng.uniform(lo_x, hi_x), lo_y}; break;
      case 1: p = {rng.uniform(lo_x, hi_x), hi_y}; break;
      case 2: p = {lo_x, rng.uniform(lo_y, hi_y)}; break;
      default: p = {hi_x, rng.uniform(lo_y, hi_y)}; break;
    }
    SceneObject o;
    o.id = static_cast<int>(s.objects.size());
    o.category = cat;
    o.detected_as = detected_as;
    o.position = p;
    o.floor = room.floor;
    o.room = room.id;
    o.half_x = hx;
    o.half_y = hy;
    o.height = shape.height;
    o.decoy = decoy;
    Rect r = object_rect(o);
    bool ok = true;
    for (const SceneObject& q : s.objects)
      if (q.floor == o.floor && q.solid && r.overlaps(object_rect(q), 0.05)) ok = false;
    for (const Door& d : s.doors)
      if (d.floor == o.floor && o.footprint_distance(d.center) < d.width / 2 + 0.45) ok = false;
    for (const Stair& st : s.stairs) {
      Rect strip = stair_strip(st);
      if (r.overlaps(strip, 0.3)) ok = false;
    }
    if (!ok || !b.add(o)) continue;
    s.objects.push_back(std::move(o));
    return true;
  }
  return false;
}

}  // namespace

Scene generate_scene(std::uint64_t seed, const SimConfig& cfg) {
  Scene s = generate_layout(seed, cfg);
  s.rasterize();
  const Fixtures& fx = Fixtures::builtin();
  Rng rng(hash_mix(seed, 0x0b7ec7));
  for (int f = 0; f < cfg.floors; ++f) {
    FloorBuilder b(s, f);
    if (!b.connected()) throw GenerationError("floor " + std::to_string(f) + " is not connected");
    for (const Room& room : s.rooms) {
      if (room.floor != f) continue;
      std::vector<std::string> cats;
      const auto& row = fx.cooccurrence().at(room.label);
      for (const auto& [cat, p] : row)
        if (cat != "stairs" && rng.bernoulli(p)) cats.push_back(cat);
      if (cats.empty()) {
        std::string best;
        double bp = -1;
        for (const auto& [cat, p] : row)
          if (cat != "stairs" && p > bp) {
            best = cat;
            bp = p;
          }
        if (!best.empty()) cats.push_back(best);
      }
      rng.shuffle(cats);
      if (static_cast<int>(cats.size()) > cfg.max_objects_per_room) cats.resize(cfg.max_objects_per_room);
      std::stable_sort(cats.begin(), cats.end(), [&](const std::string& a, const std::string& c) {
        ObjectShape sa = fx.shape(a), sc = fx.shape(c);
        return sa.half_x * sa.half_y > sc.half_x * sc.half_y;
      });
      for (const auto& cat : cats) try_place(s, b, rng, room, cat, false, cat);
    }
  }
  if (cfg.decoys > 0) {
    std::string look = lookalike_category(cfg.decoy_category);
    std::vector<const Room*> hosts;
    for (const Room& r : s.rooms)
      if (r.label != "stair hall" && fx.p_object(r.label, cfg.decoy_category) < 0.1) hosts.push_back(&r);
    rng.shuffle(hosts);
    int placed = 0;
    for (std::size_t i = 0; i < hosts.size() && placed < cfg.decoys; ++i) {
      FloorBuilder b(s, hosts[i]->floor);
      if (try_place(s, b, rng, *hosts[i], look, true, cfg.decoy_category)) ++placed;
    }
  }
  for (const Stair& st : s.stairs)
    for (int f : {st.lower, st.upper}) {
      SceneObject o;
      o.id = static_cast<int>(s.objects.size());
      o.category = "stairs";
      o.detected_as = "stairs";
      o.position = st.center();
      o.floor = f;
      const Room* hall = nullptr;
      for (const Room& r : s.rooms)
        if (r.floor == f && r.label == "stair hall") hall = &r;
      o.room = hall ? hall->id : -1;
      o.half_x = (st.x1 - st.x0) / 2;
      o.half_y = (st.y1 - st.y0) / 2;
      o.height = 0;
      o.solid = false;
      s.objects.push_back(o);
    }
  s.rasterize();
  return s;
}

std::vector<std::pair<std::string, std::string>> adjacent_label_pairs(const Scene& s) {
  std::set<std::pair<std::string, std::string>> out;
  for (std::size_t i = 0; i < s.rooms.size(); ++i)
    for (std::size_t j = i + 1; j < s.rooms.size(); ++j) {
      const Room &a = s.rooms[i], &b = s.rooms[j];
      if (a.floor != b.floor || a.label == b.label) continue;
      auto w = shared_wall(room_rect(a), room_rect(b));
      if (!w || w->hi - w->lo < s.config.door_width + 0.4 - kEps) continue;
      out.insert(std::minmax(a.label, b.label));
    }
  return {out.begin(), out.end()};
}

// ---------------------------------------------------------------- ground truth and export

SceneGraph Scene::ground_truth_graph() const {
  SceneGraph g;
  for (int f = 0; f < config.floors; ++f) {
    FloorNode& fl = g.ensure_floor(f, f * config.floor_height);
    fl.z_max = f * config.floor_height + config.floor_height;
  }
  for (const Room& r : rooms) {
    RegionNode n;
    n.id = r.id;
    n.caption = {{r.label, 1.0}};
    n.center = r.center();
    n.floor = r.floor;
    for (const SceneObject& o : objects)
      if (o.room == r.id && o.floor == r.floor) n.members.push_back(o.id);
    g.add_region(std::move(n));
  }
  for (const SceneObject& o : objects) {
    ObjectNode n;
    n.id = o.id;
    n.category = o.category;
    n.position = o.position;
    n.floor = o.floor;
    n.confidence = 1.0;
    n.observation_count = 1;
    n.weight = 1.0;
    n.source_objects = {o.id};
    n.region = o.room;
    g.add_object(std::move(n));
  }
  return g;
}

std::vector<std::pair<Vec2, Vec2>> Scene::wall_segments(int floor) const {
  // lines keyed by (along_y, coordinate), each a union of intervals
  std::map<std::pair<bool, long>, std::vector<std::pair<double, double>>> lines;
  auto key = [](double v) { return std::lround(v / 0.01); };
  for (const Room& r : rooms) {
    if (r.floor != floor) continue;
    lines[{true, key(r.x0)}].push_back({r.y0, r.y1});
    lines[{true, key(r.x1)}].push_back({r.y0, r.y1});
    lines[{false, key(r.y0)}].push_back({r.x0, r.x1});
    lines[{false, key(r.y1)}].push_back({r.x0, r.x1});
  }
  std::vector<std::pair<Vec2, Vec2>> out;
  for (auto& [k, iv] : lines) {
    std::sort(iv.begin(), iv.end());
    std::vector<std::pair<double, double>> merged;
    for (auto& p : iv) {
      if (!merged.empty() && p.first <= merged.back().second + kEps)
        merged.back().second = std::max(merged.back().second, p.second);
      else
        merged.push_back(p);
    }
    std::vector<std::pair<double, double>> holes;
    for (const Door& d : doors)
      if (d.floor == floor && d.along_y == k.first && key(d.along_y ? d.center.x : d.center.y) == k.second) {
        double c = d.along_y ? d.center.y : d.center.x;
        holes.push_back({c - d.width / 2, c + d.width / 2});
      }
    std::sort(holes.begin(), holes.end());
    double coord = k.second * 0.01;
    for (auto [lo, hi] : merged) {
      double cur = lo;
      for (auto [a, b] : holes) {
        if (b <= cur || a >= hi) continue;
        if (a > cur) out.push_back(k.first ? std::make_pair(Vec2{coord, cur}, Vec2{coord, a})
                                           : std::make_pair(Vec2{cur, coord}, Vec2{a, coord}));
        cur = std::max(cur, b);
      }
      if (cur < hi)
        out.push_back(k.first ? std::make_pair(Vec2{coord, cur}, Vec2{coord, hi})
                              : std::make_pair(Vec2{cur, coord}, Vec2{hi, coord}));
    }
  }
  return out;
}

namespace {

nlohmann::ordered_json vec_json(Vec2 v) { return nlohmann::ordered_json::array({v.x, v.y}); }
Vec2 vec_from(const nlohmann::json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

}  // namespace

nlohmann::ordered_json Scene::to_json() const {
  nlohmann::ordered_json j;
  j["schema"] = kSceneSchema;
  j["seed"] = seed;
  j["config"] = config.to_json();
  auto& jr = j["rooms"] = nlohmann::ordered_json::array();
  for (const Room& r : rooms)
    jr.push_back({{"id", r.id}, {"floor", r.floor}, {"label", r.label}, {"rect", {r.x0, r.y0, r.x1, r.y1}}});
  auto& jd = j["doors"] = nlohmann::ordered_json::array();
  for (const Door& d : doors)
    jd.push_back({{"floor", d.floor},
                  {"rooms", {d.room_a, d.room_b}},
                  {"center", vec_json(d.center)},
                  {"along_y", d.along_y},
                  {"width", d.width}});
  auto& jw = j["walls"] = nlohmann::ordered_json::array();
  for (int f = 0; f < config.floors; ++f) {
    nlohmann::ordered_json segs = nlohmann::ordered_json::array();
    for (auto& [a, b] : wall_segments(f)) segs.push_back({vec_json(a), vec_json(b)});
    jw.push_back({{"floor", f}, {"polylines", segs}});
  }
  auto& js = j["stairs"] = nlohmann::ordered_json::array();
  for (const Stair& s : stairs)
    js.push_back({{"id", s.id},
                  {"lower", s.lower},
                  {"upper", s.upper},
                  {"run", {s.x0, s.y0, s.x1, s.y1}},
                  {"rise_dir", vec_json(s.rise_dir)},
                  {"rail_side", vec_json(s.rail_side)},
                  {"step_rise", s.step_rise},
                  {"step_run", s.step_run},
                  {"steps", s.steps},
                  {"landing", s.landing},
                  {"room", s.room}});
  auto& jo = j["objects"] = nlohmann::ordered_json::array();
  for (const SceneObject& o : objects)
    jo.push_back({{"id", o.id},
                  {"category", o.category},
                  {"detected_as", o.detected_as},
                  {"position", vec_json(o.position)},
                  {"floor", o.floor},
                  {"room", o.room},
                  {"half", {o.half_x, o.half_y}},
                  {"height", o.height},
                  {"solid", o.solid},
                  {"decoy", o.decoy}});
  return j;
}

Scene Scene::from_json(const nlohmann::json& j) {
  if (j.value("schema", "") != kSceneSchema)
    throw SchemaError("schema", "expected " + std::string(kSceneSchema));
  Scene s;
  try {
    s.seed = j.at("seed").get<std::uint64_t>();
    s.config = SimConfig::from_json(j.at("config"));
    for (const auto& r : j.at("rooms")) {
      auto rc = r.at("rect");
      s.rooms.push_back({r.at("id").get<int>(), r.at("floor").get<int>(), r.at("label").get<std::string>(),
                         rc.at(0).get<double>(), rc.at(1).get<double>(), rc.at(2).get<double>(),
                         rc.at(3).get<double>()});
    }
    for (const auto& d : j.at("doors"))
      s.doors.push_back({d.at("floor").get<int>(), d.at("rooms").at(0).get<int>(), d.at("rooms").at(1).get<int>(),
                         vec_from(d.at("center")), d.at("along_y").get<bool>(), d.at("width").get<double>()});
    for (const auto& t : j.at("stairs")) {
      Stair st;
      st.id = t.at("id").get<int>();
      st.lower = t.at("lower").get<int>();
      st.upper = t.at("upper").get<int>();
      auto run = t.at("run");
      st.x0 = run.at(0).get<double>();
      st.y0 = run.at(1).get<double>();
      st.x1 = run.at(2).get<double>();
      st.y1 = run.at(3).get<double>();
      st.rise_dir = vec_from(t.at("rise_dir"));
      st.rail_side = vec_from(t.at("rail_side"));
      st.step_rise = t.at("step_rise").get<double>();
      st.step_run = t.at("step_run").get<double>();
      st.steps = t.at("steps").get<int>();
      st.landing = t.at("landing").get<double>();
      st.room = t.at("room").get<int>();
      s.stairs.push_back(st);
    }
    for (const auto& o : j.at("objects")) {
      SceneObject so;
      so.id = o.at("id").get<int>();
      so.category = o.at("category").get<std::string>();
      so.detected_as = o.value("detected_as", so.category);
      so.position = vec_from(o.at("position"));
      so.floor = o.at("floor").get<int>();
      so.room = o.at("room").get<int>();
      so.half_x = o.at("half").at(0).get<double>();
      so.half_y = o.at("half").at(1).get<double>();
      so.height = o.at("height").get<double>();
      so.solid = o.value("solid", true);
      so.decoy = o.value("decoy", false);
      s.objects.push_back(so);
    }
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("scene", e.what());
  }
  s.config.validate();
  s.rasterize();
  return s;
}

void Scene::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << to_json().dump() << "\n";
}

Scene Scene::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read scene file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("json", path + ": " + e.what());
  }
  return from_json(j);
}

// ---------------------------------------------------------------- sensing and motion

Observation observe(const Scene& scene, const AgentPose& pose, int view_id) {
  return observe(scene, pose, view_id, scene.config.fov_deg, scene.config.range);
}

Observation observe(const Scene& scene, const AgentPose& pose, int view_id, double fov_deg, double range) {
  Observation obs;
  const int f = scene.floor_of_z(pose.z);
  obs.floor = f;
  const FloorRaster& fr = scene.floors[f];
  const double res = scene.config.resolution;
  const Vec2 o = scene.origin();
  const std::size_t n_cells = fr.solid.data.size();
  thread_local std::vector<std::uint32_t> mark;
  thread_local std::uint32_t stamp = 0;
  if (mark.size() != n_cells) {
    mark.assign(n_cells, 0);
    stamp = 0;
  }
  if (++stamp == 0) {
    std::fill(mark.begin(), mark.end(), 0);
    stamp = 1;
  }
  auto reveal = [&](Cell k) {
    std::size_t i = fr.solid.idx(k);
    if (mark[i] == stamp) return;
    mark[i] = stamp;
    obs.sweep.cells.push_back({k, fr.solid[k] ? CellState::Occupied : CellState::Free, fr.height[k]});
  };

  const double fov = fov_deg * kPi / 180.0;
  const int n_rays = std::max(8, static_cast<int>(std::ceil(fov * range / res)));
  const double px = (pose.x - o.x) / res, py = (pose.y - o.y) / res;
  const double range_cells = range / res;
  for (int i = 0; i <= n_rays; ++i) {
    double ang = pose.heading - fov / 2 + fov * i / n_rays;
    double dx = std::cos(ang), dy = std::sin(ang);
    int c = static_cast<int>(std::floor(px)), r = static_cast<int>(std::floor(py));
    int sc = dx > 0 ? 1 : -1, sr = dy > 0 ? 1 : -1;
    double tdx = std::abs(dx) > 1e-12 ? 1.0 / std::abs(dx) : kInf;
    double tdy = std::abs(dy) > 1e-12 ? 1.0 / std::abs(dy) : kInf;
    double tx = std::abs(dx) > 1e-12 ? ((dx > 0 ? (c + 1 - px) : (px - c)) * tdx) : kInf;
    double ty = std::abs(dy) > 1e-12 ? ((dy > 0 ? (r + 1 - py) : (py - r)) * tdy) : kInf;
    while (fr.solid.in_bounds(r, c)) {
      double ccx = c + 0.5 - px, ccy = r + 0.5 - py;
      if (ccx * ccx + ccy * ccy > range_cells * range_cells) break;
      reveal({r, c});
      if (fr.solid.at(r, c)) break;
      if (tx < ty) {
        c += sc;
        tx += tdx;
      } else {
        r += sr;
        ty += tdy;
      }
    }
  }

  for (const SceneObject& so : scene.objects) {
    if (so.floor != f || distance(so.position, pose.xy()) > range) continue;
    bool seen = false;
    for_cells_in(scene, object_rect(so), [&](Cell k, Vec2) {
      if (mark[fr.solid.idx(k)] == stamp) seen = true;
    });
    if (!seen) continue;
    Detection d;
    d.category = so.detected_as.empty() ? so.category : so.detected_as;
    d.position = so.position;
    d.floor = so.floor;
    if (so.decoy) {
      d.confidence = scene.config.decoy_confidence;
    } else {
      double u = hash_unit(hash_mix(hash_mix(scene.seed, static_cast<std::uint64_t>(so.id)),
                                    static_cast<std::uint64_t>(view_id)));
      d.confidence = std::clamp(scene.config.base_confidence + scene.config.confidence_noise * (2 * u - 1), 0.0, 1.0);
    }
    d.view_id = view_id;
    d.source_object = so.id;
    obs.detections.push_back(d);
  }
  return obs;
}

StepResult apply_action(const Scene& scene, const AgentPose& pose, Action a) {
  StepResult out;
  out.pose = pose;
  const double turn = scene.config.turn_deg * kPi / 180.0;
  switch (a) {
    case Action::TurnLeft: out.pose.heading = wrap_angle(pose.heading + turn); break;
    case Action::TurnRight: out.pose.heading = wrap_angle(pose.heading - turn); break;
    case Action::MoveForward: {
      const double step = scene.config.forward_step;
      const int n = std::max(1, static_cast<int>(std::ceil(step / scene.config.resolution - 1e-9)));
      const Vec2 dir{std::cos(pose.heading), std::sin(pose.heading)};
      double z = pose.z;
      Vec2 q = pose.xy();
      for (int i = 1; i <= n; ++i) {
        q = pose.xy() + dir * (step * i / n);
        const FloorRaster& fr = scene.floors[scene.floor_of_z(z)];
        Cell k = scene.cell_of(q);
        if (!fr.clear.in_bounds(k) || !fr.clear[k] || std::abs(fr.height[k] - z) > scene.config.max_climb + 1e-6) {
          out.collided = true;
          return out;
        }
        z = fr.height[k];
      }
      out.pose.x = q.x;
      out.pose.y = q.y;
      out.pose.z = z;
      out.pose.floor = scene.floor_of_z(z);
      out.translation = step;
      break;
    }
    default: break;
  }
  return out;
}

// ---------------------------------------------------------------- episodes and oracles

nlohmann::ordered_json Episode::to_json() const {
  return {{"schema", kEpisodeSchema},
          {"id", id},
          {"scene", scene},
          {"scene_seed", scene_seed},
          {"start", {{"x", start.x}, {"y", start.y}, {"z", start.z}, {"heading", start.heading}, {"floor", start.floor}}},
          {"target", target},
          {"optimal_length", optimal_length},
          {"success_distance", success_distance},
          {"step_budget", step_budget}};
}

Episode Episode::from_json(const nlohmann::json& j) {
  if (j.value("schema", "") != kEpisodeSchema)
    throw SchemaError("schema", "expected " + std::string(kEpisodeSchema));
  Episode e;
  try {
    e.id = j.at("id").get<int>();
    e.scene = j.value("scene", "");
    e.scene_seed = j.value("scene_seed", std::uint64_t{0});
    const auto& s = j.at("start");
    e.start.x = s.at("x").get<double>();
    e.start.y = s.at("y").get<double>();
    e.start.z = s.value("z", 0.0);
    e.start.heading = s.value("heading", 0.0);
    e.start.floor = s.value("floor", 0);
    e.target = j.at("target").get<std::string>();
    e.optimal_length = j.at("optimal_length").get<double>();
    e.success_distance = j.value("success_distance", 0.1);
    e.step_budget = j.value("step_budget", 500);
  } catch (const nlohmann::json::exception& ex) {
    throw SchemaError("episode", ex.what());
  }
  return e;
}

void write_episodes(const std::vector<Episode>& eps, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  for (const Episode& e : eps) out << e.to_json().dump() << "\n";
}

std::vector<Episode> read_episodes(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read episode file " + path);
  std::vector<Episode> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(Episode::from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::parse_error& e) {
      throw SchemaError("json", path + ": " + e.what());
    }
  }
  return out;
}

std::vector<Cell> viewpoint_zone(const Scene& scene, const SceneObject& o) {
  std::vector<Cell> out;
  if (o.floor < 0 || o.floor >= static_cast<int>(scene.floors.size())) return out;
  const FloorRaster& fr = scene.floors[o.floor];
  const double R = scene.config.viewpoint_radius;
  Rect r = object_rect(o);
  for_cells_in(scene, {r.x0 - R, r.y0 - R, r.x1 + R, r.y1 + R}, [&](Cell k, Vec2 p) {
    if (fr.clear[k] && o.footprint_distance(p) <= R) out.push_back(k);
  });
  return out;
}

namespace {

bool is_target(const SceneObject& o, const std::string& q) { return o.category == q && !o.decoy; }

std::vector<Raster<std::uint8_t>> zone_masks(const Scene& scene, const std::string& target) {
  std::vector<Raster<std::uint8_t>> masks(scene.floors.size(),
                                          Raster<std::uint8_t>(scene.grid_width(), scene.grid_height(), 0));
  for (const SceneObject& o : scene.objects)
    if (is_target(o, target))
      for (Cell k : viewpoint_zone(scene, o)) masks[o.floor][k] = 1;
  return masks;
}

}  // namespace

double GoalField::at(const Scene& s, const AgentPose& p) const {
  int f = s.floor_of_z(p.z);
  if (f >= static_cast<int>(per_floor.size())) return kInf;
  Cell k = s.cell_of(p.xy());
  return per_floor[f].in_bounds(k) ? per_floor[f][k] : kInf;
}

GoalField goal_field(const Scene& scene, const std::string& target) {
  const int gw = scene.grid_width(), gh = scene.grid_height();
  const int F = static_cast<int>(scene.floors.size());
  const std::size_t N = static_cast<std::size_t>(gw) * gh;
  GoalField g;
  g.per_floor.assign(F, Raster<double>(gw, gh, kInf));
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  auto masks = zone_masks(scene, target);
  for (int f = 0; f < F; ++f)
    for (std::size_t i = 0; i < N; ++i)
      if (masks[f].data[i]) {
        g.per_floor[f].data[i] = 0;
        pq.push({0.0, f * N + i});
      }
  const double res = scene.config.resolution, climb = scene.config.max_climb + 1e-6;
  while (!pq.empty()) {
    auto [d, node] = pq.top();
    pq.pop();
    int f = static_cast<int>(node / N);
    std::size_t i = node % N;
    if (d > g.per_floor[f].data[i]) continue;
    const FloorRaster& fr = scene.floors[f];
    Cell k = fr.clear.cell_of(i);
    for (int dr = -1; dr <= 1; ++dr)
      for (int dc = -1; dc <= 1; ++dc) {
        if (!dr && !dc) continue;
        Cell m{k.r + dr, k.c + dc};
        if (!fr.clear.in_bounds(m) || !fr.clear[m] || std::abs(fr.height[m] - fr.height[k]) > climb) continue;
        double nd = d + res * ((dr && dc) ? std::sqrt(2.0) : 1.0);
        double& cur = g.per_floor[f][m];
        if (nd < cur) {
          cur = nd;
          pq.push({nd, f * N + fr.clear.idx(m)});
        }
      }
    int sid = fr.stair[k];
    if (sid >= 0) {
      const Stair& st = scene.stairs[sid];
      int other = st.lower == f ? st.upper : st.lower;
      if (other < F && scene.floors[other].clear[k]) {
        double& cur = g.per_floor[other][k];
        if (d < cur) {
          cur = d;
          pq.push({d, other * N + i});
        }
      }
    }
  }
  return g;
}

std::optional<OraclePlan> oracle_plan(const Scene& scene, const AgentPose& start, const std::string& target) {
  const int gw = scene.grid_width(), gh = scene.grid_height();
  const std::size_t N = static_cast<std::size_t>(gw) * gh;
  const int H = static_cast<int>(std::lround(360.0 / scene.config.turn_deg));
  auto masks = zone_masks(scene, target);
  struct Node {
    AgentPose pose;
    int k;
    int parent;
  };
  std::vector<Node> nodes;
  std::vector<int> seen(scene.floors.size() * N, -1);
  auto key = [&](const AgentPose& p) {
    return scene.floor_of_z(p.z) * N + static_cast<std::size_t>(scene.cell_of(p.xy()).r) * gw +
           scene.cell_of(p.xy()).c;
  };
  auto in_zone = [&](const AgentPose& p) {
    int f = scene.floor_of_z(p.z);
    Cell k = scene.cell_of(p.xy());
    return masks[f].in_bounds(k) && masks[f][k];
  };
  auto turns = [&](int from, int to) {
    int left = ((to - from) % H + H) % H;
    return left <= H / 2 ? std::make_pair(Action::TurnLeft, left) : std::make_pair(Action::TurnRight, H - left);
  };
  auto rebuild = [&](int idx) {
    std::vector<int> chain;
    for (int i = idx; i >= 0; i = nodes[i].parent) chain.push_back(i);
    std::reverse(chain.begin(), chain.end());
    OraclePlan plan;
    for (std::size_t c = 1; c < chain.size(); ++c) {
      auto [act, n] = turns(nodes[chain[c - 1]].k, nodes[chain[c]].k);
      for (int t = 0; t < n; ++t) plan.actions.push_back(act);
      plan.actions.push_back(Action::MoveForward);
      plan.length += scene.config.forward_step;
    }
    return plan;
  };
  nodes.push_back({start, 0, -1});
  if (!scene.floors[scene.floor_of_z(start.z)].clear.in_bounds(scene.cell_of(start.xy()))) return std::nullopt;
  seen[key(start)] = 0;
  if (in_zone(start)) return rebuild(0);
  for (std::size_t head = 0; head < nodes.size(); ++head) {
    for (int k = 0; k < H; ++k) {
      Node cur = nodes[head];
      auto [act, n] = turns(cur.k, k);
      AgentPose p = cur.pose;
      for (int t = 0; t < n; ++t) p = apply_action(scene, p, act).pose;
      StepResult r = apply_action(scene, p, Action::MoveForward);
      if (r.collided) continue;
      std::size_t kk = key(r.pose);
      if (seen[kk] >= 0) continue;
      seen[kk] = static_cast<int>(nodes.size());
      nodes.push_back({r.pose, k, static_cast<int>(head)});
      if (in_zone(r.pose)) return rebuild(static_cast<int>(nodes.size()) - 1);
    }
  }
  return std::nullopt;
}

std::optional<Episode> generate_episode(const Scene& scene, std::uint64_t seed, const EpisodeGenOptions& opt) {
  Rng rng(hash_mix(seed, 0xe915));
  std::vector<std::string> present;
  for (const auto& q : opt.targets) {
    bool any = false;
    for (const SceneObject& o : scene.objects)
      if (is_target(o, q) && !viewpoint_zone(scene, o).empty()) any = true;
    if (any) present.push_back(q);
  }
  if (present.empty()) return std::nullopt;
  std::map<std::string, GoalField> fields;
  const int F = static_cast<int>(scene.floors.size());
  const int H = static_cast<int>(std::lround(360.0 / scene.config.turn_deg));
  for (int attempt = 0; attempt < opt.max_attempts; ++attempt) {
    const std::string q = present[rng.uniform_int(0, static_cast<int>(present.size()) - 1)];
    std::vector<int> start_floors;
    for (int f = 0; f < F; ++f) {
      bool has = false;
      for (const SceneObject& o : scene.objects)
        if (is_target(o, q) && o.floor == f) has = true;
      if (!opt.cross_floor_only || !has) start_floors.push_back(f);
    }
    if (start_floors.empty()) continue;
    int f = start_floors[rng.uniform_int(0, static_cast<int>(start_floors.size()) - 1)];
    Cell k{rng.uniform_int(0, scene.grid_height() - 1), rng.uniform_int(0, scene.grid_width() - 1)};
    const FloorRaster& fr = scene.floors[f];
    if (!fr.clear[k] || fr.stair[k] >= 0 || std::abs(fr.height[k] - fr.z) > 1e-6 || fr.room[k] < 0) continue;
    auto it = fields.find(q);
    if (it == fields.end()) it = fields.emplace(q, goal_field(scene, q)).first;
    double d = it->second.per_floor[f][k];
    if (!std::isfinite(d) || d < opt.min_start_distance) continue;
    Episode e;
    e.scene_seed = scene.seed;
    Vec2 p = scene.cell_center(k);
    e.start.x = p.x;
    e.start.y = p.y;
    e.start.z = fr.z;
    e.start.floor = f;
    e.start.heading = wrap_angle(rng.uniform_int(0, H - 1) * 2 * kPi / H);
    e.target = q;
    auto plan = oracle_plan(scene, e.start, q);
    if (!plan) continue;
    e.optimal_length = plan->length;
    e.success_distance = opt.success_distance;
    e.step_budget = opt.step_budget;
    return e;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------- episode loop

StepDecision ScriptedAgent::step(const Observation&, const AgentPose&) {
  StepDecision d;
  if (next_ < actions_.size()) {
    d.action = actions_[next_++];
  } else {
    d.action = Action::Stop;
    d.goal_stop = true;
  }
  return d;
}

EpisodeResult run_episode(const Scene& scene, const Episode& episode, EpisodeAgent& agent) {
  EpisodeResult res;
  res.episode_id = episode.id;
  res.optimal_length = episode.optimal_length;
  GoalField field = goal_field(scene, episode.target);
  AgentPose pose = episode.start;
  pose.floor = scene.floor_of_z(pose.z);
  res.d_start = field.at(scene, pose);
  agent.reset(scene, episode);
  bool stopped = false, goal_stop = false;
  for (int t = 0; t < episode.step_budget; ++t) {
    Observation obs = observe(scene, pose, t);
    StepDecision dec = agent.step(obs, pose);
    nlohmann::ordered_json row;
    row["step"] = t;
    row["pose"] = {{"x", pose.x}, {"y", pose.y}, {"z", pose.z}, {"heading", pose.heading}};
    row["action"] = action_name(dec.action);
    for (const char* k : {"selected_frontier", "S_s", "S_g", "branch", "candidates"})
      row[k] = dec.trace.contains(k) ? dec.trace[k] : nlohmann::ordered_json();
    row["floor"] = pose.floor;
    for (auto it = dec.trace.begin(); it != dec.trace.end(); ++it)
      if (!row.contains(it.key())) row[it.key()] = it.value();
    res.trajectory.push_back(std::move(row));
    res.steps = t + 1;
    if (dec.action == Action::Stop) {
      stopped = true;
      goal_stop = dec.goal_stop;
      break;
    }
    StepResult sr = apply_action(scene, pose, dec.action);
    if (sr.collided) ++res.collisions;
    res.path_length += sr.translation;
    pose = sr.pose;
  }
  res.final_pose = pose;
  res.d_final = field.at(scene, pose);
  res.success = stopped && res.d_final <= episode.success_distance;
  if (res.success)
    res.outcome = "success";
  else if (!stopped)
    res.outcome = "budget";
  else
    res.outcome = goal_stop ? "false_stop" : "exhausted";
  res.spl = spl(res.success, res.path_length, res.optimal_length);
  double d_start = res.d_start;
  double d_final = std::isfinite(res.d_final) ? res.d_final : d_start;
  res.soft_spl = d_start > 0 && std::isfinite(d_start) ? soft_spl(d_start, d_final, res.path_length, res.optimal_length)
                                                       : (res.success ? 1.0 : 0.0);
  return res;
}

}  // namespace sgnav
