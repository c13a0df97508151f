#include "sgnav/gridmap.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <nlohmann/json.hpp>

#include "sgnav/dda.hpp"

namespace sgnav {

namespace {
constexpr int kDr8[8] = {-1, -1, -1, 0, 0, 1, 1, 1};
constexpr int kDc8[8] = {-1, 0, 1, -1, 1, -1, 0, 1};
constexpr int kDr4[4] = {-1, 1, 0, 0};
constexpr int kDc4[4] = {0, 0, -1, 1};
}  // namespace

void BBox::add(Cell k) {
  if (empty()) {
    r0 = r1 = k.r;
    c0 = c1 = k.c;
    return;
  }
  r0 = std::min(r0, k.r);
  r1 = std::max(r1, k.r);
  c0 = std::min(c0, k.c);
  c1 = std::max(c1, k.c);
}

void BBox::add(const BBox& o) {
  if (o.empty()) return;
  add(Cell{o.r0, o.c0});
  add(Cell{o.r1, o.c1});
}

BBox BBox::grown(int m, int h, int w) const {
  if (empty()) return *this;
  return {std::max(0, r0 - m), std::max(0, c0 - m), std::min(h - 1, r1 + m), std::min(w - 1, c1 + m)};
}

OccupancyGrid::OccupancyGrid(int width, int height, double resolution, Vec2 origin, int floor_id)
    : resolution_(resolution),
      origin_(origin),
      floor_id_(floor_id),
      cells_(width, height, CellState::Unknown),
      heights_(width, height, std::numeric_limits<float>::quiet_NaN()) {
  if (!(resolution > 0) || width <= 0 || height <= 0) throw ValidationError("grid needs positive size and resolution");
}

void OccupancyGrid::set(Cell k, CellState s, float h) {
  if (!in_bounds(k)) throw OutOfBoundsError("cell outside grid");
  if (s == CellState::Unknown) {
    if (cells_[k] != CellState::Unknown) throw ValidationError("known cells never revert to unknown");
    return;
  }
  cells_[k] = s;
  heights_[k] = h;
  known_.add(k);
}

Cell OccupancyGrid::world_to_cell(Vec2 p) const {
  return {static_cast<int>(std::floor((p.y - origin_.y) / resolution_)),
          static_cast<int>(std::floor((p.x - origin_.x) / resolution_))};
}

Vec2 OccupancyGrid::cell_center(Cell k) const {
  return {origin_.x + (k.c + 0.5) * resolution_, origin_.y + (k.r + 0.5) * resolution_};
}

std::size_t OccupancyGrid::count(CellState s) const {
  return static_cast<std::size_t>(std::count(cells_.data.begin(), cells_.data.end(), s));
}

BBox integrate_observation(OccupancyGrid& grid, const AgentPose& pose, const VisibilitySweep& sweep) {
  if (!grid.contains(pose.xy())) throw OutOfBoundsError("pose outside grid");
  BBox touched;
  std::vector<std::size_t> occupied;
  for (const auto& sc : sweep.cells)
    if (sc.state == CellState::Occupied && grid.in_bounds(sc.cell)) occupied.push_back(grid.idx(sc.cell));
  std::sort(occupied.begin(), occupied.end());
  for (const auto& sc : sweep.cells) {
    if (!grid.in_bounds(sc.cell) || sc.state == CellState::Unknown) continue;
    if (sc.state == CellState::Free && std::binary_search(occupied.begin(), occupied.end(), grid.idx(sc.cell)))
      continue;
    grid.set(sc.cell, sc.state, sc.height);
    touched.add(sc.cell);
  }
  return touched;
}

namespace {

void fill_layers(const OccupancyGrid& grid, DerivedLayers& L, const BBox& b, const LayerParams& p) {
  const auto& H = grid.heights();
  const auto& S = grid.cells();
  for (int r = b.r0; r <= b.r1; ++r) {
    for (int c = b.c0; c <= b.c1; ++c) {
      std::size_t i = H.idx(r, c);
      float h = H.data[i];
      float g = 0.0f;
      if (!std::isnan(h)) {
        for (int k = 0; k < 8; ++k) {
          int rr = r + kDr8[k], cc = c + kDc8[k];
          if (!H.in_bounds(rr, cc)) continue;
          float hn = H.at(rr, cc);
          if (std::isnan(hn)) continue;
          g = std::max(g, std::fabs(h - hn));
        }
      }
      L.gradient.data[i] = g;
      L.wall.data[i] = g >= p.wall_threshold ? 1 : 0;
      bool trav = g <= p.traversable_threshold && S.data[i] == CellState::Free;
      L.traversable.data[i] = trav ? 1 : 0;
      L.stair.data[i] = trav && g > p.flat_epsilon ? 1 : 0;
    }
  }
}

DerivedLayers blank_layers(const OccupancyGrid& grid) {
  DerivedLayers L;
  L.gradient = Raster<float>(grid.width(), grid.height(), 0.0f);
  L.wall = Raster<std::uint8_t>(grid.width(), grid.height(), 0);
  L.traversable = Raster<std::uint8_t>(grid.width(), grid.height(), 0);
  L.stair = Raster<std::uint8_t>(grid.width(), grid.height(), 0);
  return L;
}

BBox full_box(const OccupancyGrid& g) { return {0, 0, g.height() - 1, g.width() - 1}; }

}  // namespace

DerivedLayers compute_gradient_map(const OccupancyGrid& grid, const LayerParams& p) {
  DerivedLayers L = blank_layers(grid);
  fill_layers(grid, L, full_box(grid), p);
  std::fill(L.traversable.data.begin(), L.traversable.data.end(), 0);
  std::fill(L.stair.data.begin(), L.stair.data.end(), 0);
  return L;
}

void compute_traversable_and_stair(const OccupancyGrid& grid, DerivedLayers& L, const LayerParams& p) {
  const auto& S = grid.cells();
  for (std::size_t i = 0; i < S.data.size(); ++i) {
    bool trav = L.gradient.data[i] <= p.traversable_threshold && S.data[i] == CellState::Free;
    L.traversable.data[i] = trav ? 1 : 0;
    L.stair.data[i] = trav && L.gradient.data[i] > p.flat_epsilon ? 1 : 0;
  }
}

DerivedLayers compute_layers(const OccupancyGrid& grid, const LayerParams& p) {
  DerivedLayers L = blank_layers(grid);
  fill_layers(grid, L, full_box(grid), p);
  return L;
}

void update_layers(const OccupancyGrid& grid, DerivedLayers& L, BBox box, const LayerParams& p) {
  if (box.empty()) return;
  if (L.gradient.width != grid.width() || L.gradient.height != grid.height()) {
    L = compute_layers(grid, p);
    return;
  }
  fill_layers(grid, L, box.grown(1, grid.height(), grid.width()), p);
}

bool is_frontier_cell(const OccupancyGrid& grid, Cell k) {
  if (!grid.in_bounds(k) || grid.state(k) != CellState::Free) return false;
  for (int d = 0; d < 4; ++d) {
    Cell n{k.r + kDr4[d], k.c + kDc4[d]};
    if (grid.in_bounds(n) && grid.state(n) == CellState::Unknown) return true;
  }
  return false;
}

std::vector<Frontier> detect_frontiers(const OccupancyGrid& grid, int min_frontier_size,
                                       const Raster<std::uint8_t>* usable) {
  std::vector<Frontier> out;
  const BBox& b = grid.known_bbox();
  if (b.empty()) return out;
  const int W = grid.width();
  // 0 = not a frontier cell, 1 = unvisited frontier cell, 2 = visited
  Raster<std::uint8_t> mark(W, grid.height(), 0);
  for (int r = b.r0; r <= b.r1; ++r)
    for (int c = b.c0; c <= b.c1; ++c)
      if (is_frontier_cell(grid, {r, c}) && (!usable || usable->at(r, c))) mark.at(r, c) = 1;
  std::vector<Cell> stack;
  for (int r = b.r0; r <= b.r1; ++r) {
    for (int c = b.c0; c <= b.c1; ++c) {
      if (mark.at(r, c) != 1) continue;
      Frontier f;
      mark.at(r, c) = 2;
      stack.push_back({r, c});
      while (!stack.empty()) {
        Cell k = stack.back();
        stack.pop_back();
        f.cells.push_back(k);
        for (int d = 0; d < 8; ++d) {
          Cell n{k.r + kDr8[d], k.c + kDc8[d]};
          if (mark.in_bounds(n) && mark[n] == 1) {
            mark[n] = 2;
            stack.push_back(n);
          }
        }
      }
      if (f.size() < min_frontier_size) continue;
      std::sort(f.cells.begin(), f.cells.end());
      double mr = 0, mc = 0;
      for (const Cell& k : f.cells) {
        mr += k.r;
        mc += k.c;
      }
      mr /= f.size();
      mc /= f.size();
      double best = kInf;
      for (const Cell& k : f.cells) {
        double d = (k.r - mr) * (k.r - mr) + (k.c - mc) * (k.c - mc);
        if (d < best) {
          best = d;
          f.representative = k;
        }
      }
      f.location = grid.cell_center(f.representative);
      out.push_back(std::move(f));
    }
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const Frontier& a, const Frontier& b) { return a.representative < b.representative; });
  for (std::size_t i = 0; i < out.size(); ++i) out[i].id = static_cast<int>(i);
  return out;
}

std::vector<std::size_t> rasterize_polygon(const OccupancyGrid& grid, const std::vector<Vec2>& poly) {
  std::vector<std::size_t> out;
  if (poly.empty()) return out;
  const double res = grid.resolution();
  const Vec2 o = grid.origin();
  std::vector<Vec2> g(poly.size());
  double xmin = kInf, xmax = -kInf, ymin = kInf, ymax = -kInf;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    g[i] = {(poly[i].x - o.x) / res, (poly[i].y - o.y) / res};
    xmin = std::min(xmin, g[i].x);
    xmax = std::max(xmax, g[i].x);
    ymin = std::min(ymin, g[i].y);
    ymax = std::max(ymax, g[i].y);
  }
  int r0 = std::max(0, static_cast<int>(std::floor(ymin)) - 1);
  int r1 = std::min(grid.height() - 1, static_cast<int>(std::floor(ymax)) + 1);
  int c0 = std::max(0, static_cast<int>(std::floor(xmin)) - 1);
  int c1 = std::min(grid.width() - 1, static_cast<int>(std::floor(xmax)) + 1);
  if (r1 < r0 || c1 < c0) return out;
  const int bw = c1 - c0 + 1;
  std::vector<std::uint8_t> mark(static_cast<std::size_t>(bw) * (r1 - r0 + 1), 0);
  auto put = [&](int r, int c) {
    if (r < r0 || r > r1 || c < c0 || c > c1) return;
    mark[static_cast<std::size_t>(r - r0) * bw + (c - c0)] = 1;
  };
  std::vector<double> xs;
  const std::size_t n = g.size();
  for (int r = r0; r <= r1; ++r) {
    const double y = r + 0.5;
    xs.clear();
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2& a = g[i];
      const Vec2& b = g[(i + 1) % n];
      if ((a.y <= y && y < b.y) || (b.y <= y && y < a.y)) xs.push_back(a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y));
    }
    std::sort(xs.begin(), xs.end());
    for (std::size_t k = 0; k + 1 < xs.size(); k += 2) {
      int ca = static_cast<int>(std::ceil(xs[k] - 0.5));
      int cb = static_cast<int>(std::ceil(xs[k + 1] - 0.5)) - 1;
      for (int c = std::max(ca, c0); c <= std::min(cb, c1); ++c) put(r, c);
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& a = g[i];
    const Vec2& b = g[(i + 1) % n];
    dda_walk(a.x, a.y, b.x, b.y, [&](int r, int c, double) {
      put(r, c);
      return true;
    });
  }
  for (int r = r0; r <= r1; ++r)
    for (int c = c0; c <= c1; ++c)
      if (mark[static_cast<std::size_t>(r - r0) * bw + (c - c0)]) out.push_back(grid.idx({r, c}));
  return out;
}

std::vector<std::size_t> raycast_visible_cells(const OccupancyGrid& grid, Vec2 point, int num_rays, double r_ray) {
  if (num_rays < 3) throw ValidationError("raycast needs at least 3 rays");
  Cell pc = grid.world_to_cell(point);
  if (!grid.in_bounds(pc)) throw OutOfBoundsError("raycast origin outside grid");
  if (grid.state(pc) == CellState::Occupied) return {};
  const double res = grid.resolution();
  const Vec2 o = grid.origin();
  const double gx = (point.x - o.x) / res, gy = (point.y - o.y) / res;
  const double len = r_ray / res;
  std::vector<Vec2> poly;
  poly.reserve(num_rays);
  for (int j = 0; j < num_rays; ++j) {
    const double th = 2.0 * kPi * j / num_rays;
    const double ex = gx + len * std::cos(th), ey = gy + len * std::sin(th);
    double t_hit = 1.0;
    dda_walk(gx, gy, ex, ey, [&](int r, int c, double t) {
      if (!grid.in_bounds({r, c}) || grid.state(Cell{r, c}) == CellState::Occupied) {
        t_hit = t;
        return false;
      }
      return true;
    });
    poly.push_back({point.x + (ex - gx) * t_hit * res, point.y + (ey - gy) * t_hit * res});
  }
  return rasterize_polygon(grid, poly);
}

void write_pgm(const OccupancyGrid& grid, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path);
  f << "P5\n" << grid.width() << " " << grid.height() << "\n255\n";
  std::vector<unsigned char> row(grid.width());
  for (int r = 0; r < grid.height(); ++r) {
    for (int c = 0; c < grid.width(); ++c) {
      CellState s = grid.state(Cell{r, c});
      row[c] = s == CellState::Occupied ? 0 : (s == CellState::Unknown ? 128 : 255);
    }
    f.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
  }
  nlohmann::json side = {{"resolution", grid.resolution()},
                         {"origin", {grid.origin().x, grid.origin().y}},
                         {"floor_id", grid.floor_id()},
                         {"width", grid.width()},
                         {"height", grid.height()}};
  std::ofstream s(path + ".json");
  s << side.dump(2) << "\n";
}

OccupancyGrid read_pgm(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot read " + path);
  std::string magic;
  int w = 0, h = 0, maxv = 0;
  f >> magic >> w >> h >> maxv;
  f.get();
  if (magic != "P5" || w <= 0 || h <= 0 || maxv != 255) throw ValidationError("not an 8-bit P5 map: " + path);
  double res = 0.05;
  Vec2 origin;
  int floor_id = 0;
  std::ifstream s(path + ".json");
  if (s) {
    nlohmann::json side = nlohmann::json::parse(s);
    res = side.value("resolution", res);
    if (side.contains("origin")) origin = {side["origin"][0].get<double>(), side["origin"][1].get<double>()};
    floor_id = side.value("floor_id", 0);
  }
  OccupancyGrid g(w, h, res, origin, floor_id);
  std::vector<unsigned char> row(w);
  for (int r = 0; r < h; ++r) {
    f.read(reinterpret_cast<char*>(row.data()), w);
    for (int c = 0; c < w; ++c) {
      if (row[c] == 0) g.set({r, c}, CellState::Occupied, std::numeric_limits<float>::quiet_NaN());
      else if (row[c] == 255) g.set({r, c}, CellState::Free, std::numeric_limits<float>::quiet_NaN());
    }
  }
  return g;
}

namespace {
template <class T>
void put_le(std::ofstream& f, T v) {
  f.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <class T>
T get_le(std::ifstream& f) {
  T v{};
  f.read(reinterpret_cast<char*>(&v), sizeof(T));
  return v;
}
}  // namespace

void write_float_raster(const Raster<float>& r, const OccupancyGrid& ref, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path);
  f.write("SGF1", 4);
  put_le<std::uint32_t>(f, 1);
  put_le<std::int32_t>(f, r.width);
  put_le<std::int32_t>(f, r.height);
  put_le<double>(f, ref.resolution());
  put_le<double>(f, ref.origin().x);
  put_le<double>(f, ref.origin().y);
  put_le<std::int32_t>(f, ref.floor_id());
  f.write(reinterpret_cast<const char*>(r.data.data()), static_cast<std::streamsize>(r.data.size() * sizeof(float)));
}

FloatRasterFile read_float_raster(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot read " + path);
  char magic[4];
  f.read(magic, 4);
  if (std::memcmp(magic, "SGF1", 4) != 0) throw ValidationError("bad raster magic: " + path);
  if (get_le<std::uint32_t>(f) != 1) throw ValidationError("unsupported raster version");
  FloatRasterFile out;
  int w = get_le<std::int32_t>(f), h = get_le<std::int32_t>(f);
  out.resolution = get_le<double>(f);
  out.origin.x = get_le<double>(f);
  out.origin.y = get_le<double>(f);
  out.floor_id = get_le<std::int32_t>(f);
  out.raster = Raster<float>(w, h, 0.0f);
  f.read(reinterpret_cast<char*>(out.raster.data.data()), static_cast<std::streamsize>(out.raster.data.size() * sizeof(float)));
  if (!f) throw ValidationError("truncated raster: " + path);
  return out;
}

}  // namespace sgnav
