#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sgnav/common.hpp"

namespace sgnav {

template <class T>
struct Raster {
  int width = 0;
  int height = 0;
  std::vector<T> data;

  Raster() = default;
  Raster(int w, int h, T fill = T{}) : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}
  bool in_bounds(int r, int c) const { return r >= 0 && c >= 0 && r < height && c < width; }
  bool in_bounds(Cell k) const { return in_bounds(k.r, k.c); }
  std::size_t idx(int r, int c) const { return static_cast<std::size_t>(r) * width + c; }
  std::size_t idx(Cell k) const { return idx(k.r, k.c); }
  T& at(int r, int c) { return data[idx(r, c)]; }
  const T& at(int r, int c) const { return data[idx(r, c)]; }
  T& operator[](Cell k) { return data[idx(k)]; }
  const T& operator[](Cell k) const { return data[idx(k)]; }
  Cell cell_of(std::size_t i) const { return {static_cast<int>(i / width), static_cast<int>(i % width)}; }
};

enum class CellState : std::uint8_t { Unknown = 0, Free = 1, Occupied = 2 };

struct BBox {
  int r0 = 0, c0 = 0, r1 = -1, c1 = -1;  // inclusive
  bool empty() const { return r1 < r0 || c1 < c0; }
  void add(Cell k);
  void add(const BBox& o);
  BBox grown(int m, int h, int w) const;
};

class OccupancyGrid {
 public:
  OccupancyGrid(int width = 480, int height = 480, double resolution = 0.05, Vec2 origin = {}, int floor_id = 0);

  int width() const { return cells_.width; }
  int height() const { return cells_.height; }
  double resolution() const { return resolution_; }
  Vec2 origin() const { return origin_; }
  int floor_id() const { return floor_id_; }
  void set_floor_id(int f) { floor_id_ = f; }

  bool in_bounds(Cell k) const { return cells_.in_bounds(k); }
  std::size_t idx(Cell k) const { return cells_.idx(k); }
  CellState state(Cell k) const { return cells_[k]; }
  CellState state(std::size_t i) const { return cells_.data[i]; }
  float height_at(Cell k) const { return heights_[k]; }
  float height_at(std::size_t i) const { return heights_.data[i]; }
  void set(Cell k, CellState s, float h);

  Cell world_to_cell(Vec2 p) const;
  Vec2 cell_center(Cell k) const;
  bool contains(Vec2 p) const { return in_bounds(world_to_cell(p)); }

  const Raster<CellState>& cells() const { return cells_; }
  const Raster<float>& heights() const { return heights_; }
  std::size_t count(CellState s) const;
  // Bounding box of every non-Unknown cell.
  const BBox& known_bbox() const { return known_; }

 private:
  double resolution_;
  Vec2 origin_;
  int floor_id_;
  Raster<CellState> cells_;
  Raster<float> heights_;
  BBox known_;
};

struct SweepCell {
  Cell cell;
  CellState state = CellState::Free;
  float height = 0.0f;
};

struct VisibilitySweep {
  std::vector<SweepCell> cells;
};

// Returns the bounding box of touched cells. Occupied beats Free within one sweep.
BBox integrate_observation(OccupancyGrid& grid, const AgentPose& pose, const VisibilitySweep& sweep);

struct LayerParams {
  double wall_threshold = 1.2;
  double traversable_threshold = 0.3;
  double flat_epsilon = 0.02;
};

struct DerivedLayers {
  Raster<float> gradient;
  Raster<std::uint8_t> wall;
  Raster<std::uint8_t> traversable;
  Raster<std::uint8_t> stair;
};

DerivedLayers compute_gradient_map(const OccupancyGrid& grid, const LayerParams& p = {});
void compute_traversable_and_stair(const OccupancyGrid& grid, DerivedLayers& layers, const LayerParams& p = {});
DerivedLayers compute_layers(const OccupancyGrid& grid, const LayerParams& p = {});
// Recompute all layers inside box (grown by one cell for the gradient stencil).
void update_layers(const OccupancyGrid& grid, DerivedLayers& layers, BBox box, const LayerParams& p = {});

struct Frontier {
  int id = 0;
  std::vector<Cell> cells;
  Cell representative;
  Vec2 location;
  int size() const { return static_cast<int>(cells.size()); }
};

bool is_frontier_cell(const OccupancyGrid& grid, Cell k);
// When usable is given, only cells flagged there may be frontier members.
std::vector<Frontier> detect_frontiers(const OccupancyGrid& grid, int min_frontier_size = 4,
                                       const Raster<std::uint8_t>* usable = nullptr);

// Sorted unique flat indices of the cells inside the ray polygon.
std::vector<std::size_t> raycast_visible_cells(const OccupancyGrid& grid, Vec2 point, int num_rays = 20,
                                               double r_ray = 4.0);
// Even-odd scanline fill at cell centres plus every cell the edges pass through.
std::vector<std::size_t> rasterize_polygon(const OccupancyGrid& grid, const std::vector<Vec2>& poly);

// PGM snapshot (0 occupied, 128 unknown, 255 free) with a JSON sidecar.
void write_pgm(const OccupancyGrid& grid, const std::string& path);
OccupancyGrid read_pgm(const std::string& path);
// Float raster: "SGF1" magic, u32 version, i32 width, i32 height, f64 resolution,
// f64 origin x, f64 origin y, i32 floor, then width*height little-endian f32 row-major.
void write_float_raster(const Raster<float>& r, const OccupancyGrid& ref, const std::string& path);
struct FloatRasterFile {
  Raster<float> raster;
  double resolution = 0;
  Vec2 origin;
  int floor_id = 0;
};
FloatRasterFile read_float_raster(const std::string& path);

}  // namespace sgnav
