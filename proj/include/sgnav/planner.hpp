#pragma once

#include <optional>
#include <vector>

#include "sgnav/gridmap.hpp"

namespace sgnav {

// Geodesic distance in meters; infinity off the traversable set.
struct DistanceField {
  Raster<double> values;
  std::vector<Cell> goals;
  double resolution = 1.0;

  double at(Cell k) const { return values.in_bounds(k) ? values[k] : kInf; }
  bool finite(Cell k) const { return std::isfinite(at(k)); }
};

struct FmmOptions {
  double resolution = 1.0;
  double snap_radius = 0.5;  // meters
  std::optional<Cell> stop_at;
};

// Nearest traversable cell within radius_cells, or nullopt.
std::optional<Cell> snap_to_traversable(const Raster<std::uint8_t>& traversable, Cell c, double radius_cells);

// First-order upwind solve, axis and diagonal stencils, unit speed.
DistanceField fmm_distance_field(const Raster<std::uint8_t>& traversable, Cell goal, const FmmOptions& opt = {});
// Goals that are not traversable are dropped; throws if none remain.
DistanceField fmm_multi_source(const Raster<std::uint8_t>& traversable, const std::vector<Cell>& goals,
                               const FmmOptions& opt = {});

// Plain 8-connected Dijkstra with unit / sqrt(2) steps, same units as FMM.
Raster<double> dijkstra8(const Raster<std::uint8_t>& traversable, Cell goal, double resolution = 1.0);

// Steepest descent to a goal; strictly decreasing values.
std::vector<Cell> descend(const DistanceField& field, Cell start);
std::vector<Cell> subsample(const std::vector<Cell>& dense, int n_max);
std::vector<Cell> extract_waypoints(const DistanceField& field, Cell start, int n_max = 12);

Action next_action(const AgentPose& pose, Vec2 waypoint, double turn_threshold_deg = 15.0);
// STOP when at the verified goal, otherwise next_action.
Action next_action_to_goal(const AgentPose& pose, Vec2 waypoint, bool is_verified_goal, double goal_distance,
                           double success_threshold, double turn_threshold_deg = 15.0);

// Cross-floor stair climbing.
enum class StairStage { Inactive, ApproachEntrance, Climbing, Confirming };
const char* stair_stage_name(StairStage s);

struct StairCandidate {
  Vec2 center;
  Vec2 half;  // box half extents in x,y
  double mean_height = 0.0;
  bool up = true;
  Cell entrance;
  bool has_entrance = false;
};

struct StairParams {
  double base_band = 0.1;      // up/down split and flat band
  double arrival_radius = 0.25;
  double window = 2.0;         // local climbing window side, meters
  int floor_points = 800;
  double climb_rise = 1.0;     // minimum |z - climb start| before a floor counts as reached
};

struct StairClimbState {
  StairStage stage = StairStage::Inactive;
  bool up = true;
  int candidate = -1;
  Cell entrance;
  double climb_start_z = 0.0;
  int scan_turns_left = 0;
  std::vector<StairCandidate> up_list;
  std::vector<StairCandidate> down_list;
};

// Classify a stairs detection by the observed heights inside its box.
// Returns nullopt when no cell of the box has been observed.
std::optional<StairCandidate> classify_stair(const OccupancyGrid& grid, const DerivedLayers& layers, Vec2 center,
                                             Vec2 half, double base_height, const StairParams& p);

// Lowest (up) or highest (down) cell of the window reachable from start
// through traversable cells; nullopt if start itself is not traversable.
std::optional<Cell> climb_local_goal(const OccupancyGrid& grid, const DerivedLayers& layers, Cell start, bool up,
                                     double window_m);

int count_floor_points(const VisibilitySweep& sweep, double z, double band);

struct StairUpdate {
  StairClimbState state;
  std::optional<Cell> goal;
  bool exhausted = false;
};

// One tick of the state machine. floor_points is the count from the current
// sweep; distances for choosing an entrance come from agent_field when given.
StairUpdate update_stair_state(StairClimbState state, const OccupancyGrid& grid, const DerivedLayers& layers,
                               const AgentPose& pose, int frontier_count, int floor_points, const StairParams& p,
                               const DistanceField* agent_field = nullptr);

}  // namespace sgnav
