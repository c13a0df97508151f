#pragma once

#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "sgnav/common.hpp"
#include "sgnav/fixtures.hpp"
#include "sgnav/gridmap.hpp"
#include "sgnav/scenegraph.hpp"

namespace sgnav {

inline constexpr const char* kSceneSchema = "sgnav.scene/1";
inline constexpr const char* kEpisodeSchema = "sgnav.episode/1";

struct SimConfig {
  int floors = 2;
  int rooms_per_floor = 6;  // includes the stair hall
  double width = 13.0;      // meters along x
  double depth = 10.0;      // meters along y
  double resolution = 0.05;
  double wall_thickness = 0.1;
  double door_width = 1.0;
  double min_room = 2.5;
  double extra_door_p = 0.25;
  double floor_height = 2.4;
  double step_rise = 0.15;
  double step_run = 0.25;
  double lane_width = 1.0;
  double landing = 1.2;
  double walkway = 1.4;
  int max_objects_per_room = 6;
  // Decoys: objects of a lookalike category reported as decoy_category.
  std::string decoy_category;
  int decoys = 0;
  double decoy_confidence = 0.7;
  double base_confidence = 0.9;
  double confidence_noise = 0.05;
  double fov_deg = 90.0;
  double range = 5.0;
  double agent_radius = 0.18;
  double max_climb = 0.2;
  double forward_step = 0.25;
  double turn_deg = 30.0;
  double viewpoint_radius = 1.0;

  int steps_per_flight() const;
  double hall_length() const { return 2 * landing + steps_per_flight() * step_run; }
  double hall_depth() const { return (floors - 1) * lane_width + walkway; }
  // Throws ConfigError outside the supported ranges.
  void validate() const;
  nlohmann::ordered_json to_json() const;
  static SimConfig from_json(const nlohmann::json& j);
};

struct Room {
  int id = 0;
  int floor = 0;
  std::string label;
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  Vec2 center() const { return {(x0 + x1) / 2, (y0 + y1) / 2}; }
  bool contains(Vec2 p) const { return p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1; }
};

struct Door {
  int floor = 0;
  int room_a = 0;
  int room_b = 0;
  Vec2 center;
  bool along_y = false;  // the wall runs along y (a vertical wall)
  double width = 1.0;
};

// One straight flight. The run rises along rise_dir from lower to upper.
struct Stair {
  int id = 0;
  int lower = 0;
  int upper = 1;
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;  // run footprint
  Vec2 rise_dir{1, 0};
  double step_rise = 0.15;
  double step_run = 0.25;
  int steps = 16;
  double landing = 1.2;
  Vec2 rail_side{0, 1};  // railing edge of the run, facing the walkway
  int room = -1;         // stair hall on the lower floor
  Vec2 center() const { return {(x0 + x1) / 2, (y0 + y1) / 2}; }
  bool along_x() const { return std::abs(rise_dir.x) > 0.5; }
};

struct SceneObject {
  int id = 0;
  std::string category;
  std::string detected_as;  // what the detector reports; differs from category for decoys
  Vec2 position;
  int floor = 0;
  int room = -1;
  double half_x = 0.2;  // world-axis half extents
  double half_y = 0.2;
  double height = 0.5;
  bool solid = true;
  bool decoy = false;
  // Distance from p to the footprint rectangle.
  double footprint_distance(Vec2 p) const;
};

struct FloorRaster {
  double z = 0.0;
  Raster<std::uint8_t> solid;
  Raster<float> height;  // floor or obstacle-top height
  Raster<int> room;
  Raster<std::uint8_t> clear;  // free cell with no solid centre within the agent radius
  Raster<std::int8_t> stair;   // index of the run covering the cell, -1 elsewhere
};

class Scene {
 public:
  std::uint64_t seed = 0;
  SimConfig config;
  std::vector<Room> rooms;
  std::vector<Door> doors;
  std::vector<Stair> stairs;
  std::vector<SceneObject> objects;
  std::vector<FloorRaster> floors;

  Vec2 origin() const { return {-0.5, -0.5}; }
  int grid_width() const;
  int grid_height() const;
  OccupancyGrid make_grid(int floor_id) const;
  Cell cell_of(Vec2 p) const;
  Vec2 cell_center(Cell k) const;
  // Nearest floor for a height.
  int floor_of_z(double z) const;
  const Room* room_at(int floor, Vec2 p) const;
  bool is_stair_cell(int floor, Cell k) const;

  // Ground-truth graph: one region per room, one object per scene object.
  SceneGraph ground_truth_graph() const;
  // Wall segments (room edges minus door openings), as two-point polylines.
  std::vector<std::pair<Vec2, Vec2>> wall_segments(int floor) const;

  // Rasters are rebuilt from rooms, doors, stairs and objects.
  void rasterize();
  nlohmann::ordered_json to_json() const;
  static Scene from_json(const nlohmann::json& j);
  void save(const std::string& path) const;
  static Scene load(const std::string& path);
};

// Rooms, doors, stairs and labels only.
Scene generate_layout(std::uint64_t seed, const SimConfig& cfg);
// Throws GenerationError when the configuration cannot be realized.
Scene generate_scene(std::uint64_t seed, const SimConfig& cfg = {});

// Pairs of distinct room labels sharing a wall on some floor, sorted.
std::vector<std::pair<std::string, std::string>> adjacent_label_pairs(const Scene& s);
// The category a decoy for q is drawn from.
std::string lookalike_category(const std::string& q);

struct Observation {
  VisibilitySweep sweep;
  std::vector<Detection> detections;
  int floor = 0;
};

Observation observe(const Scene& scene, const AgentPose& pose, int view_id);
Observation observe(const Scene& scene, const AgentPose& pose, int view_id, double fov_deg, double range);

struct StepResult {
  AgentPose pose;
  bool collided = false;
  double translation = 0.0;
};

StepResult apply_action(const Scene& scene, const AgentPose& pose, Action a);

struct Episode {
  int id = 0;
  std::string scene;  // file name or label
  std::uint64_t scene_seed = 0;
  AgentPose start;
  std::string target;
  double optimal_length = 0.0;
  double success_distance = 0.1;
  int step_budget = 500;

  nlohmann::ordered_json to_json() const;
  static Episode from_json(const nlohmann::json& j);
};

void write_episodes(const std::vector<Episode>& eps, const std::string& path);
std::vector<Episode> read_episodes(const std::string& path);

// Geodesic distance (meters) over clear cells of every floor, stairs linking
// floors, from the viewpoint zones of all instances of `target`.
struct GoalField {
  std::vector<Raster<double>> per_floor;
  double at(const Scene& s, const AgentPose& p) const;
};
GoalField goal_field(const Scene& scene, const std::string& target);
// Clear cells within the viewpoint radius of the object's footprint.
std::vector<Cell> viewpoint_zone(const Scene& scene, const SceneObject& o);

// Shortest action sequence, counted in forward moves, from start into any
// viewpoint zone of `target`. Turns are free, so the search is a BFS over
// (floor, cell) expanded with apply_action in every heading; the plan replays
// exactly. nullopt when unreachable.
struct OraclePlan {
  std::vector<Action> actions;
  double length = 0.0;
};
std::optional<OraclePlan> oracle_plan(const Scene& scene, const AgentPose& start, const std::string& target);

struct EpisodeGenOptions {
  std::vector<std::string> targets = {"bed", "toilet", "tv", "sofa", "chair", "plant"};
  bool cross_floor_only = false;
  double min_start_distance = 1.0;
  double success_distance = 0.1;
  int step_budget = 500;
  int max_attempts = 200;
};

// Returns nullopt when no valid episode is found within max_attempts.
std::optional<Episode> generate_episode(const Scene& scene, std::uint64_t seed, const EpisodeGenOptions& opt = {});

struct StepDecision {
  Action action = Action::Stop;
  // Set when STOP is emitted at an accepted goal, clear for exhaustion stops.
  bool goal_stop = false;
  nlohmann::ordered_json trace;
};

class EpisodeAgent {
 public:
  virtual ~EpisodeAgent() = default;
  virtual void reset(const Scene& scene, const Episode& episode) = 0;
  virtual StepDecision step(const Observation& obs, const AgentPose& pose) = 0;
};

struct EpisodeResult {
  int episode_id = 0;
  bool success = false;
  std::string outcome;  // success, false_stop, exhausted, budget
  int steps = 0;
  int collisions = 0;
  double path_length = 0.0;
  double optimal_length = 0.0;
  double d_start = 0.0;
  double d_final = 0.0;
  double spl = 0.0;
  double soft_spl = 0.0;
  AgentPose final_pose;
  std::vector<nlohmann::ordered_json> trajectory;
};

EpisodeResult run_episode(const Scene& scene, const Episode& episode, EpisodeAgent& agent);

// Replays a fixed action list, then STOPs.
class ScriptedAgent : public EpisodeAgent {
 public:
  explicit ScriptedAgent(std::vector<Action> actions) : actions_(std::move(actions)) {}
  void reset(const Scene&, const Episode&) override { next_ = 0; }
  StepDecision step(const Observation& obs, const AgentPose& pose) override;

 private:
  std::vector<Action> actions_;
  std::size_t next_ = 0;
};

}  // namespace sgnav
