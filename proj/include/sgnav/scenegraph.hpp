#pragma once

#include <functional>
#include <map>
#include <memory>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "sgnav/common.hpp"
#include "sgnav/fixtures.hpp"
#include "sgnav/gridmap.hpp"

namespace sgnav {

enum class Provenance { Observed, Imagined };
const char* provenance_name(Provenance p);

// Label distribution, highest score first.
using Caption = std::vector<std::pair<std::string, double>>;
Caption normalized_top_k(Caption c, std::size_t k);
double caption_score(const Caption& c, const std::string& label);

struct ObjectNode {
  int id = -1;
  std::string category;
  Vec2 position;
  int floor = 0;
  double confidence = 0.0;
  int observation_count = 0;
  double weight = 0.0;  // accumulated confidence behind the weighted mean
  std::vector<double> embedding;
  std::vector<int> source_views;
  std::vector<int> source_objects;  // ground-truth hook, simulator object ids
  Provenance provenance = Provenance::Observed;
  int region = -1;  // parent region id, -1 attaches to the floor
  int unknown_region = -1;
  double corr_score = 0.0;
};

struct RegionNode {
  int id = -1;
  Caption caption;
  Vec2 center;
  std::vector<int> members;
  int floor = 0;
  Provenance provenance = Provenance::Observed;
  int unknown_region = -1;
  std::string reasoning;
};

struct FloorNode {
  int id = 0;
  double z_min = 0.0;
  double z_max = 0.0;
};

struct Detection {
  std::string category;
  Vec2 position;
  int floor = 0;
  double confidence = 0.0;
  int view_id = 0;
  int source_object = -1;
};

struct GroupingParams {
  int k = 5;
  double d_max = 2.5;
  int w_max = 15;
  int n_min = 3;
  int corridor_half_width = 4;  // cells
  int endpoint_margin = 2;      // cells added to each endpoint's footprint radius
  double merge_radius = 0.5;
};

class RegionCaptioner {
 public:
  virtual ~RegionCaptioner() = default;
  // Throws on failure.
  virtual Caption caption(const std::vector<std::string>& member_categories) = 0;
};

// Mean over members of P(category | label), top-2 renormalized.
class PriorCaptioner : public RegionCaptioner {
 public:
  explicit PriorCaptioner(const Fixtures& fx = Fixtures::builtin(), std::size_t top_k = 2) : fx_(fx), k_(top_k) {}
  Caption caption(const std::vector<std::string>& member_categories) override;

 private:
  const Fixtures& fx_;
  std::size_t k_;
};

class SceneGraph {
 public:
  std::vector<FloorNode> floors;
  std::vector<RegionNode> regions;
  std::vector<ObjectNode> objects;

  FloorNode& ensure_floor(int id, double z = 0.0);
  const FloorNode* floor(int id) const;
  ObjectNode* object(int id);
  const ObjectNode* object(int id) const;
  RegionNode* region(int id);
  const RegionNode* region(int id) const;

  int add_object(ObjectNode o);
  int add_region(RegionNode r);
  // Drops every imagined node on the floor.
  void remove_imagined(int floor_id);
  void remove_imagined_if(const std::function<bool(const RegionNode&)>& pred);

  std::vector<std::pair<int, int>> edges() const;  // (parent, child), floors as -(id+1)
  // Throws ValidationError describing the first violated tree property.
  void check_tree() const;

  nlohmann::ordered_json to_json() const;
  static SceneGraph from_json(const nlohmann::json& j);

  int next_object_id = 0;
  int next_region_id = 0;
};

// Connected components of the link graph; each entry lists member indices.
struct GroupedRegion {
  std::vector<int> members;
  Vec2 center;
};

struct WallQuery {
  const Raster<std::uint8_t>* wall = nullptr;
  double resolution = 0.05;
  Vec2 origin;
};

// Wall cells whose centres lie in the corridor between a and b, ignoring cells
// within ra (rb) meters of a (b).
int corridor_wall_count(const WallQuery& w, Vec2 a, Vec2 b, double ra, double rb, int half_width_cells);
double footprint_radius(const std::string& category, const Fixtures& fx = Fixtures::builtin());

std::vector<GroupedRegion> group_regions(const std::vector<ObjectNode>& objects, const WallQuery& walls,
                                         const GroupingParams& p = {}, const Fixtures& fx = Fixtures::builtin());
// All undirected links used by group_regions, as index pairs (i < j).
std::vector<std::pair<int, int>> region_links(const std::vector<ObjectNode>& objects, const WallQuery& walls,
                                              const GroupingParams& p = {}, const Fixtures& fx = Fixtures::builtin());

RegionNode caption_region(RegionNode region, const std::vector<std::string>& member_categories,
                          RegionCaptioner& captioner);

// Merges detections, then regroups every floor that gained an object.
// Throws ValidationError for confidences outside [0,1] before mutating.
void update_graph(SceneGraph& graph, const std::vector<Detection>& detections, const WallQuery& walls,
                  RegionCaptioner& captioner, const GroupingParams& p = {});
// Re-run grouping on one floor, keeping region ids by maximal member overlap.
void regroup_floor(SceneGraph& graph, int floor_id, const WallQuery& walls, RegionCaptioner& captioner,
                   const GroupingParams& p = {});

}  // namespace sgnav
