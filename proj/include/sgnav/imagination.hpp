#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sgnav/gridmap.hpp"
#include "sgnav/image.hpp"
#include "sgnav/scenegraph.hpp"

namespace sgnav {

struct UnknownRegion {
  int id = 0;
  std::vector<Cell> cells;
  Vec2 center;
  Cell center_px;  // pixel row/col of the centroid
  std::vector<std::pair<int, double>> nearby_regions;  // (region id, distance)
};

struct UnknownParams {
  int min_unknown_area = 40;     // cells
  double context_radius = 4.0;   // meters
  double max_extent = 4.0;       // larger components are tiled into pieces this wide
  int search_margin = 40;        // cells around the known area that are scanned
};

std::vector<UnknownRegion> identify_unknown_regions(const OccupancyGrid& grid, const SceneGraph* graph = nullptr,
                                                    const UnknownParams& p = {});

struct BevMarker {
  enum Kind { Unknown, Region, Object } kind = Unknown;
  int id = 0;
  Cell px;
  std::string label;
};

struct BevLayout {
  const OccupancyGrid* grid = nullptr;
  std::vector<BevMarker> markers;
  std::string text;  // the "Unknown region k, center: ..." block
};

BevLayout build_bev(const SceneGraph& graph, const OccupancyGrid& grid, const std::vector<UnknownRegion>& unknowns);
// Pixel-space helpers, [row, col] with fractional parts.
std::pair<double, double> world_to_pixel(const OccupancyGrid& grid, Vec2 p);
Vec2 pixel_to_world(const OccupancyGrid& grid, double row, double col);
Image render_bev(const BevLayout& bev, int scale = 1);
// The full scene-completion prompt for target.
std::string build_prompt(const std::string& target, const BevLayout& bev);

struct PredictedObject {
  std::string category;
  std::pair<double, double> center;  // pixel [row, col]
  double confidence = 0.0;
  double corr_score = 0.0;
  bool operator==(const PredictedObject&) const = default;
};

struct PredictedRegion {
  int target_unknown_region_id = 0;
  Caption caption;
  std::string reasoning;
  std::pair<double, double> center;  // pixel [row, col]
  std::vector<PredictedObject> objects;
  bool operator==(const PredictedRegion&) const = default;
};

struct ParseOptions {
  bool full_vocabulary = false;
  double sum_tolerance = 0.05;
};

struct ParseResult {
  std::vector<PredictedRegion> regions;
  std::vector<std::string> warnings;
};

// Throws MissingFlagsError or SchemaError (naming the field).
ParseResult parse_prediction(const std::string& text, const ParseOptions& opt = {});
std::string serialize_prediction(const std::vector<PredictedRegion>& regions);

struct PredictionContext {
  const SceneGraph* graph = nullptr;
  const BevLayout* bev = nullptr;
  const std::vector<UnknownRegion>* unknowns = nullptr;
  std::string target;
  std::string floor_level = "ground";  // which floor prior applies
};

class ScenePredictor {
 public:
  virtual ~ScenePredictor() = default;
  // Throws TransportError on transport failure and parse errors on bad output.
  virtual ParseResult predict(const PredictionContext& ctx) = 0;
};

// Scores each choice by adjacency to the captions of nearby regions; falls back
// to the floor prior when nothing is nearby.
class AdjacencyPriorPredictor : public ScenePredictor {
 public:
  explicit AdjacencyPriorPredictor(const Fixtures& fx = Fixtures::builtin(), bool full_vocabulary = false)
      : fx_(fx), full_(full_vocabulary) {}
  ParseResult predict(const PredictionContext& ctx) override;
  Caption score(const UnknownRegion& u, const SceneGraph& graph, const std::string& level) const;

 private:
  const Fixtures& fx_;
  bool full_;
};

// Replays canned responses in order, the last one repeating.
class ScriptedPredictor : public ScenePredictor {
 public:
  explicit ScriptedPredictor(std::vector<std::string> responses, ParseOptions opt = {})
      : responses_(std::move(responses)), opt_(opt) {}
  ParseResult predict(const PredictionContext& ctx) override;

 private:
  std::vector<std::string> responses_;
  std::size_t next_ = 0;
  ParseOptions opt_;
};

class LlmClient;
class HttpPredictor : public ScenePredictor {
 public:
  explicit HttpPredictor(std::shared_ptr<LlmClient> client, ParseOptions opt = {})
      : client_(std::move(client)), opt_(opt) {}
  ParseResult predict(const PredictionContext& ctx) override;

 private:
  std::shared_ptr<LlmClient> client_;
  ParseOptions opt_;
};

struct PredictionOutcome {
  bool transport_failed = false;
  std::string error;
  std::vector<std::string> warnings;
  int regions_added = 0;
};

// Replaces the imagined nodes of this floor with the predictor's output.
PredictionOutcome predict_scene_graph(SceneGraph& graph, const OccupancyGrid& grid, int floor_id,
                                      ScenePredictor& predictor, const PredictionContext& ctx);
// Drops imagined regions whose centre cell has since been observed.
int prune_observed_imagined(SceneGraph& graph, const OccupancyGrid& grid, int floor_id);

struct GraphScore {
  double recall = 0.0;
  std::optional<double> precision;
  int matches = 0;
  int truth_regions = 0;
  int predicted_regions = 0;
};

// Maximum bipartite matching: centres within match_radius on the same floor and
// the truth label among the top-k captions.
GraphScore graph_precision_recall(const SceneGraph& predicted, const SceneGraph& truth, int k,
                                  double match_radius = 2.0);

}  // namespace sgnav
