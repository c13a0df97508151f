#pragma once

#include <cmath>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sgnav/gridmap.hpp"
#include "sgnav/scenegraph.hpp"

namespace sgnav {

struct GainParams {
  double lambda = 0.5;
  double gamma = 0.8;
  double subgraph_radius = 3.0;
  double r_ray = 4.0;
  int num_rays = 20;
  int max_waypoints = 12;
  // Meters between gain waypoints; 0 always uses max_waypoints.
  double waypoint_spacing = 1.0;
  bool use_objects = true;
  bool use_regions = true;
  bool use_floors = false;
};

struct NodeRef {
  enum Kind { Object, Region, Floor } kind = Object;
  int id = -1;
  bool operator==(const NodeRef&) const = default;
};

struct Subgraph {
  std::vector<int> objects;
  std::vector<int> regions;
  bool empty() const { return objects.empty() && regions.empty(); }
};

// Objects of any provenance within radius of `at` on `floor`, plus their parent regions.
Subgraph extract_subgraph(const SceneGraph& graph, Vec2 at, int floor, double radius);

struct ScoreContext {
  Vec2 agent;
  double map_diagonal = 24.0 * std::sqrt(2.0);
  std::string floor_level = "ground";
};

class NodeScorer {
 public:
  virtual ~NodeScorer() = default;
  virtual double score_object(const ObjectNode& o, const std::string& q, const ScoreContext& ctx) = 0;
  virtual double score_region(const RegionNode& r, const std::string& q, const ScoreContext& ctx) = 0;
  // P(q | floor level) under the floor prior; only used when floors are scored.
  virtual double score_floor(const std::string& level, const std::string& q);
  std::vector<std::string> warnings;

 protected:
  explicit NodeScorer(const Fixtures& fx) : fx_(fx) {}
  const Fixtures& fx_;
};

class DistanceScorer : public NodeScorer {
 public:
  explicit DistanceScorer(const Fixtures& fx = Fixtures::builtin()) : NodeScorer(fx) {}
  double score_object(const ObjectNode& o, const std::string& q, const ScoreContext& ctx) override;
  double score_region(const RegionNode& r, const std::string& q, const ScoreContext& ctx) override;
};

// Region nodes: caption-weighted P(q | label). Object nodes: P(q | region of the
// object's category), marginalized over the co-occurrence table.
class PriorTableScorer : public NodeScorer {
 public:
  explicit PriorTableScorer(const Fixtures& fx = Fixtures::builtin()) : NodeScorer(fx) {}
  double score_object(const ObjectNode& o, const std::string& q, const ScoreContext& ctx) override;
  double score_region(const RegionNode& r, const std::string& q, const ScoreContext& ctx) override;
  double object_cooccurrence(const std::string& category, const std::string& q) const;
};

// Cosine similarity of region-profile vectors; node embeddings win when present.
class EmbeddingScorer : public NodeScorer {
 public:
  explicit EmbeddingScorer(const Fixtures& fx = Fixtures::builtin()) : NodeScorer(fx) {}
  double score_object(const ObjectNode& o, const std::string& q, const ScoreContext& ctx) override;
  double score_region(const RegionNode& r, const std::string& q, const ScoreContext& ctx) override;
  std::vector<double> category_embedding(const std::string& category) const;
};

class LlmClient;
class ExternalLlmScorer : public NodeScorer {
 public:
  ExternalLlmScorer(std::shared_ptr<LlmClient> client, const Fixtures& fx = Fixtures::builtin())
      : NodeScorer(fx), client_(std::move(client)), fallback_(fx) {}
  double score_object(const ObjectNode& o, const std::string& q, const ScoreContext& ctx) override;
  double score_region(const RegionNode& r, const std::string& q, const ScoreContext& ctx) override;

 private:
  double ask(const std::string& description, const std::string& q, double fallback);
  std::shared_ptr<LlmClient> client_;
  PriorTableScorer fallback_;
  std::map<std::pair<std::string, std::string>, double> cache_;
};

enum class ScorerKind { Distance, Embedding, PriorTable, ExternalLLM };
ScorerKind scorer_kind_from_name(const std::string& s);
const char* scorer_kind_name(ScorerKind k);
std::unique_ptr<NodeScorer> make_scorer(ScorerKind k, std::shared_ptr<LlmClient> client = nullptr,
                                        const Fixtures& fx = Fixtures::builtin());

struct ExploitationResult {
  double value = 0.0;
  std::optional<NodeRef> contributing_node;
};

ExploitationResult exploitation_gain(const SceneGraph& graph, const Subgraph& sub, const std::string& q,
                                     NodeScorer& scorer, const ScoreContext& ctx, const GainParams& p = {});

struct ExplorationResult {
  double value = 0.0;
  std::vector<int> first_seen;  // |A_i| per waypoint
};

// Throws ValidationError on an empty path.
ExplorationResult exploration_gain(const OccupancyGrid& grid, const std::vector<Vec2>& path, double gamma = 0.8,
                                   int num_rays = 20, double r_ray = 4.0);

struct GainRecord {
  int frontier_id = 0;
  double s_s = 0.0;
  double s_g = 0.0;
  std::optional<NodeRef> contributing_node;
  std::vector<Vec2> path;
  double geodesic = 0.0;
};

// Index into records of the chosen frontier. Throws ValidationError when empty.
std::size_t select_frontier(const std::vector<GainRecord>& records, double lambda);

}  // namespace sgnav
