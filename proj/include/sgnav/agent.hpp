#pragma once

#include <memory>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "sgnav/fixtures.hpp"
#include "sgnav/gain.hpp"
#include "sgnav/gridmap.hpp"
#include "sgnav/imagination.hpp"
#include "sgnav/planner.hpp"
#include "sgnav/scenegraph.hpp"
#include "sgnav/sim.hpp"

namespace sgnav {

// Ablation ladder:
//   a  nearest frontier
//   b  graph + exploitation gain, nearest frontier otherwise
//   c  b + imagination + stair pseudo-frontier
//   d  c + exploration gain fallback
//   e  d + context-aware verification
//   f  e on the ground-truth graph
enum class AgentVariant { A, B, C, D, E, F };
const char* variant_name(AgentVariant v);
AgentVariant variant_from_name(const std::string& s);

struct AgentConfig {
  AgentVariant variant = AgentVariant::E;
  GainParams gain;
  ScorerKind scorer = ScorerKind::PriorTable;
  // Candidate ledger.
  double conf_min = 0.6;
  int min_sightings = 2;
  double candidate_merge = 0.5;
  // Verifier.
  int votes = 3;
  int verify_retries = 2;
  int verify_step_penalty = 0;
  bool context_check = true;
  double context_min = 0.1;
  double lookalike_confusion = 0.5;  // chance one vote mistakes a lookalike for the target
  double vote_error = 0.0;           // chance one vote on a true target says no
  // Motion and planning.
  double success_threshold = 0.1;
  double stop_margin = 0.8;  // STOP within min half extent + margin of the goal centre
  double inflation = 0.25;
  double flat_band = 0.1;
  double lookahead = 0.5;
  double turn_threshold_deg = 15.0;
  int min_frontier_size = 4;
  int replan_period = 25;
  int imagination_period = 10;
  int panorama_turns = 12;
  bool stairs = true;
  StairParams stair;
  UnknownParams unknown;
  GroupingParams grouping;
  std::uint64_t seed = 0;

  // Feature switches implied by the variant.
  bool uses_graph_gain() const { return variant != AgentVariant::A; }
  bool uses_imagination() const;
  bool uses_pseudo_frontier() const;
  bool uses_exploration_gain() const;
  bool uses_verification() const;
  bool uses_truth_graph() const { return variant == AgentVariant::F; }

  void validate() const;
  nlohmann::ordered_json to_json() const;
  // Missing keys keep their defaults; unknown keys throw ConfigError.
  static AgentConfig from_json(const nlohmann::json& j);
};

enum class Verdict { Unverified, Accepted, Rejected };
const char* verdict_name(Verdict v);

struct GoalCandidate {
  int object_id = 0;
  std::string category;
  Vec2 position;
  int floor = 0;
  double best_confidence = 0.0;
  int sightings = 0;
  Verdict verified = Verdict::Unverified;
  std::vector<bool> votes;
  int source_object = -1;  // simulator ground-truth hook
  bool eligible(int min_sightings) const { return verified == Verdict::Unverified && sightings >= min_sightings; }
};

// Detections of q at or above conf_min add a sighting to the candidate within
// merge radius on the same floor, or open a new one. One sighting per
// candidate per call.
void update_candidates(std::vector<GoalCandidate>& candidates, const std::vector<Detection>& detections,
                       const std::string& q, double conf_min = 0.6, double merge_radius = 0.5);
// Indices of eligible candidates, most confident first.
std::vector<std::size_t> verification_order(const std::vector<GoalCandidate>& candidates, int min_sightings = 2);

struct VerifyContext {
  const Scene* scene = nullptr;       // ground-truth hook
  const SceneGraph* graph = nullptr;  // local neighbourhood
  const OccupancyGrid* grid = nullptr;
  std::string target;
};

class GoalVerifier {
 public:
  virtual ~GoalVerifier() = default;
  // One yes/no answer for the query_index-th context. Throws TransportError.
  virtual bool vote(const GoalCandidate& c, const VerifyContext& ctx, int query_index) = 0;
};

// Always yes: verification switched off.
class AcceptAllVerifier : public GoalVerifier {
 public:
  bool vote(const GoalCandidate&, const VerifyContext&, int) override { return true; }
};

// Yes iff the underlying object is a q (a lookalike fools a single vote with
// probability lookalike_confusion) and, when enabled, the candidate's region
// context supports q: sum of caption weight times P(q | label) over the labels
// of its region, recaptioned without the candidate, reaches context_min.
// Candidates outside any region pass the context check.
class DeterministicVerifier : public GoalVerifier {
 public:
  struct Params {
    bool context_check = true;
    double context_min = 0.1;
    double lookalike_confusion = 0.5;
    double vote_error = 0.0;
    std::uint64_t seed = 0;
  };
  explicit DeterministicVerifier(Params p, const Fixtures& fx = Fixtures::builtin()) : p_(p), fx_(fx) {}
  bool vote(const GoalCandidate& c, const VerifyContext& ctx, int query_index) override;
  // The context score used by the check; nullopt when the candidate has no region.
  std::optional<double> context_score(const GoalCandidate& c, const VerifyContext& ctx) const;

 private:
  Params p_;
  const Fixtures& fx_;
};

std::string verification_prompt(const std::string& target);
// Occupancy crop around the candidate with a red box on it.
Image render_context_crop(const OccupancyGrid& grid, Vec2 at, double half_extent_m = 3.0);

class LlmClient;
// Sends the verification prompt with a context crop; yes/no parsed from the reply.
class HttpVerifier : public GoalVerifier {
 public:
  explicit HttpVerifier(std::shared_ptr<LlmClient> client) : client_(std::move(client)) {}
  bool vote(const GoalCandidate& c, const VerifyContext& ctx, int query_index) override;

 private:
  std::shared_ptr<LlmClient> client_;
};

// Majority of `votes` queries. A query that fails every retry leaves the
// candidate Unverified. Rejected candidates are returned unchanged.
Verdict verify_goal(GoalCandidate& c, const VerifyContext& ctx, GoalVerifier& verifier, int votes = 3,
                    int retries = 2);

// max over labels of P(q | l) * (1 - (1 - prior(level, l))^rooms).
double floor_jump_score(const Fixtures& fx, const std::string& q, const std::string& level, int rooms = 5);

class SGImagineNavAgent : public EpisodeAgent {
 public:
  explicit SGImagineNavAgent(AgentConfig cfg = {}, const Fixtures& fx = Fixtures::builtin());
  ~SGImagineNavAgent() override;

  // Replace the defaults (prior predictor, deterministic or accept-all verifier).
  void set_predictor(std::shared_ptr<ScenePredictor> p) { predictor_override_ = std::move(p); }
  void set_verifier(std::shared_ptr<GoalVerifier> v) { verifier_override_ = std::move(v); }

  void reset(const Scene& scene, const Episode& episode) override;
  StepDecision step(const Observation& obs, const AgentPose& pose) override;

  const AgentConfig& config() const { return cfg_; }
  const SceneGraph& graph() const;
  const std::vector<GoalCandidate>& candidates() const;
  // Per-floor map, nullptr for floors never entered.
  const OccupancyGrid* grid(int floor) const;
  // Cells the planner may use on that floor (inflated, collision marks removed).
  const Raster<std::uint8_t>* usable(int floor) const;

 private:
  struct State;
  AgentConfig cfg_;
  const Fixtures& fx_;
  std::shared_ptr<ScenePredictor> predictor_override_;
  std::shared_ptr<GoalVerifier> verifier_override_;
  std::unique_ptr<State> s_;
};

}  // namespace sgnav
