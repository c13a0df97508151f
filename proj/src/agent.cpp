#include "sgnav/agent.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <numbers>

#include "sgnav/image.hpp"
#include "sgnav/llm_client.hpp"

namespace sgnav {

const char* variant_name(AgentVariant v) {
  switch (v) {
    case AgentVariant::A: return "a";
    case AgentVariant::B: return "b";
    case AgentVariant::C: return "c";
    case AgentVariant::D: return "d";
    case AgentVariant::E: return "e";
    case AgentVariant::F: return "f";
  }
  return "e";
}

AgentVariant variant_from_name(const std::string& s) {
  std::string t;
  for (char ch : s) t += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  if (t == "a") return AgentVariant::A;
  if (t == "b") return AgentVariant::B;
  if (t == "c") return AgentVariant::C;
  if (t == "d") return AgentVariant::D;
  if (t == "e") return AgentVariant::E;
  if (t == "f") return AgentVariant::F;
  throw ConfigError("unknown agent variant: " + s);
}

bool AgentConfig::uses_imagination() const {
  return variant == AgentVariant::C || variant == AgentVariant::D || variant == AgentVariant::E;
}
bool AgentConfig::uses_pseudo_frontier() const {
  return stairs && variant != AgentVariant::A && variant != AgentVariant::B;
}
bool AgentConfig::uses_exploration_gain() const {
  return variant == AgentVariant::D || variant == AgentVariant::E || variant == AgentVariant::F;
}
bool AgentConfig::uses_verification() const { return variant == AgentVariant::E || variant == AgentVariant::F; }

void AgentConfig::validate() const {
  auto need = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(what);
  };
  need(gain.lambda >= 0 && gain.lambda <= 1, "gain.lambda must be in [0,1]");
  need(gain.gamma > 0 && gain.gamma <= 1, "gain.gamma must be in (0,1]");
  need(gain.r_ray > 0 && gain.num_rays >= 3 && gain.max_waypoints >= 1 && gain.waypoint_spacing >= 0,
       "bad ray parameters");
  need(conf_min >= 0 && conf_min <= 1, "conf_min must be in [0,1]");
  need(min_sightings >= 1, "min_sightings must be >= 1");
  need(votes >= 1 && votes % 2 == 1, "votes must be odd and positive");
  need(verify_retries >= 1 && verify_step_penalty >= 0, "bad verifier settings");
  need(lookalike_confusion >= 0 && lookalike_confusion <= 1 && vote_error >= 0 && vote_error <= 1,
       "verifier error rates must be in [0,1]");
  need(success_threshold >= 0 && stop_margin >= 0 && inflation >= 0 && flat_band > 0 && lookahead > 0,
       "bad motion settings");
  need(replan_period >= 1 && imagination_period >= 1 && panorama_turns >= 0 && min_frontier_size >= 1,
       "bad cadence settings");
}

nlohmann::ordered_json AgentConfig::to_json() const {
  nlohmann::ordered_json j;
  j["variant"] = variant_name(variant);
  j["scorer"] = scorer_kind_name(scorer);
  j["gain"] = {{"lambda", gain.lambda},          {"gamma", gain.gamma},
               {"subgraph_radius", gain.subgraph_radius}, {"r_ray", gain.r_ray},
               {"num_rays", gain.num_rays},      {"max_waypoints", gain.max_waypoints},
               {"waypoint_spacing", gain.waypoint_spacing},
               {"use_objects", gain.use_objects}, {"use_regions", gain.use_regions},
               {"use_floors", gain.use_floors}};
  j["candidates"] = {{"conf_min", conf_min}, {"min_sightings", min_sightings}, {"merge_radius", candidate_merge}};
  j["verifier"] = {{"votes", votes},
                   {"retries", verify_retries},
                   {"step_penalty", verify_step_penalty},
                   {"context_check", context_check},
                   {"context_min", context_min},
                   {"lookalike_confusion", lookalike_confusion},
                   {"vote_error", vote_error}};
  j["motion"] = {{"success_threshold", success_threshold}, {"stop_margin", stop_margin},
                 {"inflation", inflation},                 {"flat_band", flat_band},
                 {"lookahead", lookahead},                 {"turn_threshold_deg", turn_threshold_deg}};
  j["cadence"] = {{"replan_period", replan_period},
                  {"imagination_period", imagination_period},
                  {"panorama_turns", panorama_turns},
                  {"min_frontier_size", min_frontier_size}};
  j["stairs"] = {{"enabled", stairs},
                 {"base_band", stair.base_band},
                 {"arrival_radius", stair.arrival_radius},
                 {"window", stair.window},
                 {"floor_points", stair.floor_points},
                 {"climb_rise", stair.climb_rise}};
  j["unknown"] = {{"min_unknown_area", unknown.min_unknown_area},
                  {"context_radius", unknown.context_radius},
                  {"max_extent", unknown.max_extent},
                  {"search_margin", unknown.search_margin}};
  j["grouping"] = {{"k", grouping.k},
                   {"d_max", grouping.d_max},
                   {"w_max", grouping.w_max},
                   {"n_min", grouping.n_min},
                   {"corridor_half_width", grouping.corridor_half_width},
                   {"endpoint_margin", grouping.endpoint_margin},
                   {"merge_radius", grouping.merge_radius}};
  j["seed"] = seed;
  return j;
}

namespace {

// Reads known keys of one section and rejects the rest.
class Section {
 public:
  Section(const nlohmann::json& j, std::string name) : j_(j), name_(std::move(name)) {
    if (!j_.is_object()) throw ConfigError(name_ + " must be an object");
  }
  template <class T>
  void get(const char* key, T& out) {
    seen_.push_back(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError(name_ + "." + key + " has the wrong type");
    }
  }
  void done() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (std::find(seen_.begin(), seen_.end(), it.key()) == seen_.end())
        throw ConfigError("unknown key " + name_ + "." + it.key());
  }

 private:
  const nlohmann::json& j_;
  std::string name_;
  std::vector<std::string> seen_;
};

}  // namespace

AgentConfig AgentConfig::from_json(const nlohmann::json& j) {
  AgentConfig c;
  Section top(j, "agent");
  std::string variant = variant_name(c.variant), scorer = scorer_kind_name(c.scorer);
  top.get("variant", variant);
  top.get("scorer", scorer);
  top.get("seed", c.seed);
  c.variant = variant_from_name(variant);
  try {
    c.scorer = scorer_kind_from_name(scorer);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  auto section = [&](const char* name, auto&& fill) {
    nlohmann::json empty = nlohmann::json::object();
    top.get(name, empty);
    Section s(empty, name);
    fill(s);
    s.done();
  };
  section("gain", [&](Section& s) {
    s.get("lambda", c.gain.lambda);
    s.get("gamma", c.gain.gamma);
    s.get("subgraph_radius", c.gain.subgraph_radius);
    s.get("r_ray", c.gain.r_ray);
    s.get("num_rays", c.gain.num_rays);
    s.get("max_waypoints", c.gain.max_waypoints);
    s.get("waypoint_spacing", c.gain.waypoint_spacing);
    s.get("use_objects", c.gain.use_objects);
    s.get("use_regions", c.gain.use_regions);
    s.get("use_floors", c.gain.use_floors);
  });
  section("candidates", [&](Section& s) {
    s.get("conf_min", c.conf_min);
    s.get("min_sightings", c.min_sightings);
    s.get("merge_radius", c.candidate_merge);
  });
  section("verifier", [&](Section& s) {
    s.get("votes", c.votes);
    s.get("retries", c.verify_retries);
    s.get("step_penalty", c.verify_step_penalty);
    s.get("context_check", c.context_check);
    s.get("context_min", c.context_min);
    s.get("lookalike_confusion", c.lookalike_confusion);
    s.get("vote_error", c.vote_error);
  });
  section("motion", [&](Section& s) {
    s.get("success_threshold", c.success_threshold);
    s.get("stop_margin", c.stop_margin);
    s.get("inflation", c.inflation);
    s.get("flat_band", c.flat_band);
    s.get("lookahead", c.lookahead);
    s.get("turn_threshold_deg", c.turn_threshold_deg);
  });
  section("cadence", [&](Section& s) {
    s.get("replan_period", c.replan_period);
    s.get("imagination_period", c.imagination_period);
    s.get("panorama_turns", c.panorama_turns);
    s.get("min_frontier_size", c.min_frontier_size);
  });
  section("stairs", [&](Section& s) {
    s.get("enabled", c.stairs);
    s.get("base_band", c.stair.base_band);
    s.get("arrival_radius", c.stair.arrival_radius);
    s.get("window", c.stair.window);
    s.get("floor_points", c.stair.floor_points);
    s.get("climb_rise", c.stair.climb_rise);
  });
  section("unknown", [&](Section& s) {
    s.get("min_unknown_area", c.unknown.min_unknown_area);
    s.get("context_radius", c.unknown.context_radius);
    s.get("max_extent", c.unknown.max_extent);
    s.get("search_margin", c.unknown.search_margin);
  });
  section("grouping", [&](Section& s) {
    s.get("k", c.grouping.k);
    s.get("d_max", c.grouping.d_max);
    s.get("w_max", c.grouping.w_max);
    s.get("n_min", c.grouping.n_min);
    s.get("corridor_half_width", c.grouping.corridor_half_width);
    s.get("endpoint_margin", c.grouping.endpoint_margin);
    s.get("merge_radius", c.grouping.merge_radius);
  });
  top.done();
  c.validate();
  return c;
}

const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Unverified: return "unverified";
    case Verdict::Accepted: return "accepted";
    case Verdict::Rejected: return "rejected";
  }
  return "unverified";
}

void update_candidates(std::vector<GoalCandidate>& cands, const std::vector<Detection>& dets, const std::string& q,
                       double conf_min, double merge_radius) {
  std::vector<std::uint8_t> bumped(cands.size(), 0);
  for (const Detection& d : dets) {
    if (d.category != q || d.confidence < conf_min) continue;
    std::size_t best = cands.size();
    double bd = merge_radius;
    for (std::size_t i = 0; i < cands.size(); ++i) {
      if (cands[i].floor != d.floor) continue;
      double dist = distance(cands[i].position, d.position);
      if (dist <= bd) {
        bd = dist;
        best = i;
      }
    }
    if (best == cands.size()) {
      GoalCandidate c;
      c.object_id = cands.empty() ? 0 : cands.back().object_id + 1;
      c.category = q;
      c.position = d.position;
      c.floor = d.floor;
      c.source_object = d.source_object;
      cands.push_back(c);
      bumped.push_back(0);
    }
    GoalCandidate& c = cands[best];
    c.best_confidence = std::max(c.best_confidence, d.confidence);
    if (!bumped[best]) {
      ++c.sightings;
      bumped[best] = 1;
    }
  }
}

std::vector<std::size_t> verification_order(const std::vector<GoalCandidate>& cands, int min_sightings) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < cands.size(); ++i)
    if (cands[i].eligible(min_sightings)) idx.push_back(i);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return cands[a].best_confidence > cands[b].best_confidence; });
  return idx;
}

namespace {

const ObjectNode* node_for(const SceneGraph& g, const GoalCandidate& c) {
  const ObjectNode* best = nullptr;
  double bd = 0.5;
  for (const ObjectNode& o : g.objects) {
    if (o.provenance != Provenance::Observed || o.floor != c.floor) continue;
    double d = distance(o.position, c.position);
    if (d <= bd) {
      bd = d;
      best = &o;
    }
  }
  return best;
}

}  // namespace

std::optional<double> DeterministicVerifier::context_score(const GoalCandidate& c, const VerifyContext& ctx) const {
  if (!ctx.graph) return std::nullopt;
  const ObjectNode* node = node_for(*ctx.graph, c);
  if (!node || node->region < 0) return std::nullopt;
  const RegionNode* region = ctx.graph->region(node->region);
  if (!region) return std::nullopt;
  std::vector<std::string> others;
  for (int m : region->members)
    if (m != node->id)
      if (const ObjectNode* o = ctx.graph->object(m)) others.push_back(o->category);
  if (others.empty()) return std::nullopt;
  PriorCaptioner cap(fx_);
  double s = 0;
  for (const auto& [label, w] : cap.caption(others)) s += w * fx_.p_object(label, ctx.target);
  return s;
}

bool DeterministicVerifier::vote(const GoalCandidate& c, const VerifyContext& ctx, int query_index) {
  if (!ctx.scene) throw Error("deterministic verifier needs the scene");
  const SceneObject* obj = nullptr;
  for (const SceneObject& o : ctx.scene->objects)
    if (o.id == c.source_object) obj = &o;
  double u = hash_unit(hash_mix(hash_mix(hash_mix(p_.seed, ctx.scene->seed), static_cast<std::uint64_t>(c.source_object)),
                                static_cast<std::uint64_t>(query_index)));
  bool looks_right;
  if (obj && obj->category == ctx.target)
    looks_right = u >= p_.vote_error;
  else if (obj && obj->decoy && obj->detected_as == ctx.target)
    looks_right = u < p_.lookalike_confusion;
  else
    looks_right = false;
  if (!looks_right) return false;
  if (!p_.context_check) return true;
  auto s = context_score(c, ctx);
  return !s || *s >= p_.context_min;
}

std::string verification_prompt(const std::string& target) {
  return "Given the context in the image, first think about where it is, and determine if it is likely that the "
         "object in the red bounding box is a `" +
         target +
         "' or not. Think step by step and be careful not to make mistakes. Answer with `yes' or `no' with no "
         "additional text.";
}

Image render_context_crop(const OccupancyGrid& grid, Vec2 at, double half_extent_m) {
  int h = std::max(1, static_cast<int>(std::round(half_extent_m / grid.resolution())));
  Cell c0 = grid.world_to_cell(at);
  Image img(2 * h + 1, 2 * h + 1, {128, 128, 128});
  for (int r = 0; r <= 2 * h; ++r) {
    for (int c = 0; c <= 2 * h; ++c) {
      Cell k{c0.r - h + r, c0.c - h + c};
      if (!grid.in_bounds(k)) continue;
      CellState s = grid.state(k);
      // image rows run top-down, world y up
      int ir = 2 * h - r;
      if (s == CellState::Free) img.set(ir, c, {255, 255, 255});
      if (s == CellState::Occupied) img.set(ir, c, {0, 0, 0});
    }
  }
  int b = std::max(2, h / 6);
  Rgb red{255, 0, 0};
  img.line(h - b, h - b, h - b, h + b, red);
  img.line(h + b, h - b, h + b, h + b, red);
  img.line(h - b, h - b, h + b, h - b, red);
  img.line(h - b, h + b, h + b, h + b, red);
  return img;
}

bool HttpVerifier::vote(const GoalCandidate& c, const VerifyContext& ctx, int) {
  if (!ctx.grid) throw Error("http verifier needs a grid");
  std::string reply = client_->chat(verification_prompt(ctx.target), encode_png(render_context_crop(*ctx.grid, c.position)));
  std::string t;
  for (char ch : reply)
    if (!std::isspace(static_cast<unsigned char>(ch)) && ch != '`' && ch != '\'' && ch != '"' && ch != '.')
      t += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  if (t == "yes") return true;
  if (t == "no") return false;
  throw TransportError("verifier reply is neither yes nor no: " + reply.substr(0, 80));
}

Verdict verify_goal(GoalCandidate& c, const VerifyContext& ctx, GoalVerifier& verifier, int votes, int retries) {
  if (c.verified == Verdict::Rejected || c.verified == Verdict::Accepted) return c.verified;
  std::vector<bool> got;
  for (int i = 0; i < votes; ++i) {
    std::optional<bool> v;
    for (int a = 0; a < retries && !v; ++a) {
      try {
        v = verifier.vote(c, ctx, i);
      } catch (const TransportError&) {
      }
    }
    if (!v) return Verdict::Unverified;
    got.push_back(*v);
  }
  c.votes = got;
  int yes = static_cast<int>(std::count(got.begin(), got.end(), true));
  c.verified = 2 * yes > votes ? Verdict::Accepted : Verdict::Rejected;
  return c.verified;
}

double floor_jump_score(const Fixtures& fx, const std::string& q, const std::string& level, int rooms) {
  auto it = fx.floor_priors().find(level);
  if (it == fx.floor_priors().end()) return 0.0;
  double best = 0;
  for (const auto& [label, prior] : it->second) {
    double present = 1.0 - std::pow(1.0 - std::clamp(prior, 0.0, 1.0), rooms);
    best = std::max(best, fx.p_object(label, q) * present);
  }
  return best;
}

// ---------------------------------------------------------------------------

namespace {

const char* level_of(int floor) { return floor == 0 ? "ground" : "upper"; }

struct FloorMap {
  OccupancyGrid grid;
  DerivedLayers layers;
  Raster<std::uint16_t> near_occ;  // occupied cells within the inflation radius
  Raster<std::uint8_t> bump;       // cells blocked after a collision
  Raster<std::uint8_t> usable;     // traversable and clear of obstacles
  Raster<std::uint8_t> flat;       // usable at the floor's own height
  std::optional<double> base_z;
  bool exhausted = false;
};

struct StairSighting {
  Vec2 position;
  int floor = 0;
};

struct PlanResult {
  bool reachable = false;
  bool arrived = false;
  Action action = Action::TurnLeft;
  double distance = kInf;
};

struct Selection {
  bool active = false;
  bool pseudo = false;
  int frontier_id = -1;
  int target_floor = -1;
  std::vector<Cell> cells;
  double s_s = 0, s_g = 0;
  std::string branch;
  int chosen_at = 0;
};

}  // namespace

struct SGImagineNavAgent::State {
  const Scene* scene = nullptr;
  Episode episode;
  std::string q;
  int W = 0, H = 0;
  double res = 0.05;
  Vec2 origin;
  std::vector<std::unique_ptr<FloorMap>> floors;
  std::vector<Vec2> disk;  // inflation stencil, (dr, dc) packed as (x=dc, y=dr)
  SceneGraph graph;
  std::vector<GoalCandidate> candidates;
  std::vector<std::uint8_t> candidate_unreachable;
  std::vector<StairSighting> stairs_seen;
  std::unique_ptr<PriorCaptioner> captioner;
  std::unique_ptr<NodeScorer> scorer;
  std::shared_ptr<ScenePredictor> predictor;
  std::shared_ptr<GoalVerifier> verifier;
  StairClimbState stair;
  int stair_target = -1;
  int stair_ticks = 0;
  std::vector<int> jump_block;  // step until which a floor is not tried again
  Selection sel;
  int t = 0;
  int floor = -1;
  bool floor_changed = false;
  int last_imagination = -1000000;
  int panorama_left = 0;
  int penalty_left = 0;
  int recover = 0;
  bool have_last = false;
  AgentPose last_pose;
  Action last_action = Action::Stop;
};

SGImagineNavAgent::SGImagineNavAgent(AgentConfig cfg, const Fixtures& fx) : cfg_(std::move(cfg)), fx_(fx) {
  cfg_.validate();
}
SGImagineNavAgent::~SGImagineNavAgent() = default;

const SceneGraph& SGImagineNavAgent::graph() const {
  if (!s_) throw Error("agent not reset");
  return s_->graph;
}
const std::vector<GoalCandidate>& SGImagineNavAgent::candidates() const {
  if (!s_) throw Error("agent not reset");
  return s_->candidates;
}
const OccupancyGrid* SGImagineNavAgent::grid(int floor) const {
  if (!s_ || floor < 0 || floor >= static_cast<int>(s_->floors.size()) || !s_->floors[floor]) return nullptr;
  return &s_->floors[floor]->grid;
}

const Raster<std::uint8_t>* SGImagineNavAgent::usable(int floor) const {
  if (!s_ || floor < 0 || floor >= static_cast<int>(s_->floors.size()) || !s_->floors[floor]) return nullptr;
  return &s_->floors[floor]->usable;
}

void SGImagineNavAgent::reset(const Scene& scene, const Episode& episode) {
  s_ = std::make_unique<State>();
  State& s = *s_;
  s.scene = &scene;
  s.episode = episode;
  s.q = episode.target;
  s.W = scene.grid_width();
  s.H = scene.grid_height();
  s.res = scene.config.resolution;
  s.origin = scene.origin();
  s.floors.resize(static_cast<std::size_t>(scene.config.floors));
  s.jump_block.assign(s.floors.size(), 0);
  int R = static_cast<int>(std::floor(cfg_.inflation / s.res + 1e-9));
  for (int dr = -R; dr <= R; ++dr)
    for (int dc = -R; dc <= R; ++dc)
      if (std::hypot(dr, dc) * s.res <= cfg_.inflation + 1e-9) s.disk.push_back({static_cast<double>(dc), static_cast<double>(dr)});
  s.captioner = std::make_unique<PriorCaptioner>(fx_);
  s.scorer = make_scorer(cfg_.scorer, nullptr, fx_);
  s.predictor = predictor_override_ ? predictor_override_ : std::make_shared<AdjacencyPriorPredictor>(fx_);
  if (verifier_override_) {
    s.verifier = verifier_override_;
  } else if (cfg_.uses_verification()) {
    DeterministicVerifier::Params p;
    p.context_check = cfg_.context_check;
    p.context_min = cfg_.context_min;
    p.lookalike_confusion = cfg_.lookalike_confusion;
    p.vote_error = cfg_.vote_error;
    p.seed = cfg_.seed;
    s.verifier = std::make_shared<DeterministicVerifier>(p, fx_);
  } else {
    s.verifier = std::make_shared<AcceptAllVerifier>();
  }
  if (cfg_.uses_truth_graph()) s.graph = scene.ground_truth_graph();
  s.panorama_left = cfg_.panorama_turns;
}

namespace {
using Mask = Raster<std::uint8_t>;
}  // namespace

StepDecision SGImagineNavAgent::step(const Observation& obs, const AgentPose& pose) {
  if (!s_) throw Error("agent not reset");
  State& s = *s_;
  const AgentConfig& cfg = cfg_;
  StepDecision dec;
  auto& tr = dec.trace;
  const int t = s.t++;

  // ---- map upkeep --------------------------------------------------------
  const int f = obs.floor;
  if (f < 0 || f >= static_cast<int>(s.floors.size())) throw Error("observation on an unknown floor");
  if (!s.floors[f]) {
    auto m = std::make_unique<FloorMap>();
    m->grid = s.scene->make_grid(f);
    m->layers = compute_layers(m->grid);
    m->near_occ = Raster<std::uint16_t>(s.W, s.H, 0);
    m->bump = Mask(s.W, s.H, 0);
    m->usable = Mask(s.W, s.H, 0);
    m->flat = Mask(s.W, s.H, 0);
    s.floors[f] = std::move(m);
  }
  if (f != s.floor) {
    if (s.floor >= 0) s.floor_changed = true;
    s.floor = f;
    s.sel = {};
  }
  FloorMap& fm = *s.floors[f];
  OccupancyGrid& grid = fm.grid;
  const Cell here = grid.world_to_cell(pose.xy());

  auto refresh = [&](FloorMap& m, BBox box) {
    if (box.empty()) return;
    int R = static_cast<int>(std::ceil(cfg.inflation / s.res)) + 1;
    box = box.grown(R, s.H, s.W);
    for (int r = box.r0; r <= box.r1; ++r) {
      for (int c = box.c0; c <= box.c1; ++c) {
        std::size_t i = m.usable.idx(r, c);
        bool u = m.layers.traversable.data[i] && m.near_occ.data[i] == 0 && !m.bump.data[i];
        m.usable.data[i] = u;
        m.flat.data[i] = u && m.base_z && std::fabs(m.grid.height_at(i) - *m.base_z) <= cfg.flat_band;
      }
    }
  };
  auto full_box = [&]() { return BBox{0, 0, s.H - 1, s.W - 1}; };

  // A forward move that left the pose unchanged hit something: block the spot.
  if (s.have_last && s.last_action == Action::MoveForward && s.last_pose.x == pose.x && s.last_pose.y == pose.y &&
      s.last_pose.z == pose.z) {
    // mark every substep cell of the failed move, one cell wide on each side
    Vec2 dir{std::cos(pose.heading), std::sin(pose.heading)};
    const double step = s.scene->config.forward_step;
    BBox b;
    for (double d = s.res; d <= step + 0.5 * s.res; d += 0.5 * s.res) {
      Cell a = grid.world_to_cell(pose.xy() + dir * d);
      for (int dr = -1; dr <= 1; ++dr)
        for (int dc = -1; dc <= 1; ++dc) {
          Cell k{a.r + dr, a.c + dc};
          if (grid.in_bounds(k) && k != here) {
            fm.bump[k] = 1;
            b.add(k);
          }
        }
    }
    refresh(fm, b);
    s.sel.active = false;
    tr["collision"] = true;
  }

  {
    std::vector<CellState> before;
    before.reserve(obs.sweep.cells.size());
    for (const auto& sc : obs.sweep.cells)
      before.push_back(grid.in_bounds(sc.cell) ? grid.state(sc.cell) : CellState::Unknown);
    BBox box = integrate_observation(grid, pose, obs.sweep);
    for (std::size_t i = 0; i < obs.sweep.cells.size(); ++i) {
      const Cell k = obs.sweep.cells[i].cell;
      if (!grid.in_bounds(k)) continue;
      bool was = before[i] == CellState::Occupied, now = grid.state(k) == CellState::Occupied;
      if (was == now) continue;
      for (const Vec2& d : s.disk) {
        Cell m{k.r + static_cast<int>(d.y), k.c + static_cast<int>(d.x)};
        if (!grid.in_bounds(m)) continue;
        if (now)
          ++fm.near_occ[m];
        else
          --fm.near_occ[m];
      }
    }
    update_layers(grid, fm.layers, box);
    if (!fm.base_z && s.stair.stage == StairStage::Inactive) {
      fm.base_z = pose.z;
      box = full_box();
    }
    refresh(fm, box);
  }

  // ---- scene graph -------------------------------------------------------
  if (!cfg.uses_truth_graph() && cfg.uses_graph_gain()) {
    WallQuery wq{&fm.layers.wall, s.res, s.origin};
    update_graph(s.graph, obs.detections, wq, *s.captioner, cfg.grouping);
  }
  for (const Detection& d : obs.detections) {
    if (d.category != "stairs") continue;
    bool known = std::any_of(s.stairs_seen.begin(), s.stairs_seen.end(), [&](const StairSighting& x) {
      return x.floor == d.floor && distance(x.position, d.position) < 0.5;
    });
    if (!known) s.stairs_seen.push_back({d.position, d.floor});
  }
  if (cfg.uses_imagination() && fm.base_z &&
      (t - s.last_imagination >= cfg.imagination_period || s.floor_changed)) {
    prune_observed_imagined(s.graph, grid, f);
    auto unknowns = identify_unknown_regions(grid, &s.graph, cfg.unknown);
    BevLayout bev = build_bev(s.graph, grid, unknowns);
    PredictionContext pc{&s.graph, &bev, &unknowns, s.q, level_of(f)};
    PredictionOutcome out = predict_scene_graph(s.graph, grid, f, *s.predictor, pc);
    tr["imagined"] = out.regions_added;
    s.last_imagination = t;
  }
  s.floor_changed = false;

  update_candidates(s.candidates, obs.detections, s.q, cfg.conf_min, cfg.candidate_merge);
  s.candidate_unreachable.resize(s.candidates.size(), 0);

  auto emit = [&](Action a, const std::string& branch) {
    dec.action = a;
    tr["branch"] = branch;
    tr["stair"] = stair_stage_name(s.stair.stage);
    auto& cj = tr["candidates"] = nlohmann::ordered_json::array();
    for (const GoalCandidate& c : s.candidates)
      cj.push_back({{"id", c.object_id}, {"conf", c.best_confidence}, {"n", c.sightings}, {"status", verdict_name(c.verified)}});
    s.last_pose = pose;
    s.last_action = a;
    s.have_last = true;
    return dec;
  };

  // ---- planning helpers --------------------------------------------------
  // Heading whose forward move keeps every substep on the mask and minimizes
  // cost(landing) plus a small charge per turn, below `threshold` if possible.
  // Without one, moves over cells not known to block may close in on
  // `toward`; failing that, turn without moving.
  auto pick_heading = [&](const Mask& mask, auto cost, double threshold, Vec2 toward) {
    const double step = s.scene->config.forward_step, turn = s.scene->config.turn_deg * kPi / 180.0;
    const int n_head = std::max(1, static_cast<int>(std::lround(2 * kPi / turn)));
    const int subs = std::max(1, static_cast<int>(std::ceil(step / s.res - 1e-9)));
    auto passable = [&](Cell k) {
      return grid.in_bounds(k) && grid.state(k) != CellState::Occupied && !fm.bump[k];
    };
    const bool here_on = mask.in_bounds(here) && mask[here];
    // tier 0: descend below threshold; 1: any move on the mask; 2: off the mask
    for (int tier = 0; tier < 3; ++tier) {
      double best = tier == 0 ? threshold : tier == 1 ? kInf : distance(pose.xy(), toward) - 0.02;
      int best_k = -1;
      for (int k = 0; k < n_head; ++k) {
        double h = pose.heading + k * turn;
        Vec2 dir{std::cos(h), std::sin(h)};
        bool ok = true, entered = here_on;
        Cell land = here;
        for (int i = 1; i <= subs && ok; ++i) {
          land = grid.world_to_cell(pose.xy() + dir * (step * i / subs));
          if (land == here) continue;
          bool on = mask.in_bounds(land) && mask[land];
          // leaving an off-mask start may cross passable cells until it reaches the mask
          ok = tier < 2 ? on || (!entered && passable(land)) : passable(land);
          entered = entered || on;
        }
        if (!ok || (tier < 2 && land != here && !(mask.in_bounds(land) && mask[land]))) continue;
        Vec2 to = pose.xy() + dir * step;
        double v = (tier < 2 ? cost(land, to) : distance(to, toward)) + 0.1 * std::min(k, n_head - k);
        if (v < best) {
          best = v;
          best_k = k;
        }
      }
      if (best_k == 0) return Action::MoveForward;
      if (best_k > 0) return best_k <= n_head / 2 ? Action::TurnLeft : Action::TurnRight;
    }
    Action a = next_action(pose, toward, cfg.turn_threshold_deg);
    return a == Action::MoveForward ? Action::TurnLeft : a;
  };
  auto start_cell = [&](const Mask& mask) { return snap_to_traversable(mask, here, 0.3 / s.res); };
  auto plan_to = [&](const std::vector<Cell>& goals, const Mask& mask) {
    PlanResult pr;
    auto start = start_cell(mask);
    if (!start || goals.empty()) return pr;
    DistanceField field;
    try {
      field = fmm_multi_source(mask, goals, {s.res, 0.5, *start});
    } catch (const UnreachableError&) {
      return pr;
    }
    if (!field.finite(*start)) return pr;
    pr.reachable = true;
    pr.distance = field.at(*start);
    std::vector<Cell> path = descend(field, *start);
    if (path.size() <= 1) {
      pr.arrived = true;
      return pr;
    }
    Cell look = path.back();
    double acc = 0;
    for (std::size_t i = 1; i < path.size(); ++i) {
      acc += std::hypot(path[i].r - path[i - 1].r, path[i].c - path[i - 1].c) * s.res;
      if (acc >= cfg.lookahead) {
        look = path[i];
        break;
      }
    }
    Vec2 lk = grid.cell_center(look);
    double thr = mask.in_bounds(here) && mask[here] ? pr.distance - 0.5 * s.res : kInf;
    pr.action = pick_heading(mask, [&](Cell land, Vec2) { return field.at(land); }, thr, lk);
    return pr;
  };
  // Safe move that brings the agent closest to p.
  auto approach = [&](Vec2 p, const Mask& mask) {
    return pick_heading(mask, [&](Cell, Vec2 to) { return distance(to, p); }, distance(pose.xy(), p) - 0.02, p);
  };
  auto snapped_goal = [&](Cell g, const Mask& mask) -> std::vector<Cell> {
    auto k = snap_to_traversable(mask, g, 0.5 / s.res);
    if (!k) return {};
    return {*k};
  };

  // Stair handling needs layers whose traversable set is the usable one.
  auto stair_layers = [&]() {
    DerivedLayers L = fm.layers;
    L.traversable = fm.usable;
    return L;
  };
  auto stair_box = [&](Vec2 at) -> std::pair<Vec2, Vec2> {
    // connected non-flat traversable cells near the sighting
    const double base = fm.base_z.value_or(pose.z);
    auto stepped = [&](Cell k) {
      return grid.in_bounds(k) && fm.layers.traversable[k] && std::fabs(grid.height_at(k) - base) > cfg.flat_band &&
             distance(grid.cell_center(k), at) <= 3.5;
    };
    Cell c0 = grid.world_to_cell(at);
    std::optional<Cell> seed;
    double bd = kInf;
    int R = static_cast<int>(std::ceil(2.5 / s.res));
    for (int dr = -R; dr <= R; ++dr)
      for (int dc = -R; dc <= R; ++dc) {
        Cell k{c0.r + dr, c0.c + dc};
        double d = std::hypot(dr, dc);
        if (d < bd && stepped(k)) {
          bd = d;
          seed = k;
        }
      }
    if (!seed) return {at, {0.5, 0.5}};
    BBox b;
    std::vector<Cell> stack{*seed};
    std::vector<std::uint8_t> seen(static_cast<std::size_t>(s.W) * s.H, 0);
    seen[grid.idx(*seed)] = 1;
    static constexpr int dr8[8] = {-1, -1, -1, 0, 0, 1, 1, 1}, dc8[8] = {-1, 0, 1, -1, 1, -1, 0, 1};
    while (!stack.empty()) {
      Cell k = stack.back();
      stack.pop_back();
      b.add(k);
      for (int n = 0; n < 8; ++n) {
        Cell m{k.r + dr8[n], k.c + dc8[n]};
        if (!stepped(m) || seen[grid.idx(m)]) continue;
        seen[grid.idx(m)] = 1;
        stack.push_back(m);
      }
    }
    Vec2 lo = grid.cell_center({b.r0, b.c0}), hi = grid.cell_center({b.r1, b.c1});
    return {(lo + hi) * 0.5, Vec2{(hi.x - lo.x) / 2 + s.res / 2, (hi.y - lo.y) / 2 + s.res / 2}};
  };
  // Stair candidates of this floor, ups lead to f+1 and downs to f-1.
  auto refresh_stair_lists = [&]() {
    s.stair.up_list.clear();
    s.stair.down_list.clear();
    DerivedLayers L = stair_layers();
    const double base = fm.base_z.value_or(pose.z);
    for (const StairSighting& ss : s.stairs_seen) {
      if (ss.floor != f) continue;
      auto [center, half] = stair_box(ss.position);
      auto c = classify_stair(grid, L, center, half, base, cfg.stair);
      if (!c || !c->has_entrance) continue;
      (c->up ? s.stair.up_list : s.stair.down_list).push_back(*c);
    }
  };
  auto floor_open = [&](int g) {
    return g >= 0 && g < static_cast<int>(s.floors.size()) && !(s.floors[g] && s.floors[g]->exhausted) &&
           t >= s.jump_block[g];
  };

  // ---- stair machine in progress -----------------------------------------
  auto run_stairs = [&]() -> std::optional<StepDecision> {
    if (s.stair.stage == StairStage::Inactive) return std::nullopt;
    ++s.stair_ticks;
    DerivedLayers L = stair_layers();
    int fp = count_floor_points(obs.sweep, pose.z, cfg.stair.base_band);
    StairUpdate u = update_stair_state(s.stair, grid, L, pose, 0, fp, cfg.stair);
    s.stair = u.state;
    if (s.stair.stage == StairStage::Confirming) return emit(Action::TurnLeft, "stair");
    if (s.stair.stage == StairStage::Inactive) {
      // confirmation finished on the new floor
      if (!fm.base_z) {
        fm.base_z = pose.z;
        refresh(fm, full_box());
      }
      s.stair_ticks = 0;
      s.sel = {};
      return std::nullopt;
    }
    bool give_up = s.stair_ticks > 150;
    if (!give_up && u.goal) {
      PlanResult pr = plan_to(snapped_goal(*u.goal, fm.usable), fm.usable);
      if (pr.reachable && !pr.arrived) return emit(pr.action, "stair");
      if (pr.arrived) return emit(Action::MoveForward, "stair");
    }
    if (!give_up && s.stair.stage == StairStage::Climbing) return emit(Action::MoveForward, "stair");
    // entrance unreachable or climb stuck: drop the attempt for a while
    s.stair = StairClimbState{};
    s.stair_ticks = 0;
    if (s.stair_target >= 0 && s.stair_target < static_cast<int>(s.floors.size()))
      s.jump_block[s.stair_target] = t + 100;
    s.stair_target = -1;
    return std::nullopt;
  };

  if (s.penalty_left > 0) {
    --s.penalty_left;
    return emit(Action::LookUp, "verify");
  }
  if (s.panorama_left > 0) {
    --s.panorama_left;
    return emit(Action::TurnLeft, "panorama");
  }

  // ---- goal candidates ---------------------------------------------------
  VerifyContext vctx{s.scene, &s.graph, &grid, s.q};
  for (std::size_t i : verification_order(s.candidates, cfg.min_sightings)) {
    Verdict v = verify_goal(s.candidates[i], vctx, *s.verifier, cfg.votes, cfg.verify_retries);
    if (v == Verdict::Unverified) continue;
    if (cfg.verify_step_penalty > 0) s.penalty_left += cfg.verify_step_penalty * cfg.votes;
    if (v == Verdict::Accepted) break;
  }
  {
    std::optional<std::size_t> goal;
    double gd = kInf;
    for (std::size_t i = 0; i < s.candidates.size(); ++i) {
      const GoalCandidate& c = s.candidates[i];
      if (c.verified != Verdict::Accepted || c.floor != f || s.candidate_unreachable[i]) continue;
      double d = distance(c.position, pose.xy());
      if (d < gd) {
        gd = d;
        goal = i;
      }
    }
    if (goal) {
      const GoalCandidate& c = s.candidates[*goal];
      ObjectShape sh = fx_.shape(c.category);
      double R = std::min(sh.half_x, sh.half_y) + cfg.stop_margin;
      double gdist = std::max(0.0, gd - R);
      tr["goal"] = c.object_id;
      if (gdist <= cfg.success_threshold) {
        dec.goal_stop = true;
        return emit(Action::Stop, "goal");
      }
      std::vector<Cell> cells;
      Cell gc = grid.world_to_cell(c.position);
      int Rc = static_cast<int>(std::ceil(R / s.res));
      for (int dr = -Rc; dr <= Rc; ++dr)
        for (int dc = -Rc; dc <= Rc; ++dc) {
          Cell k{gc.r + dr, gc.c + dc};
          if (grid.in_bounds(k) && fm.usable[k] && distance(grid.cell_center(k), c.position) <= R - 0.05)
            cells.push_back(k);
        }
      PlanResult pr = plan_to(cells, fm.usable);
      if (pr.reachable) {
        s.stair = StairClimbState{};
        Action a = pr.arrived ? approach(c.position, fm.usable) : pr.action;
        return emit(a, "goal");
      }
      // not reachable from here yet; explore and retry after the next replan
      s.candidate_unreachable[*goal] = 1;
    }
  }

  if (auto d = run_stairs()) return *d;

  // ---- exploration -------------------------------------------------------
  auto selection_alive = [&]() {
    if (!s.sel.active) return false;
    if (t - s.sel.chosen_at >= cfg.replan_period) return false;
    if (s.sel.pseudo) return true;
    return std::any_of(s.sel.cells.begin(), s.sel.cells.end(),
                       [&](Cell k) { return fm.flat[k] && is_frontier_cell(grid, k); });
  };

  auto replan = [&]() {
    s.sel = {};
    std::fill(s.candidate_unreachable.begin(), s.candidate_unreachable.end(), 0);
    if (!fm.base_z) return;
    std::vector<Frontier> fronts = detect_frontiers(grid, cfg.min_frontier_size, &fm.flat);
    auto start = start_cell(fm.flat);
    if (!start) return;
    DistanceField field = fmm_multi_source(fm.flat, {*start}, {s.res, 0.5, std::nullopt});
    std::vector<GainRecord> recs;
    std::vector<int> which;  // frontier index, -1 for the stair pseudo-frontier
    auto gain_path = [&](Cell goal, double geodesic) {
      std::vector<Cell> dense = descend(field, goal);
      std::reverse(dense.begin(), dense.end());
      int n = cfg.gain.max_waypoints;
      if (cfg.gain.waypoint_spacing > 0) n = std::min(n, 2 + static_cast<int>(geodesic / cfg.gain.waypoint_spacing));
      std::vector<Vec2> path;
      for (Cell k : subsample(dense, n)) path.push_back(grid.cell_center(k));
      return path;
    };
    ScoreContext sctx{pose.xy(), std::hypot(s.W, s.H) * s.res, level_of(f)};
    for (std::size_t i = 0; i < fronts.size(); ++i) {
      const Frontier& fr = fronts[i];
      Cell best{};
      double bd = kInf;
      for (Cell k : fr.cells)
        if (field.at(k) < bd) {
          bd = field.at(k);
          best = k;
        }
      if (!std::isfinite(bd)) continue;
      GainRecord rec;
      rec.frontier_id = fr.id;
      rec.geodesic = bd;
      if (cfg.uses_graph_gain()) {
        Subgraph sub = extract_subgraph(s.graph, fr.location, f, cfg.gain.subgraph_radius);
        ExploitationResult ex = exploitation_gain(s.graph, sub, s.q, *s.scorer, sctx, cfg.gain);
        rec.s_s = ex.value;
        rec.contributing_node = ex.contributing_node;
      }
      if (cfg.uses_exploration_gain()) {
        rec.path = gain_path(best, bd);
        rec.s_g = exploration_gain(grid, rec.path, cfg.gain.gamma, cfg.gain.num_rays, cfg.gain.r_ray).value;
      }
      recs.push_back(std::move(rec));
      which.push_back(static_cast<int>(i));
    }
    // Stairs toward an unvisited floor compete as a pseudo-frontier.
    struct Jump {
      StairCandidate cand;
      Cell entrance;
      double geodesic;
    };
    std::map<int, Jump> jump;  // by target floor
    if (cfg.uses_pseudo_frontier()) {
      refresh_stair_lists();
      auto consider = [&](const std::vector<StairCandidate>& list, int target) {
        if (target < 0 || target >= static_cast<int>(s.floors.size()) || s.floors[target] ||
            t < s.jump_block[target])
          return;
        for (const StairCandidate& c : list) {
          auto k = snap_to_traversable(fm.flat, c.entrance, 0.5 / s.res);
          if (!k || !field.finite(*k)) continue;
          double d = field.at(*k);
          if (!jump.count(target) || d < jump[target].geodesic) jump[target] = {c, *k, d};
        }
      };
      consider(s.stair.up_list, f + 1);
      consider(s.stair.down_list, f - 1);
      for (const auto& [target, j] : jump) {
        GainRecord rec;
        rec.frontier_id = -1 - target;
        rec.geodesic = j.geodesic;
        if (cfg.uses_truth_graph()) {
          for (const RegionNode& r : s.graph.regions)
            if (r.floor == target) rec.s_s = std::max(rec.s_s, s.scorer->score_region(r, s.q, sctx));
        } else {
          rec.s_s = floor_jump_score(fx_, s.q, level_of(target));
        }
        if (cfg.uses_exploration_gain()) {
          // The path on this floor, then one arrival view on the unmapped floor. That view is
          // approximated by the polygon seen from the entrance here, every cell of it unknown.
          rec.path = gain_path(j.entrance, j.geodesic);
          ExplorationResult ex = exploration_gain(grid, rec.path, cfg.gain.gamma, cfg.gain.num_rays, cfg.gain.r_ray);
          const double n = static_cast<double>(rec.path.size());
          const double arrival =
              static_cast<double>(raycast_visible_cells(grid, rec.path.back(), cfg.gain.num_rays, cfg.gain.r_ray).size());
          const double disc = std::numbers::pi * cfg.gain.r_ray * cfg.gain.r_ray / (s.res * s.res);
          rec.s_g = std::clamp((ex.value * n * disc + std::pow(cfg.gain.gamma, n) * arrival) / ((n + 1) * disc), 0.0, 1.0);
        }
        recs.push_back(rec);
        which.push_back(-1);
      }
    }
    bool any_real = std::any_of(which.begin(), which.end(), [](int w) { return w >= 0; });
    if (!any_real) {
      fm.exhausted = true;
      if (recs.empty()) return;
    }
    std::size_t pick = 0;
    std::string branch;
    auto nearest = [&]() {
      std::size_t b = recs.size();
      for (std::size_t i = 0; i < recs.size(); ++i)
        if (which[i] >= 0 && (b == recs.size() || recs[i].geodesic < recs[b].geodesic)) b = i;
      return b;
    };
    auto max_ss = [&]() -> std::optional<std::size_t> {
      std::optional<std::size_t> b;
      for (std::size_t i = 0; i < recs.size(); ++i)
        if (recs[i].s_s > cfg.gain.lambda && (!b || recs[i].s_s > recs[*b].s_s ||
                                              (recs[i].s_s == recs[*b].s_s && recs[i].geodesic < recs[*b].geodesic)))
          b = i;
      return b;
    };
    if (cfg.variant == AgentVariant::A) {
      pick = nearest();
      branch = "nearest";
    } else if (!cfg.uses_exploration_gain()) {
      if (auto b = max_ss()) {
        pick = *b;
        branch = "exploit";
      } else {
        pick = nearest();
        branch = "nearest";
      }
    } else {
      pick = select_frontier(recs, cfg.gain.lambda);
      branch = max_ss() ? "exploit" : "explore";
    }
    if (pick >= recs.size()) return;  // only a pseudo-frontier that did not win
    s.sel.active = true;
    s.sel.chosen_at = t;
    s.sel.s_s = recs[pick].s_s;
    s.sel.s_g = recs[pick].s_g;
    s.sel.branch = branch;
    s.sel.frontier_id = recs[pick].frontier_id;
    if (which[pick] >= 0) {
      s.sel.cells = fronts[static_cast<std::size_t>(which[pick])].cells;
    } else {
      int target = -1 - recs[pick].frontier_id;
      const StairCandidate& c = jump.at(target).cand;
      s.sel.pseudo = true;
      s.sel.target_floor = target;
      s.stair = StairClimbState{};
      s.stair.stage = StairStage::ApproachEntrance;
      s.stair.up = target > f;
      s.stair.candidate = 0;
      s.stair.entrance = c.entrance;
      (c.up ? s.stair.up_list : s.stair.down_list) = {c};
      s.stair_target = target;
      s.stair_ticks = 0;
    }
  };

  if (!selection_alive()) replan();
  if (s.sel.active && s.sel.pseudo) {
    tr["selected_frontier"] = s.sel.frontier_id;
    tr["S_s"] = s.sel.s_s;
    tr["S_g"] = s.sel.s_g;
    if (auto d = run_stairs()) {
      (*d).trace["branch"] = "stair_jump";
      return *d;
    }
    s.sel = {};
  }
  if (s.sel.active) {
    std::vector<Cell> goals;
    for (Cell k : s.sel.cells)
      if (fm.flat[k]) goals.push_back(k);
    PlanResult pr = plan_to(goals, fm.flat);
    if (!pr.reachable || pr.arrived) {
      replan();
      if (s.sel.active && !s.sel.pseudo) {
        goals.clear();
        for (Cell k : s.sel.cells)
          if (fm.flat[k]) goals.push_back(k);
        pr = plan_to(goals, fm.flat);
      }
    }
    if (s.sel.active && !s.sel.pseudo && pr.reachable && !pr.arrived) {
      tr["selected_frontier"] = s.sel.frontier_id;
      tr["S_s"] = s.sel.s_s;
      tr["S_g"] = s.sel.s_g;
      return emit(pr.action, s.sel.branch);
    }
    if (s.sel.active && s.sel.pseudo) {
      if (auto d = run_stairs()) return *d;
    }
    s.sel = {};
  }

  // ---- no frontier: stairs, then give up ---------------------------------
  if (!start_cell(fm.flat) && fm.base_z) {
    // off the usable set (e.g. after a collision mark): rotate and try again
    if (++s.recover <= 12) return emit(Action::TurnLeft, "recover");
  }
  s.recover = 0;
  fm.exhausted = true;
  if (cfg.stairs) {
    refresh_stair_lists();
    if (!floor_open(f + 1)) s.stair.up_list.clear();
    if (!floor_open(f - 1)) s.stair.down_list.clear();
    StairUpdate u = update_stair_state(s.stair, grid, stair_layers(), pose, 0, 0, cfg.stair);
    if (!u.exhausted) {
      s.stair = u.state;
      s.stair_target = s.stair.up ? f + 1 : f - 1;
      tr["branch"] = "stair";
      s.stair_ticks = 0;
      if (auto d = run_stairs()) return *d;
    }
  }
  return emit(Action::Stop, "exhausted");
}

}  // namespace sgnav
