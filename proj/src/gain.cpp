#include "sgnav/gain.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <regex>

#include "sgnav/llm_client.hpp"

namespace sgnav {

Subgraph extract_subgraph(const SceneGraph& g, Vec2 at, int floor, double radius) {
  Subgraph s;
  for (const auto& o : g.objects) {
    if (o.floor != floor || distance(o.position, at) > radius) continue;
    s.objects.push_back(o.id);
    if (o.region >= 0 && std::find(s.regions.begin(), s.regions.end(), o.region) == s.regions.end())
      s.regions.push_back(o.region);
  }
  std::sort(s.regions.begin(), s.regions.end());
  return s;
}

double NodeScorer::score_floor(const std::string& level, const std::string& q) {
  double s = 0;
  for (const auto& l : region_vocabulary()) s += fx_.floor_prior(level, l) * fx_.p_object(l, q);
  return std::clamp(s, 0.0, 1.0);
}

double DistanceScorer::score_object(const ObjectNode& o, const std::string&, const ScoreContext& ctx) {
  return 1.0 / (1.0 + distance(o.position, ctx.agent) / ctx.map_diagonal);
}

double DistanceScorer::score_region(const RegionNode& r, const std::string&, const ScoreContext& ctx) {
  return 1.0 / (1.0 + distance(r.center, ctx.agent) / ctx.map_diagonal);
}

double PriorTableScorer::object_cooccurrence(const std::string& cat, const std::string& q) const {
  if (cat == q) return 1.0;
  double num = 0, den = 0;
  for (const auto& [label, row] : fx_.cooccurrence()) {
    double pc = fx_.p_object(label, cat);
    num += pc * fx_.p_object(label, q);
    den += pc;
  }
  return den > 0 ? std::clamp(num / den, 0.0, 1.0) : 0.0;
}

double PriorTableScorer::score_object(const ObjectNode& o, const std::string& q, const ScoreContext&) {
  double s = object_cooccurrence(o.category, q);
  if (o.provenance == Provenance::Imagined) s *= o.confidence;
  return s;
}

double PriorTableScorer::score_region(const RegionNode& r, const std::string& q, const ScoreContext&) {
  double s = 0;
  for (const auto& [l, c] : r.caption) s += c * fx_.p_object(l, q);
  return std::clamp(s, 0.0, 1.0);
}

namespace {

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return 0.0;
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  if (aa <= 0 || bb <= 0) return 0.0;
  return std::clamp(ab / std::sqrt(aa * bb), 0.0, 1.0);
}

}  // namespace

std::vector<double> EmbeddingScorer::category_embedding(const std::string& cat) const {
  std::vector<double> v;
  for (const auto& l : region_vocabulary()) v.push_back(fx_.p_object(l, cat));
  return v;
}

double EmbeddingScorer::score_object(const ObjectNode& o, const std::string& q, const ScoreContext&) {
  auto target = category_embedding(q);
  double s = cosine(o.embedding.size() == target.size() ? o.embedding : category_embedding(o.category), target);
  if (o.provenance == Provenance::Imagined) s *= o.confidence;
  return s;
}

double EmbeddingScorer::score_region(const RegionNode& r, const std::string& q, const ScoreContext&) {
  std::vector<double> v;
  for (const auto& l : region_vocabulary()) v.push_back(caption_score(r.caption, l));
  return cosine(v, category_embedding(q));
}

double ExternalLlmScorer::ask(const std::string& desc, const std::string& q, double fallback) {
  auto key = std::make_pair(desc, q);
  if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  std::string prompt =
      "On a scale 0–1, how likely is a " + q + " found near " + desc + "? Answer with a number.";
  double v = fallback;
  try {
    std::string reply = client_->chat(prompt);
    std::smatch m;
    static const std::regex num(R"([-+]?(\d+(\.\d*)?|\.\d+)([eE][-+]?\d+)?)");
    if (std::regex_search(reply, m, num)) {
      v = std::clamp(std::stod(m.str()), 0.0, 1.0);
    } else {
      warnings.push_back("scorer reply without a number, using the prior table");
    }
  } catch (const TransportError& e) {
    warnings.push_back(std::string("scorer transport failure, using the prior table: ") + e.what());
  }
  cache_[key] = v;
  return v;
}

double ExternalLlmScorer::score_object(const ObjectNode& o, const std::string& q, const ScoreContext& ctx) {
  return ask("a " + o.category, q, fallback_.score_object(o, q, ctx));
}

double ExternalLlmScorer::score_region(const RegionNode& r, const std::string& q, const ScoreContext& ctx) {
  std::string label = r.caption.empty() ? "unknown" : r.caption.front().first;
  return ask("a " + label, q, fallback_.score_region(r, q, ctx));
}

ScorerKind scorer_kind_from_name(const std::string& s) {
  if (s == "distance") return ScorerKind::Distance;
  if (s == "embedding") return ScorerKind::Embedding;
  if (s == "prior") return ScorerKind::PriorTable;
  if (s == "llm") return ScorerKind::ExternalLLM;
  throw ConfigError("unknown scorer '" + s + "' (distance|embedding|prior|llm)");
}

const char* scorer_kind_name(ScorerKind k) {
  switch (k) {
    case ScorerKind::Distance: return "distance";
    case ScorerKind::Embedding: return "embedding";
    case ScorerKind::PriorTable: return "prior";
    case ScorerKind::ExternalLLM: return "llm";
  }
  return "?";
}

std::unique_ptr<NodeScorer> make_scorer(ScorerKind k, std::shared_ptr<LlmClient> client, const Fixtures& fx) {
  switch (k) {
    case ScorerKind::Distance: return std::make_unique<DistanceScorer>(fx);
    case ScorerKind::Embedding: return std::make_unique<EmbeddingScorer>(fx);
    case ScorerKind::PriorTable: return std::make_unique<PriorTableScorer>(fx);
    case ScorerKind::ExternalLLM:
      if (!client) throw ConfigError("llm scorer needs an endpoint");
      return std::make_unique<ExternalLlmScorer>(std::move(client), fx);
  }
  throw ConfigError("bad scorer kind");
}

ExploitationResult exploitation_gain(const SceneGraph& g, const Subgraph& sub, const std::string& q,
                                     NodeScorer& scorer, const ScoreContext& ctx, const GainParams& p) {
  ExploitationResult res;
  auto consider = [&](double s, NodeRef ref) {
    s = std::clamp(s, 0.0, 1.0);
    if (!res.contributing_node || s > res.value) {
      res.value = s;
      res.contributing_node = ref;
    }
  };
  if (p.use_regions)
    for (int id : sub.regions)
      if (const RegionNode* r = g.region(id)) consider(scorer.score_region(*r, q, ctx), {NodeRef::Region, id});
  if (p.use_objects)
    for (int id : sub.objects)
      if (const ObjectNode* o = g.object(id)) consider(scorer.score_object(*o, q, ctx), {NodeRef::Object, id});
  if (p.use_floors && !sub.empty()) consider(scorer.score_floor(ctx.floor_level, q), {NodeRef::Floor, 0});
  return res;
}

ExplorationResult exploration_gain(const OccupancyGrid& grid, const std::vector<Vec2>& path, double gamma,
                                   int num_rays, double r_ray) {
  if (path.empty()) throw ValidationError("exploration gain needs at least one waypoint");
  ExplorationResult res;
  const std::size_t n_cells = static_cast<std::size_t>(grid.width()) * grid.height();
  // reused per thread, a stamp per call avoids clearing
  thread_local std::vector<std::uint32_t> seen;
  thread_local std::uint32_t stamp = 0;
  if (seen.size() != n_cells) {
    seen.assign(n_cells, 0);
    stamp = 0;
  }
  if (++stamp == 0) {
    std::fill(seen.begin(), seen.end(), 0);
    stamp = 1;
  }
  double acc = 0, w = 1;
  for (const Vec2& wp : path) {
    int fresh = 0;
    for (std::size_t i : raycast_visible_cells(grid, wp, num_rays, r_ray)) {
      if (grid.state(i) != CellState::Unknown || seen[i] == stamp) continue;
      seen[i] = stamp;
      ++fresh;
    }
    res.first_seen.push_back(fresh);
    acc += w * fresh;
    w *= gamma;
  }
  const double cell_area = grid.resolution() * grid.resolution();
  res.value = std::clamp(acc * cell_area / (static_cast<double>(path.size()) * std::numbers::pi * r_ray * r_ray), 0.0, 1.0);
  return res;
}

std::size_t select_frontier(const std::vector<GainRecord>& recs, double lambda) {
  if (recs.empty()) throw ValidationError("no frontiers to select from");
  bool exploit = std::any_of(recs.begin(), recs.end(), [&](const GainRecord& r) { return r.s_s > lambda; });
  std::optional<std::size_t> best;
  auto key = [&](const GainRecord& r) { return exploit ? r.s_s : r.s_g; };
  for (std::size_t i = 0; i < recs.size(); ++i) {
    const GainRecord& r = recs[i];
    if (exploit && !(r.s_s > lambda)) continue;
    if (!best) {
      best = i;
      continue;
    }
    const GainRecord& b = recs[*best];
    if (key(r) != key(b)) {
      if (key(r) > key(b)) best = i;
    } else if (r.geodesic != b.geodesic) {
      if (r.geodesic < b.geodesic) best = i;
    } else if (r.frontier_id < b.frontier_id) {
      best = i;
    }
  }
  return *best;
}

}  // namespace sgnav
