#include "sgnav/imagination.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "sgnav/llm_client.hpp"

namespace sgnav {

using nlohmann::json;

namespace {

const int kDr8[8] = {-1, -1, -1, 0, 0, 1, 1, 1};
const int kDc8[8] = {-1, 0, 1, -1, 1, -1, 0, 1};
const int kDr4[4] = {-1, 1, 0, 0};
const int kDc4[4] = {0, 0, -1, 1};

bool touches_free(const OccupancyGrid& g, Cell k) {
  for (int d = 0; d < 4; ++d) {
    Cell n{k.r + kDr4[d], k.c + kDc4[d]};
    if (g.in_bounds(n) && g.state(n) == CellState::Free) return true;
  }
  return false;
}

bool inside(const BBox& b, Cell k) { return k.r >= b.r0 && k.r <= b.r1 && k.c >= b.c0 && k.c <= b.c1; }

// 8-connected Unknown pieces inside win; `same` restricts which neighbours join.
template <class Same>
std::vector<std::vector<Cell>> unknown_components(const OccupancyGrid& g, const BBox& win,
                                                  const std::vector<Cell>& seeds, Raster<int>& label, int& next,
                                                  Same same) {
  std::vector<std::vector<Cell>> out;
  for (Cell s : seeds) {
    if (label[s] >= 0) continue;
    std::vector<Cell> comp{s};
    label[s] = next;
    for (std::size_t i = 0; i < comp.size(); ++i) {
      Cell k = comp[i];
      for (int d = 0; d < 8; ++d) {
        Cell n{k.r + kDr8[d], k.c + kDc8[d]};
        if (!inside(win, n) || g.state(n) != CellState::Unknown || label[n] >= 0 || !same(k, n)) continue;
        label[n] = next;
        comp.push_back(n);
      }
    }
    ++next;
    out.push_back(std::move(comp));
  }
  return out;
}

std::string py_str(const std::string& s) { return "'" + s + "'"; }

std::string caption_repr(const Caption& c) {
  std::string s = "{";
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (i) s += ", ";
    s += py_str(c[i].first) + ": " + py_float(c[i].second);
  }
  return s + "}";
}

int word_count(const std::string& s) {
  std::istringstream in(s);
  std::string w;
  int n = 0;
  while (in >> w) ++n;
  return n;
}

std::string first_words(const std::string& s, int k) {
  std::istringstream in(s);
  std::string w, out;
  for (int i = 0; i < k && in >> w; ++i) out += (i ? " " : "") + w;
  return out;
}

std::pair<double, double> parse_point(const json& j, const std::string& field) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw SchemaError(field, "expected [x, y]");
  return {j[0].get<double>(), j[1].get<double>()};
}

double parse_number(const json& obj, const char* key, const std::string& field, std::optional<double> fallback) {
  if (!obj.contains(key)) {
    if (fallback) return *fallback;
    throw SchemaError(field, "missing");
  }
  if (!obj[key].is_number()) throw SchemaError(field, "expected a number");
  return obj[key].get<double>();
}

std::vector<std::string> choice_set(bool full) {
  if (!full) return prediction_choices();
  auto v = region_vocabulary();
  v.push_back("unknown");
  return v;
}

}  // namespace

std::vector<UnknownRegion> identify_unknown_regions(const OccupancyGrid& g, const SceneGraph* graph,
                                                    const UnknownParams& p) {
  std::vector<UnknownRegion> out;
  if (g.known_bbox().empty()) return out;
  BBox win = g.known_bbox().grown(p.search_margin, g.height(), g.width());

  Raster<int> label(g.width(), g.height(), -1);
  std::vector<Cell> seeds;
  for (int r = win.r0; r <= win.r1; ++r)
    for (int c = win.c0; c <= win.c1; ++c)
      if (g.state(Cell{r, c}) == CellState::Unknown) seeds.push_back({r, c});
  int next = 0;
  auto comps = unknown_components(g, win, seeds, label, next, [](Cell, Cell) { return true; });

  // Large components are cut along a fixed tile lattice so each piece stays local.
  const int tile = std::max(1, static_cast<int>(std::lround(p.max_extent / g.resolution())));
  std::vector<std::vector<Cell>> pieces;
  for (auto& comp : comps) {
    BBox b;
    for (Cell k : comp) b.add(k);
    if (b.r1 - b.r0 + 1 <= tile && b.c1 - b.c0 + 1 <= tile) {
      pieces.push_back(std::move(comp));
      continue;
    }
    for (Cell k : comp) label[k] = -1;
    auto tile_of = [&](Cell k) { return std::pair((k.r - win.r0) / tile, (k.c - win.c0) / tile); };
    auto sub = unknown_components(g, win, comp, label, next, [&](Cell a, Cell n) { return tile_of(a) == tile_of(n); });
    for (auto& s : sub) pieces.push_back(std::move(s));
  }

  for (auto& cells : pieces) {
    if (static_cast<int>(cells.size()) < p.min_unknown_area) continue;
    if (std::none_of(cells.begin(), cells.end(), [&](Cell k) { return touches_free(g, k); })) continue;
    UnknownRegion u;
    std::sort(cells.begin(), cells.end());
    double sr = 0, sc = 0;
    for (Cell k : cells) {
      sr += k.r;
      sc += k.c;
    }
    sr /= static_cast<double>(cells.size());
    sc /= static_cast<double>(cells.size());
    u.center = pixel_to_world(g, sr, sc);
    u.center_px = {static_cast<int>(std::lround(sr)), static_cast<int>(std::lround(sc))};
    u.cells = std::move(cells);
    if (graph) {
      for (const auto& r : graph->regions) {
        if (r.floor != g.floor_id() || r.provenance != Provenance::Observed) continue;
        double d = distance(r.center, u.center);
        if (d <= p.context_radius) u.nearby_regions.push_back({r.id, d});
      }
      std::sort(u.nearby_regions.begin(), u.nearby_regions.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second < b.second : a.first < b.first;
      });
    }
    out.push_back(std::move(u));
  }
  std::sort(out.begin(), out.end(), [](const UnknownRegion& a, const UnknownRegion& b) {
    if (a.center.y != b.center.y) return a.center.y < b.center.y;
    if (a.center.x != b.center.x) return a.center.x < b.center.x;
    return a.cells.front() < b.cells.front();
  });
  for (std::size_t i = 0; i < out.size(); ++i) out[i].id = static_cast<int>(i);
  return out;
}

std::pair<double, double> world_to_pixel(const OccupancyGrid& g, Vec2 p) {
  return {(p.y - g.origin().y) / g.resolution() - 0.5, (p.x - g.origin().x) / g.resolution() - 0.5};
}

Vec2 pixel_to_world(const OccupancyGrid& g, double row, double col) {
  return {g.origin().x + (col + 0.5) * g.resolution(), g.origin().y + (row + 0.5) * g.resolution()};
}

BevLayout build_bev(const SceneGraph& graph, const OccupancyGrid& grid, const std::vector<UnknownRegion>& unknowns) {
  BevLayout bev;
  bev.grid = &grid;
  auto marker = [&](BevMarker::Kind kind, int id, Vec2 p, std::string label) {
    if (!grid.contains(p)) return;
    bev.markers.push_back({kind, id, grid.world_to_cell(p), std::move(label)});
  };
  for (const auto& u : unknowns) bev.markers.push_back({BevMarker::Unknown, u.id, u.center_px, ""});
  for (const auto& r : graph.regions)
    if (r.floor == grid.floor_id() && r.provenance == Provenance::Observed)
      marker(BevMarker::Region, r.id, r.center, r.caption.empty() ? "unknown" : r.caption.front().first);
  for (const auto& o : graph.objects)
    if (o.floor == grid.floor_id() && o.provenance == Provenance::Observed)
      marker(BevMarker::Object, o.id, o.position, o.category);

  std::string t;
  for (const auto& u : unknowns) {
    t += "Unknown region " + std::to_string(u.id) + ", center: [" + std::to_string(u.center_px.r) + " " +
         std::to_string(u.center_px.c) + "], nearby regions:\n";
    if (u.nearby_regions.empty()) t += "None \n";
    for (const auto& [rid, d] : u.nearby_regions) {
      const RegionNode* r = graph.region(rid);
      if (!r) continue;
      auto [pr, pc] = world_to_pixel(grid, r->center);
      std::string objs = "[";
      for (std::size_t i = 0; i < r->members.size(); ++i) {
        const ObjectNode* o = graph.object(r->members[i]);
        if (i) objs += ", ";
        objs += py_str(o ? o->category : "unknown");
      }
      objs += "]";
      t += "Region " + std::to_string(r->id) + ": " + caption_repr(r->caption) + " center: [" + py_float(pr) + ", " +
           py_float(pc) + "] contained objects: " + objs + " \n";
    }
    t += "----------\n";
  }
  bev.text = std::move(t);
  return bev;
}

Image render_bev(const BevLayout& bev, int scale) {
  const OccupancyGrid& g = *bev.grid;
  scale = std::max(1, scale);
  Image img(g.width() * scale, g.height() * scale);
  for (int r = 0; r < g.height(); ++r)
    for (int c = 0; c < g.width(); ++c) {
      CellState s = g.state(Cell{r, c});
      Rgb v = s == CellState::Free ? Rgb{235, 235, 235} : s == CellState::Occupied ? Rgb{110, 110, 110} : Rgb{25, 25, 25};
      // image rows grow downward, world y grows upward
      int ir = (g.height() - 1 - r) * scale;
      for (int a = 0; a < scale; ++a)
        for (int b = 0; b < scale; ++b) img.set(ir + a, c * scale + b, v);
    }
  for (const auto& m : bev.markers) {
    int ir = (g.height() - 1 - m.px.r) * scale + scale / 2, ic = m.px.c * scale + scale / 2;
    switch (m.kind) {
      case BevMarker::Unknown: img.disk(ir, ic, 3 * scale, {220, 40, 40}); break;
      case BevMarker::Region: img.disk(ir, ic, 3 * scale, {0, 0, 0}); break;
      case BevMarker::Object: img.disk(ir, ic, 1 * scale, {30, 180, 60}); break;
    }
  }
  return img;
}

std::string build_prompt(const std::string& target, const BevLayout& bev) {
  std::string p =
      "You are given the bird eye view of the house, and the goal is to predict what the robot might see when it "
      "explores the unknown regions (dark area) that can help find **" +
      target +
      "**.\n"
      "For each region, infer top 2 most likely captions with confidence scores (sum of two confidence scores should "
      "be 1) and also the top 3 most typical objects within the region.\n"
      "HINT: Think about the typical layout of a house, here are some examples layout with possibilities:\n"
      "- kitchen is usually near bathroom, living room, laundry room, study room.\n"
      "- study room is usually near living room, bathroom, kitchen, hallway.\n"
      "- dining room is usually near study room, storage, bathroom.\n"
      "- living room is usually near bathroom, study room, laundry room, kitchen, bedroom.\n"
      "- bathroom is usually near bedroom, hallway, laundry room, entryway.\n"
      "- bedroom is usually near bathroom, wardrobe area, hallway, entryway.\n"
      "- bedroom is usually NOT near study room, kitchen.\n"
      "- dining room is usually NOT near bedroom.\n"
      "- study room is usually NOT near bedroom.\n"
      "- living room is usually NOT near storage, wardrobe area.\n"
      "**Available region choices**: bathroom, kitchen, bedroom, dining room, living room, study room, unknown. Set "
      "caption to 'unknown' if you are uncertain or no choice makes sense.\n"
      "**Unknown regions locations and nearby regions**:\n";
  p += bev.text;
  p +=
      "Output Requirements:\n"
      "- DO NOT include the observed regions above, ONLY predict the unknown regions.\n"
      "- DO NOT explain your task, just give the short reasoning and the final prediction.\n"
      "- The scene graph must follow the given JSON structure. REMOVE spaces in the JSON string.\n"
      "- Including a start flag of \"Start\" and an end flag \"End\", in between is the final scene graph.\n"
      "- Give a short 20-words-max reasoning for each predicted region.\n"
      "Output Format:\n"
      "# Start\n"
      "```json\n"
      "```\n"
      "# End\n"
      "Example: \n"
      "dict('regions': [dict('id': pred_#RegionID, 'caption': dict(#RegionType1: #ConfScore1, #RegionType2: "
      "#ConfScore2), 'reasoning': #Reasoning, 'center': [x, y], 'objects': [dict('caption': #ObjectType, 'center': "
      "[x, y], 'confidence': #ConfScore, 'corr_score': #CorrelationWithTarget)])])])\n";
  return p;
}

ParseResult parse_prediction(const std::string& text, const ParseOptions& opt) {
  auto s = text.find("# Start");
  if (s == std::string::npos) throw MissingFlagsError("missing '# Start' flag");
  auto e = text.find("# End", s + 7);
  if (e == std::string::npos) throw MissingFlagsError("missing '# End' flag");
  std::string body = text.substr(s + 7, e - s - 7);
  auto fence = body.find("```");
  if (fence != std::string::npos) {
    auto nl = body.find('\n', fence);
    auto close = body.find("```", nl == std::string::npos ? fence + 3 : nl);
    if (nl == std::string::npos || close == std::string::npos) throw SchemaError("json", "unterminated code fence");
    body = body.substr(nl + 1, close - nl - 1);
  }

  json j;
  try {
    j = json::parse(body);
  } catch (const json::parse_error& ex) {
    throw SchemaError("json", ex.what());
  }
  if (!j.is_object() || !j.contains("regions") || !j["regions"].is_array())
    throw SchemaError("regions", "expected an array");

  const auto choices = choice_set(opt.full_vocabulary);
  ParseResult res;
  std::set<int> seen;
  for (std::size_t i = 0; i < j["regions"].size(); ++i) {
    const json& rj = j["regions"][i];
    const std::string f = "regions[" + std::to_string(i) + "]";
    if (!rj.is_object()) throw SchemaError(f, "expected an object");
    PredictedRegion pr;

    if (!rj.contains("id")) throw SchemaError(f + ".id", "missing");
    const json& idj = rj["id"];
    if (idj.is_number_integer()) {
      pr.target_unknown_region_id = idj.get<int>();
    } else if (idj.is_string()) {
      std::string id = idj.get<std::string>();
      if (id.rfind("pred_", 0) == 0) id = id.substr(5);
      try {
        std::size_t used = 0;
        pr.target_unknown_region_id = std::stoi(id, &used);
        if (used != id.size()) throw std::invalid_argument(id);
      } catch (const std::exception&) {
        throw SchemaError(f + ".id", "expected pred_<n>");
      }
    } else {
      throw SchemaError(f + ".id", "expected pred_<n>");
    }

    if (!rj.contains("caption") || !rj["caption"].is_object() || rj["caption"].empty())
      throw SchemaError(f + ".caption", "expected a non-empty label map");
    Caption cap;
    for (const auto& [label, v] : rj["caption"].items()) {
      if (!v.is_number()) throw SchemaError(f + ".caption." + label, "expected a number");
      double conf = v.get<double>();
      if (conf < 0) throw SchemaError(f + ".caption." + label, "negative confidence");
      std::string l = label;
      if (std::find(choices.begin(), choices.end(), l) == choices.end()) {
        res.warnings.push_back(f + ": label '" + l + "' outside vocabulary, using 'unknown'");
        l = "unknown";
      }
      auto it = std::find_if(cap.begin(), cap.end(), [&](const auto& p) { return p.first == l; });
      if (it != cap.end())
        it->second += conf;
      else
        cap.push_back({l, conf});
    }
    std::stable_sort(cap.begin(), cap.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    if (cap.size() > 2) {
      res.warnings.push_back(f + ": more than two captions, keeping the top two");
      cap.resize(2);
    }
    double sum = 0;
    for (const auto& [l, v] : cap) sum += v;
    if (sum <= 0) throw SchemaError(f + ".caption", "confidences sum to zero");
    if (std::abs(sum - 1.0) > 1e-6) {
      if (std::abs(sum - 1.0) > opt.sum_tolerance)
        res.warnings.push_back(f + ": caption confidences sum to " + py_float(sum) + ", renormalized");
      for (auto& [l, v] : cap) v /= sum;
    }
    pr.caption = std::move(cap);

    if (rj.contains("reasoning")) {
      if (!rj["reasoning"].is_string()) throw SchemaError(f + ".reasoning", "expected a string");
      pr.reasoning = rj["reasoning"].get<std::string>();
      if (word_count(pr.reasoning) > 20) {
        res.warnings.push_back(f + ": reasoning longer than 20 words, truncated");
        pr.reasoning = first_words(pr.reasoning, 20);
      }
    }
    if (!rj.contains("center")) throw SchemaError(f + ".center", "missing");
    pr.center = parse_point(rj["center"], f + ".center");

    if (rj.contains("objects")) {
      if (!rj["objects"].is_array()) throw SchemaError(f + ".objects", "expected an array");
      for (std::size_t k = 0; k < rj["objects"].size(); ++k) {
        const json& oj = rj["objects"][k];
        const std::string of = f + ".objects[" + std::to_string(k) + "]";
        if (!oj.is_object()) throw SchemaError(of, "expected an object");
        if (!oj.contains("caption") || !oj["caption"].is_string()) throw SchemaError(of + ".caption", "expected a string");
        PredictedObject po;
        po.category = oj["caption"].get<std::string>();
        if (!oj.contains("center")) throw SchemaError(of + ".center", "missing");
        po.center = parse_point(oj["center"], of + ".center");
        po.confidence = parse_number(oj, "confidence", of + ".confidence", std::nullopt);
        po.corr_score = parse_number(oj, "corr_score", of + ".corr_score", 0.0);
        if (po.confidence < 0 || po.confidence > 1) {
          res.warnings.push_back(of + ": confidence clamped to [0,1]");
          po.confidence = std::clamp(po.confidence, 0.0, 1.0);
        }
        pr.objects.push_back(std::move(po));
      }
    }
    if (!seen.insert(pr.target_unknown_region_id).second) {
      res.warnings.push_back(f + ": duplicate id pred_" + std::to_string(pr.target_unknown_region_id) + " dropped");
      continue;
    }
    res.regions.push_back(std::move(pr));
  }
  return res;
}

std::string serialize_prediction(const std::vector<PredictedRegion>& regions) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& r : regions) {
    nlohmann::ordered_json rj;
    rj["id"] = "pred_" + std::to_string(r.target_unknown_region_id);
    nlohmann::ordered_json cap = nlohmann::ordered_json::object();
    for (const auto& [l, v] : r.caption) cap[l] = v;
    rj["caption"] = cap;
    rj["reasoning"] = r.reasoning;
    rj["center"] = {r.center.first, r.center.second};
    nlohmann::ordered_json objs = nlohmann::ordered_json::array();
    for (const auto& o : r.objects)
      objs.push_back({{"caption", o.category},
                      {"center", {o.center.first, o.center.second}},
                      {"confidence", o.confidence},
                      {"corr_score", o.corr_score}});
    rj["objects"] = objs;
    arr.push_back(rj);
  }
  nlohmann::ordered_json root;
  root["regions"] = arr;
  return "# Start\n```json\n" + root.dump() + "\n```\n# End\n";
}

Caption AdjacencyPriorPredictor::score(const UnknownRegion& u, const SceneGraph& graph, const std::string& level) const {
  Caption scores;
  bool context = false;
  for (const auto& label : choice_set(full_)) {
    if (label == "unknown") continue;
    double s = 0;
    for (const auto& [rid, d] : u.nearby_regions) {
      const RegionNode* r = graph.region(rid);
      if (!r) continue;
      for (const auto& [l, conf] : r->caption) {
        if (l == "unknown") continue;
        s += conf * fx_.adjacency(l, label);
        context = true;
      }
    }
    scores.push_back({label, s});
  }
  if (!context)
    for (auto& [l, s] : scores) s = fx_.floor_prior(level, l);
  std::erase_if(scores, [](const auto& p) { return p.second <= 0; });
  if (scores.empty()) return {{"unknown", 1.0}};
  return normalized_top_k(std::move(scores), 2);
}

ParseResult AdjacencyPriorPredictor::predict(const PredictionContext& ctx) {
  ParseResult res;
  if (!ctx.unknowns || !ctx.graph || !ctx.bev || !ctx.bev->grid) return res;
  const OccupancyGrid& g = *ctx.bev->grid;
  for (const auto& u : *ctx.unknowns) {
    PredictedRegion pr;
    pr.target_unknown_region_id = u.id;
    pr.caption = score(u, *ctx.graph, ctx.floor_level);
    auto px = world_to_pixel(g, u.center);
    pr.center = px;
    if (u.nearby_regions.empty()) {
      pr.reasoning = "no observed context, using the " + ctx.floor_level + " floor prior";
    } else {
      std::vector<std::string> near;
      for (const auto& [rid, d] : u.nearby_regions) {
        const RegionNode* r = ctx.graph->region(rid);
        if (r && !r->caption.empty() && r->caption.front().first != "unknown" &&
            std::find(near.begin(), near.end(), r->caption.front().first) == near.end())
          near.push_back(r->caption.front().first);
        if (near.size() == 3) break;
      }
      pr.reasoning = "adjacent to observed";
      for (std::size_t i = 0; i < near.size(); ++i) pr.reasoning += (i ? ", " : " ") + near[i];
    }
    const std::string& top = pr.caption.front().first;
    double top_conf = pr.caption.front().second;
    if (top != "unknown") {
      auto it = fx_.cooccurrence().find(top);
      if (it != fx_.cooccurrence().end()) {
        std::vector<std::pair<std::string, double>> objs(it->second.begin(), it->second.end());
        std::stable_sort(objs.begin(), objs.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
        for (std::size_t k = 0; k < objs.size() && k < 3; ++k) {
          if (objs[k].second <= 0) break;
          pr.objects.push_back({objs[k].first, px, std::clamp(objs[k].second * top_conf, 0.0, 1.0),
                                objs[k].first == ctx.target ? 1.0 : fx_.p_object(top, ctx.target)});
        }
      }
    }
    res.regions.push_back(std::move(pr));
  }
  return res;
}

ParseResult ScriptedPredictor::predict(const PredictionContext&) {
  if (responses_.empty()) throw TransportError("scripted predictor has no responses");
  const std::string& r = responses_[std::min(next_, responses_.size() - 1)];
  ++next_;
  return parse_prediction(r, opt_);
}

ParseResult HttpPredictor::predict(const PredictionContext& ctx) {
  if (!ctx.bev || !ctx.bev->grid) throw Error("http predictor needs a BEV layout");
  std::string png = encode_png(render_bev(*ctx.bev));
  return parse_prediction(client_->chat(build_prompt(ctx.target, *ctx.bev), png), opt_);
}

PredictionOutcome predict_scene_graph(SceneGraph& graph, const OccupancyGrid& grid, int floor_id,
                                      ScenePredictor& predictor, const PredictionContext& ctx) {
  PredictionOutcome out;
  if (!ctx.unknowns || ctx.unknowns->empty()) return out;
  ParseResult res;
  try {
    res = predictor.predict(ctx);
  } catch (const TransportError& e) {
    out.transport_failed = true;
    out.error = e.what();
    return out;
  } catch (const MissingFlagsError& e) {
    out.error = e.what();
    return out;
  } catch (const SchemaError& e) {
    out.error = e.what();
    return out;
  }
  out.warnings = res.warnings;

  std::map<int, const UnknownRegion*> by_id;
  for (const auto& u : *ctx.unknowns) by_id[u.id] = &u;
  // unknown-region ids are renumbered on every pass, so the whole floor's imagined set is replaced
  graph.remove_imagined(floor_id);
  for (const auto& pr : res.regions) {
    if (!by_id.count(pr.target_unknown_region_id)) {
      out.warnings.push_back("prediction for unknown region " + std::to_string(pr.target_unknown_region_id) +
                             " has no matching region, dropped");
      continue;
    }
    RegionNode r;
    r.caption = pr.caption;
    r.center = pixel_to_world(grid, pr.center.first, pr.center.second);
    r.floor = floor_id;
    r.provenance = Provenance::Imagined;
    r.unknown_region = pr.target_unknown_region_id;
    r.reasoning = pr.reasoning;
    int rid = graph.add_region(std::move(r));
    std::vector<int> members;
    for (const auto& po : pr.objects) {
      ObjectNode o;
      o.category = po.category;
      o.position = pixel_to_world(grid, po.center.first, po.center.second);
      o.floor = floor_id;
      o.confidence = po.confidence;
      o.weight = po.confidence;
      o.corr_score = po.corr_score;
      o.provenance = Provenance::Imagined;
      o.region = rid;
      o.unknown_region = pr.target_unknown_region_id;
      members.push_back(graph.add_object(std::move(o)));
    }
    graph.region(rid)->members = std::move(members);
    ++out.regions_added;
  }
  return out;
}

int prune_observed_imagined(SceneGraph& graph, const OccupancyGrid& grid, int floor_id) {
  std::size_t before = graph.regions.size();
  graph.remove_imagined_if([&](const RegionNode& r) {
    if (r.floor != floor_id) return false;
    Cell k = grid.world_to_cell(r.center);
    return grid.in_bounds(k) && grid.state(k) != CellState::Unknown;
  });
  return static_cast<int>(before - graph.regions.size());
}

GraphScore graph_precision_recall(const SceneGraph& pred, const SceneGraph& truth, int k, double match_radius) {
  GraphScore s;
  s.truth_regions = static_cast<int>(truth.regions.size());
  s.predicted_regions = static_cast<int>(pred.regions.size());
  if (truth.regions.empty()) throw ValidationError("truth graph has no regions");
  if (pred.regions.empty()) return s;

  const int nt = s.truth_regions, np = s.predicted_regions;
  std::vector<std::vector<int>> adj(nt);
  for (int t = 0; t < nt; ++t) {
    const auto& tr = truth.regions[t];
    if (tr.caption.empty()) continue;
    const std::string& label = tr.caption.front().first;
    for (int p = 0; p < np; ++p) {
      const auto& pr = pred.regions[p];
      if (pr.floor != tr.floor || distance(pr.center, tr.center) > match_radius) continue;
      Caption top = pr.caption;
      std::stable_sort(top.begin(), top.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
      for (int i = 0; i < k && i < static_cast<int>(top.size()); ++i)
        if (top[i].first == label) {
          adj[t].push_back(p);
          break;
        }
    }
  }
  // Kuhn's augmenting paths
  std::vector<int> owner(np, -1);
  std::vector<char> seen;
  std::function<bool(int)> augment = [&](int t) {
    for (int p : adj[t]) {
      if (seen[p]) continue;
      seen[p] = 1;
      if (owner[p] < 0 || augment(owner[p])) {
        owner[p] = t;
        return true;
      }
    }
    return false;
  };
  for (int t = 0; t < nt; ++t) {
    seen.assign(np, 0);
    if (augment(t)) ++s.matches;
  }
  s.recall = static_cast<double>(s.matches) / nt;
  s.precision = static_cast<double>(s.matches) / np;
  return s;
}

}  // namespace sgnav
