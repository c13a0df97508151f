#include "sgnav/scenegraph.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "sgnav/kdtree.hpp"

namespace sgnav {

const char* provenance_name(Provenance p) { return p == Provenance::Observed ? "observed" : "imagined"; }

Caption normalized_top_k(Caption c, std::size_t k) {
  std::stable_sort(c.begin(), c.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  if (c.size() > k) c.resize(k);
  double s = 0;
  for (auto& [l, v] : c) s += v;
  if (s > 0)
    for (auto& [l, v] : c) v /= s;
  return c;
}

double caption_score(const Caption& c, const std::string& label) {
  for (const auto& [l, v] : c)
    if (l == label) return v;
  return 0.0;
}

Caption PriorCaptioner::caption(const std::vector<std::string>& cats) {
  if (cats.empty()) throw Error("no members to caption");
  Caption scores;
  for (const auto& label : region_vocabulary()) {
    double s = 0;
    for (const auto& c : cats) s += fx_.p_object(label, c);
    s /= static_cast<double>(cats.size());
    if (s > 0) scores.push_back({label, s});
  }
  if (scores.empty()) return {{"unknown", 1.0}};
  return normalized_top_k(std::move(scores), k_);
}

FloorNode& SceneGraph::ensure_floor(int id, double z) {
  for (auto& f : floors)
    if (f.id == id) {
      f.z_min = std::min(f.z_min, z);
      f.z_max = std::max(f.z_max, z);
      return f;
    }
  floors.push_back({id, z, z});
  std::sort(floors.begin(), floors.end(), [](const FloorNode& a, const FloorNode& b) { return a.id < b.id; });
  for (auto& f : floors)
    if (f.id == id) return f;
  return floors.back();
}

const FloorNode* SceneGraph::floor(int id) const {
  for (const auto& f : floors)
    if (f.id == id) return &f;
  return nullptr;
}

ObjectNode* SceneGraph::object(int id) {
  for (auto& o : objects)
    if (o.id == id) return &o;
  return nullptr;
}
const ObjectNode* SceneGraph::object(int id) const { return const_cast<SceneGraph*>(this)->object(id); }

RegionNode* SceneGraph::region(int id) {
  for (auto& r : regions)
    if (r.id == id) return &r;
  return nullptr;
}
const RegionNode* SceneGraph::region(int id) const { return const_cast<SceneGraph*>(this)->region(id); }

int SceneGraph::add_object(ObjectNode o) {
  if (o.id < 0) o.id = next_object_id;
  next_object_id = std::max(next_object_id, o.id + 1);
  ensure_floor(o.floor);
  objects.push_back(std::move(o));
  return objects.back().id;
}

int SceneGraph::add_region(RegionNode r) {
  if (r.id < 0) r.id = next_region_id;
  next_region_id = std::max(next_region_id, r.id + 1);
  ensure_floor(r.floor);
  regions.push_back(std::move(r));
  return regions.back().id;
}

void SceneGraph::remove_imagined_if(const std::function<bool(const RegionNode&)>& pred) {
  std::set<int> dropped;
  for (const auto& r : regions)
    if (r.provenance == Provenance::Imagined && pred(r)) dropped.insert(r.id);
  if (dropped.empty()) return;
  regions.erase(std::remove_if(regions.begin(), regions.end(), [&](const RegionNode& r) { return dropped.count(r.id); }),
                regions.end());
  objects.erase(std::remove_if(objects.begin(), objects.end(),
                               [&](const ObjectNode& o) {
                                 return o.provenance == Provenance::Imagined && dropped.count(o.region);
                               }),
                objects.end());
}

void SceneGraph::remove_imagined(int floor_id) {
  remove_imagined_if([&](const RegionNode& r) { return r.floor == floor_id; });
  objects.erase(std::remove_if(objects.begin(), objects.end(),
                               [&](const ObjectNode& o) {
                                 return o.provenance == Provenance::Imagined && o.floor == floor_id;
                               }),
                objects.end());
}

std::vector<std::pair<int, int>> SceneGraph::edges() const {
  std::vector<std::pair<int, int>> e;
  for (const auto& r : regions) e.push_back({-(r.floor + 1), r.id});
  for (const auto& o : objects) e.push_back({o.region >= 0 ? o.region : -(o.floor + 1), o.id});
  return e;
}

void SceneGraph::check_tree() const {
  std::set<int> fids, rids, oids;
  for (const auto& f : floors)
    if (!fids.insert(f.id).second) throw ValidationError("duplicate floor id");
  for (const auto& r : regions) {
    if (!rids.insert(r.id).second) throw ValidationError("duplicate region id " + std::to_string(r.id));
    if (!fids.count(r.floor)) throw ValidationError("region without floor parent");
    for (int m : r.members) {
      const ObjectNode* o = object(m);
      if (!o) throw ValidationError("region lists missing object " + std::to_string(m));
      if (o->region != r.id) throw ValidationError("object parent disagrees with region members");
    }
  }
  for (const auto& o : objects) {
    if (!oids.insert(o.id).second) throw ValidationError("duplicate object id " + std::to_string(o.id));
    if (!fids.count(o.floor)) throw ValidationError("object without floor");
    if (o.confidence < 0 || o.confidence > 1) throw ValidationError("object confidence outside [0,1]");
    if (o.provenance == Provenance::Observed && o.observation_count < 1)
      throw ValidationError("observed object never observed");
    if (o.provenance == Provenance::Imagined && o.observation_count != 0)
      throw ValidationError("imagined object with observations");
    if (o.region >= 0) {
      const RegionNode* r = region(o.region);
      if (!r) throw ValidationError("object parent region missing");
      if (r->floor != o.floor) throw ValidationError("object and parent region on different floors");
      if (std::find(r->members.begin(), r->members.end(), o.id) == r->members.end())
        throw ValidationError("object not listed by its region");
    }
  }
}

namespace {

nlohmann::ordered_json caption_json(const Caption& c) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& [l, v] : c) j[l] = v;
  return j;
}

nlohmann::ordered_json object_json(const ObjectNode& o) {
  nlohmann::ordered_json j;
  j["id"] = o.id;
  j["caption"] = o.category;
  j["center"] = {o.position.x, o.position.y};
  j["confidence"] = o.confidence;
  j["observation_count"] = o.observation_count;
  j["floor"] = o.floor;
  j["provenance"] = provenance_name(o.provenance);
  if (o.provenance == Provenance::Imagined) j["corr_score"] = o.corr_score;
  return j;
}

Provenance parse_provenance(const nlohmann::json& j) {
  return j.value("provenance", std::string("observed")) == "imagined" ? Provenance::Imagined : Provenance::Observed;
}

ObjectNode object_from(const nlohmann::json& j, int floor, int region) {
  ObjectNode o;
  o.id = j.value("id", -1);
  o.category = j.at("caption").get<std::string>();
  o.position = {j.at("center").at(0).get<double>(), j.at("center").at(1).get<double>()};
  o.confidence = j.value("confidence", 1.0);
  o.floor = j.value("floor", floor);
  o.provenance = parse_provenance(j);
  o.observation_count = j.value("observation_count", o.provenance == Provenance::Observed ? 1 : 0);
  o.weight = o.confidence;
  o.corr_score = j.value("corr_score", 0.0);
  o.region = region;
  return o;
}

}  // namespace

nlohmann::ordered_json SceneGraph::to_json() const {
  nlohmann::ordered_json j;
  j["schema"] = "sgnav.scenegraph/1";
  j["floors"] = nlohmann::ordered_json::array();
  for (const auto& f : floors) j["floors"].push_back({{"id", f.id}, {"z_min", f.z_min}, {"z_max", f.z_max}});
  j["regions"] = nlohmann::ordered_json::array();
  for (const auto& r : regions) {
    nlohmann::ordered_json rj;
    rj["id"] = r.id;
    rj["caption"] = caption_json(r.caption);
    rj["center"] = {r.center.x, r.center.y};
    rj["floor"] = r.floor;
    rj["provenance"] = provenance_name(r.provenance);
    if (!r.reasoning.empty()) rj["reasoning"] = r.reasoning;
    rj["objects"] = nlohmann::ordered_json::array();
    for (int m : r.members)
      if (const ObjectNode* o = object(m)) rj["objects"].push_back(object_json(*o));
    j["regions"].push_back(rj);
  }
  j["objects"] = nlohmann::ordered_json::array();
  for (const auto& o : objects)
    if (o.region < 0) j["objects"].push_back(object_json(o));
  return j;
}

SceneGraph SceneGraph::from_json(const nlohmann::json& j) {
  SceneGraph g;
  if (j.contains("floors"))
    for (const auto& f : j["floors"]) g.floors.push_back({f.at("id"), f.value("z_min", 0.0), f.value("z_max", 0.0)});
  int auto_region = 0;
  for (const auto& rj : j.value("regions", nlohmann::json::array())) {
    RegionNode r;
    if (rj.contains("id") && rj["id"].is_number_integer()) r.id = rj["id"];
    else r.id = 100000 + auto_region;
    ++auto_region;
    for (const auto& [l, v] : rj.at("caption").items()) r.caption.push_back({l, v.get<double>()});
    std::stable_sort(r.caption.begin(), r.caption.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    r.center = {rj.at("center").at(0).get<double>(), rj.at("center").at(1).get<double>()};
    r.floor = rj.value("floor", 0);
    r.provenance = parse_provenance(rj);
    r.reasoning = rj.value("reasoning", std::string());
    for (const auto& oj : rj.value("objects", nlohmann::json::array())) {
      ObjectNode o = object_from(oj, r.floor, r.id);
      if (o.id < 0) o.id = g.next_object_id;
      r.members.push_back(o.id);
      g.add_object(std::move(o));
    }
    g.add_region(std::move(r));
  }
  for (const auto& oj : j.value("objects", nlohmann::json::array())) {
    ObjectNode o = object_from(oj, 0, -1);
    g.add_object(std::move(o));
  }
  for (const auto& r : g.regions) g.ensure_floor(r.floor);
  return g;
}

double footprint_radius(const std::string& category, const Fixtures& fx) {
  ObjectShape s = fx.shape(category);
  return std::max(s.half_x, s.half_y);
}

int corridor_wall_count(const WallQuery& w, Vec2 a, Vec2 b, double ra, double rb, int half_width_cells) {
  if (!w.wall) return 0;
  const double res = w.resolution;
  const double hw = half_width_cells * res;
  const Vec2 d = b - a;
  const double len = d.norm();
  const double pad = hw + res;
  int c0 = static_cast<int>(std::floor((std::min(a.x, b.x) - pad - w.origin.x) / res));
  int c1 = static_cast<int>(std::floor((std::max(a.x, b.x) + pad - w.origin.x) / res));
  int r0 = static_cast<int>(std::floor((std::min(a.y, b.y) - pad - w.origin.y) / res));
  int r1 = static_cast<int>(std::floor((std::max(a.y, b.y) + pad - w.origin.y) / res));
  c0 = std::max(c0, 0);
  r0 = std::max(r0, 0);
  c1 = std::min(c1, w.wall->width - 1);
  r1 = std::min(r1, w.wall->height - 1);
  int n = 0;
  for (int r = r0; r <= r1; ++r) {
    for (int c = c0; c <= c1; ++c) {
      if (!w.wall->at(r, c)) continue;
      Vec2 p{w.origin.x + (c + 0.5) * res, w.origin.y + (r + 0.5) * res};
      Vec2 ap = p - a;
      double t, perp;
      if (len < 1e-12) {
        t = 0;
        perp = ap.norm();
      } else {
        t = (ap.x * d.x + ap.y * d.y) / len;
        perp = std::fabs(ap.x * d.y - ap.y * d.x) / len;
      }
      if (t < 0 || t > len || perp > hw) continue;
      if (distance(p, a) <= ra || distance(p, b) <= rb) continue;
      ++n;
    }
  }
  return n;
}

std::vector<std::pair<int, int>> region_links(const std::vector<ObjectNode>& objs, const WallQuery& walls,
                                              const GroupingParams& p, const Fixtures& fx) {
  std::vector<Vec2> pts;
  for (const auto& o : objs) pts.push_back(o.position);
  KdTree2 tree(pts);
  std::set<std::pair<int, int>> links;
  const double margin = p.endpoint_margin * walls.resolution;
  for (int i = 0; i < static_cast<int>(objs.size()); ++i) {
    for (int j : tree.knn_of(i, p.k)) {
      auto key = std::minmax(i, j);
      if (links.count(key)) continue;
      if (distance(pts[i], pts[j]) >= p.d_max) continue;
      int walls_crossed = corridor_wall_count(walls, pts[i], pts[j], footprint_radius(objs[i].category, fx) + margin,
                                              footprint_radius(objs[j].category, fx) + margin, p.corridor_half_width);
      if (walls_crossed >= p.w_max) continue;
      links.insert(key);
    }
  }
  return {links.begin(), links.end()};
}

std::vector<GroupedRegion> group_regions(const std::vector<ObjectNode>& objs, const WallQuery& walls,
                                         const GroupingParams& p, const Fixtures& fx) {
  const int n = static_cast<int>(objs.size());
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int x) { return parent[x] == x ? x : parent[x] = find(parent[x]); };
  for (auto [i, j] : region_links(objs, walls, p, fx)) {
    int a = find(i), b = find(j);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
  std::map<int, std::vector<int>> comps;
  for (int i = 0; i < n; ++i) comps[find(i)].push_back(i);
  std::vector<GroupedRegion> out;
  for (auto& [root, members] : comps) {
    if (static_cast<int>(members.size()) < p.n_min) continue;
    GroupedRegion g;
    g.members = members;
    for (int m : members) g.center = g.center + objs[m].position;
    g.center = g.center * (1.0 / members.size());
    out.push_back(std::move(g));
  }
  return out;
}

RegionNode caption_region(RegionNode region, const std::vector<std::string>& cats, RegionCaptioner& captioner) {
  try {
    Caption c = captioner.caption(cats);
    if (c.empty()) throw Error("empty caption");
    region.caption = normalized_top_k(std::move(c), 2);
  } catch (const std::exception&) {
    region.caption = {{"unknown", 1.0}};
  }
  return region;
}

void regroup_floor(SceneGraph& g, int floor_id, const WallQuery& walls, RegionCaptioner& captioner,
                   const GroupingParams& p) {
  std::vector<ObjectNode> objs;
  for (const auto& o : g.objects)
    if (o.floor == floor_id && o.provenance == Provenance::Observed) objs.push_back(o);
  auto groups = group_regions(objs, walls, p);

  std::vector<const RegionNode*> old;
  for (const auto& r : g.regions)
    if (r.floor == floor_id && r.provenance == Provenance::Observed) old.push_back(&r);
  struct Match {
    int overlap, old_id, new_idx;
  };
  std::vector<Match> cands;
  for (std::size_t ni = 0; ni < groups.size(); ++ni) {
    std::set<int> ids;
    for (int m : groups[ni].members) ids.insert(objs[m].id);
    for (const RegionNode* r : old) {
      int ov = 0;
      for (int m : r->members) ov += ids.count(m) ? 1 : 0;
      if (ov > 0) cands.push_back({ov, r->id, static_cast<int>(ni)});
    }
  }
  std::sort(cands.begin(), cands.end(), [](const Match& a, const Match& b) {
    if (a.overlap != b.overlap) return a.overlap > b.overlap;
    if (a.old_id != b.old_id) return a.old_id < b.old_id;
    return a.new_idx < b.new_idx;
  });
  std::vector<int> assigned(groups.size(), -1);
  std::set<int> used_old;
  for (const auto& m : cands) {
    if (assigned[m.new_idx] >= 0 || used_old.count(m.old_id)) continue;
    assigned[m.new_idx] = m.old_id;
    used_old.insert(m.old_id);
  }
  g.regions.erase(std::remove_if(g.regions.begin(), g.regions.end(),
                                 [&](const RegionNode& r) {
                                   return r.floor == floor_id && r.provenance == Provenance::Observed;
                                 }),
                  g.regions.end());
  for (auto& o : g.objects)
    if (o.floor == floor_id && o.provenance == Provenance::Observed) o.region = -1;
  for (std::size_t ni = 0; ni < groups.size(); ++ni) {
    RegionNode r;
    r.id = assigned[ni] >= 0 ? assigned[ni] : g.next_region_id;
    r.floor = floor_id;
    r.center = groups[ni].center;
    std::vector<std::string> cats;
    for (int m : groups[ni].members) {
      r.members.push_back(objs[m].id);
      cats.push_back(objs[m].category);
    }
    r = caption_region(std::move(r), cats, captioner);
    for (int id : r.members) g.object(id)->region = r.id;
    g.add_region(std::move(r));
  }
  std::sort(g.regions.begin(), g.regions.end(), [](const RegionNode& a, const RegionNode& b) { return a.id < b.id; });
}

void update_graph(SceneGraph& g, const std::vector<Detection>& dets, const WallQuery& walls,
                  RegionCaptioner& captioner, const GroupingParams& p) {
  for (const auto& d : dets)
    if (!(d.confidence >= 0.0 && d.confidence <= 1.0))
      throw ValidationError("detection confidence outside [0,1]: " + d.category);
  std::set<int> touched;
  for (const auto& d : dets) {
    ObjectNode* best = nullptr;
    double bd = p.merge_radius;
    for (auto& o : g.objects) {
      if (o.provenance != Provenance::Observed || o.floor != d.floor || o.category != d.category) continue;
      double dist = distance(o.position, d.position);
      if (dist <= bd) {
        bd = dist;
        best = &o;
      }
    }
    if (best) {
      double w = best->weight + d.confidence;
      if (w > 0 && !(best->position == d.position)) best->position = (best->position * best->weight + d.position * d.confidence) * (1.0 / w);
      best->weight = w;
      best->observation_count += 1;
      best->confidence = std::max(best->confidence, d.confidence);
      if (std::find(best->source_views.begin(), best->source_views.end(), d.view_id) == best->source_views.end())
        best->source_views.push_back(d.view_id);
      if (d.source_object >= 0 &&
          std::find(best->source_objects.begin(), best->source_objects.end(), d.source_object) ==
              best->source_objects.end())
        best->source_objects.push_back(d.source_object);
    } else {
      ObjectNode o;
      o.category = d.category;
      o.position = d.position;
      o.floor = d.floor;
      o.confidence = d.confidence;
      o.weight = d.confidence;
      o.observation_count = 1;
      o.source_views = {d.view_id};
      if (d.source_object >= 0) o.source_objects = {d.source_object};
      g.add_object(std::move(o));
      touched.insert(d.floor);
    }
  }
  for (int f : touched) regroup_floor(g, f, walls, captioner, p);
}

}  // namespace sgnav
