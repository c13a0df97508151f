#include "sgnav/fixtures.hpp"

#include <algorithm>
#include <nlohmann/json.hpp>

#include "sgnav/common.hpp"

namespace sgnav {

using nlohmann::json;

const std::vector<std::string>& region_vocabulary() {
  static const std::vector<std::string> v = {
      "living room", "study room", "dining room", "stair hall", "hallway", "bedroom",
      "wardrobe area", "balcony", "laundry room", "tv room", "gym", "entryway",
      "storage", "kitchen", "bathroom", "garage"};
  return v;
}

const std::vector<std::string>& prediction_choices() {
  static const std::vector<std::string> v = {"bathroom", "kitchen", "bedroom", "dining room",
                                             "living room", "study room", "unknown"};
  return v;
}

bool in_region_vocabulary(const std::string& label) {
  const auto& v = region_vocabulary();
  return std::find(v.begin(), v.end(), label) != v.end();
}

Fixtures Fixtures::from_json_text(const std::string& cooc, const std::string& adjacency,
                                  const std::string& floor_prior, const std::string& objects) {
  Fixtures f;
  try {
    f.cooc_ = json::parse(cooc).get<std::map<std::string, std::map<std::string, double>>>();
    json adj = json::parse(adjacency);
    f.adj_default_ = adj.at("default").get<double>();
    for (const auto& p : adj.at("pairs")) {
      std::string a = p.at(0), b = p.at(1);
      double w = p.at(2);
      f.adj_[{a, b}] = w;
      f.adj_[{b, a}] = w;
    }
    f.floor_prior_ = json::parse(floor_prior).get<std::map<std::string, std::map<std::string, double>>>();
    json shapes = json::parse(objects);
    for (const auto& [k, v] : shapes.items())
      f.shapes_[k] = ObjectShape{v.at(0).get<double>(), v.at(1).get<double>(), v.at(2).get<double>()};
  } catch (const json::exception& e) {
    throw ConfigError(std::string("fixture parse failed: ") + e.what());
  }
  for (const auto& [label, row] : f.cooc_)
    if (!in_region_vocabulary(label)) throw ConfigError("fixture region not in vocabulary: " + label);
  return f;
}

const Fixtures& Fixtures::builtin() {
  static const Fixtures f = from_json_text(embedded::kCooccurrence, embedded::kAdjacency,
                                           embedded::kFloorPrior, embedded::kObjects);
  return f;
}

double Fixtures::p_object(const std::string& region, const std::string& category) const {
  auto it = cooc_.find(region);
  if (it == cooc_.end()) return 0.0;
  auto jt = it->second.find(category);
  return jt == it->second.end() ? 0.0 : jt->second;
}

double Fixtures::adjacency(const std::string& a, const std::string& b) const {
  auto it = adj_.find({a, b});
  return it == adj_.end() ? adj_default_ : it->second;
}

double Fixtures::floor_prior(const std::string& level, const std::string& region) const {
  auto it = floor_prior_.find(level);
  if (it == floor_prior_.end()) return 0.0;
  auto jt = it->second.find(region);
  return jt == it->second.end() ? 0.0 : jt->second;
}

ObjectShape Fixtures::shape(const std::string& category) const {
  auto it = shapes_.find(category);
  return it == shapes_.end() ? ObjectShape{} : it->second;
}

std::vector<std::string> Fixtures::regions_for(const std::string& category, double min_p) const {
  std::vector<std::string> out;
  for (const auto& label : region_vocabulary())
    if (p_object(label, category) >= min_p) out.push_back(label);
  return out;
}

std::vector<std::string> Fixtures::categories() const {
  std::vector<std::string> out;
  for (const auto& [label, row] : cooc_)
    for (const auto& [c, p] : row) out.push_back(c);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace sgnav
