#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

namespace sgnav {

struct ObjectShape {
  double half_x = 0.2;  // along the wall
  double half_y = 0.2;  // away from the wall
  double height = 0.5;
};

// Prior tables shipped in data/ and compiled into the library.
class Fixtures {
 public:
  static const Fixtures& builtin();
  static Fixtures from_json_text(const std::string& cooc, const std::string& adjacency,
                                 const std::string& floor_prior, const std::string& objects);

  // P(object category | region label); 0 for unlisted pairs.
  double p_object(const std::string& region, const std::string& category) const;
  // Symmetric region adjacency weight.
  double adjacency(const std::string& a, const std::string& b) const;
  // "ground" or "upper".
  double floor_prior(const std::string& level, const std::string& region) const;
  ObjectShape shape(const std::string& category) const;

  // Labels with P(category | label) >= min_p.
  std::vector<std::string> regions_for(const std::string& category, double min_p) const;
  std::vector<std::string> categories() const;

  const std::map<std::string, std::map<std::string, double>>& cooccurrence() const { return cooc_; }
  const std::map<std::string, std::map<std::string, double>>& floor_priors() const { return floor_prior_; }

 private:
  std::map<std::string, std::map<std::string, double>> cooc_;
  std::map<std::pair<std::string, std::string>, double> adj_;
  double adj_default_ = 0.3;
  std::map<std::string, std::map<std::string, double>> floor_prior_;
  std::map<std::string, ObjectShape> shapes_;
};

// Region caption vocabulary in its canonical order.
const std::vector<std::string>& region_vocabulary();
// Choice set offered to scene predictors, "unknown" last.
const std::vector<std::string>& prediction_choices();
bool in_region_vocabulary(const std::string& label);

namespace embedded {
extern const char* const kCooccurrence;
extern const char* const kAdjacency;
extern const char* const kFloorPrior;
extern const char* const kObjects;
}  // namespace embedded

}  // namespace sgnav
