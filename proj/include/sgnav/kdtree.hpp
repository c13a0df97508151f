#pragma once

#include <vector>

#include "sgnav/common.hpp"

namespace sgnav {

// Static 2-d tree over a point set; queries return indices into that set.
class KdTree2 {
 public:
  explicit KdTree2(std::vector<Vec2> points);

  // k nearest to points[i], excluding i; ordered by distance then index.
  std::vector<int> knn_of(int i, int k) const;
  std::vector<int> knn(Vec2 q, int k, int exclude = -1) const;
  std::size_t size() const { return pts_.size(); }

 private:
  struct Node {
    int point = -1;
    int left = -1, right = -1;
    int axis = 0;
  };
  int build(std::vector<int>& idx, int lo, int hi, int depth);
  void search(int node, Vec2 q, int k, int exclude, std::vector<std::pair<double, int>>& best) const;

  std::vector<Vec2> pts_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

}  // namespace sgnav
