#include "sgnav/kdtree.hpp"

#include <algorithm>
#include <numeric>

namespace sgnav {

KdTree2::KdTree2(std::vector<Vec2> points) : pts_(std::move(points)) {
  std::vector<int> idx(pts_.size());
  std::iota(idx.begin(), idx.end(), 0);
  nodes_.reserve(pts_.size());
  root_ = build(idx, 0, static_cast<int>(idx.size()), 0);
}

int KdTree2::build(std::vector<int>& idx, int lo, int hi, int depth) {
  if (lo >= hi) return -1;
  int axis = depth % 2;
  int mid = (lo + hi) / 2;
  std::nth_element(idx.begin() + lo, idx.begin() + mid, idx.begin() + hi, [&](int a, int b) {
    double va = axis == 0 ? pts_[a].x : pts_[a].y;
    double vb = axis == 0 ? pts_[b].x : pts_[b].y;
    return va < vb || (va == vb && a < b);
  });
  int n = static_cast<int>(nodes_.size());
  nodes_.push_back({idx[mid], -1, -1, axis});
  int l = build(idx, lo, mid, depth + 1);
  int r = build(idx, mid + 1, hi, depth + 1);
  nodes_[n].left = l;
  nodes_[n].right = r;
  return n;
}

void KdTree2::search(int node, Vec2 q, int k, int exclude, std::vector<std::pair<double, int>>& best) const {
  if (node < 0) return;
  const Node& nd = nodes_[node];
  const Vec2& p = pts_[nd.point];
  if (nd.point != exclude) {
    std::pair<double, int> cand{distance(p, q), nd.point};
    if (static_cast<int>(best.size()) < k || cand < best.back()) {
      best.insert(std::upper_bound(best.begin(), best.end(), cand), cand);
      if (static_cast<int>(best.size()) > k) best.pop_back();
    }
  }
  double diff = nd.axis == 0 ? q.x - p.x : q.y - p.y;
  int near = diff < 0 ? nd.left : nd.right;
  int far = diff < 0 ? nd.right : nd.left;
  search(near, q, k, exclude, best);
  // <= keeps equal-distance ties reachable on both sides
  if (static_cast<int>(best.size()) < k || std::fabs(diff) <= best.back().first) search(far, q, k, exclude, best);
}

std::vector<int> KdTree2::knn(Vec2 q, int k, int exclude) const {
  std::vector<std::pair<double, int>> best;
  if (k <= 0) return {};
  search(root_, q, k, exclude, best);
  std::vector<int> out;
  for (auto& b : best) out.push_back(b.second);
  return out;
}

std::vector<int> KdTree2::knn_of(int i, int k) const { return knn(pts_[i], k, i); }

}  // namespace sgnav
