#include "knn.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <utility>

#include "parallel.hpp"

namespace rifs::detail {

double sqdist(const double* a, const double* b, int dim) {
  double s = 0.0;
  for (int j = 0; j < dim; ++j) {
    double d = a[j] - b[j];
    s += d * d;
  }
  return s;
}

namespace {
constexpr std::size_t kLeaf = 16;
using Cand = std::pair<double, std::size_t>;  // (squared distance, index)
}  // namespace

KdTree::KdTree(Points pts) : pts_(pts), perm_(pts.n) {
  for (std::size_t i = 0; i < pts.n; ++i) perm_[i] = i;
  if (pts.n) build(0, pts.n, 0);
}

int KdTree::build(std::size_t begin, std::size_t end, int depth) {
  Node node{begin, end, -1, 0.0};
  if (end - begin > kLeaf && depth < 64) {
    int axis = 0;
    double best = -1.0;
    for (int a = 0; a < pts_.dim; ++a) {
      double lo = INFINITY, hi = -INFINITY;
      for (std::size_t i = begin; i < end; ++i) {
        double v = pts_[perm_[i]][a];
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      if (hi - lo > best) {
        best = hi - lo;
        axis = a;
      }
    }
    if (best > 0.0) {
      std::size_t mid = begin + (end - begin) / 2;
      auto less = [&](std::size_t x, std::size_t y) {
        double vx = pts_[x][axis], vy = pts_[y][axis];
        return vx < vy || (vx == vy && x < y);
      };
      std::nth_element(perm_.begin() + static_cast<std::ptrdiff_t>(begin), perm_.begin() + static_cast<std::ptrdiff_t>(mid),
                       perm_.begin() + static_cast<std::ptrdiff_t>(end), less);
      node.axis = axis;
      node.split = pts_[perm_[mid]][axis];
    }
  }
  int id = static_cast<int>(nodes_.size());
  nodes_.push_back(node);
  if (node.axis >= 0) {
    std::size_t mid = begin + (end - begin) / 2;
    int l = build(begin, mid, depth + 1);
    int r = build(mid, end, depth + 1);
    nodes_[static_cast<std::size_t>(id)].left = l;
    nodes_[static_cast<std::size_t>(id)].right = r;
  }
  return id;
}

void KdTree::query(const double* q, std::size_t k, std::vector<std::size_t>& idx, std::vector<double>& dist) const {
  idx.clear();
  dist.clear();
  k = std::min(k, pts_.n);
  if (k == 0) return;
  std::priority_queue<Cand> heap;
  auto visit = [&](auto&& self, int id) -> void {
    const Node& nd = nodes_[static_cast<std::size_t>(id)];
    if (nd.axis < 0) {
      for (std::size_t i = nd.begin; i < nd.end; ++i) {
        std::size_t p = perm_[i];
        Cand c{sqdist(q, pts_[p], pts_.dim), p};
        if (heap.size() < k) {
          heap.push(c);
        } else if (c < heap.top()) {
          heap.pop();
          heap.push(c);
        }
      }
      return;
    }
    double diff = q[nd.axis] - nd.split;
    int near = diff < 0 ? nd.left : nd.right;
    int far = diff < 0 ? nd.right : nd.left;
    self(self, near);
    if (heap.size() < k || diff * diff <= heap.top().first) self(self, far);
  };
  visit(visit, 0);
  std::vector<Cand> out;
  out.reserve(heap.size());
  while (!heap.empty()) {
    out.push_back(heap.top());
    heap.pop();
  }
  std::sort(out.begin(), out.end());
  for (auto& c : out) {
    idx.push_back(c.second);
    dist.push_back(std::sqrt(c.first));
  }
}

double KdTree::nearest(const double* q, std::size_t* which) const {
  std::vector<std::size_t> i;
  std::vector<double> d;
  query(q, 1, i, d);
  if (i.empty()) return INFINITY;
  if (which) *which = i[0];
  return d[0];
}

KnnResult knn_self(Points pts, std::size_t k) {
  KdTree tree(pts);
  KnnResult r;
  r.k = std::min(k, pts.n);
  r.idx.resize(pts.n * r.k);
  r.dist.resize(pts.n * r.k);
  parallel_for(pts.n, [&](std::size_t i) {
    std::vector<std::size_t> idx;
    std::vector<double> dist;
    tree.query(pts[i], r.k, idx, dist);
    // keep the query point first even when duplicates tie at distance zero
    auto it = std::find(idx.begin(), idx.end(), i);
    if (it == idx.end()) {
      idx.insert(idx.begin(), i);
      dist.insert(dist.begin(), 0.0);
    } else {
      std::size_t pos = static_cast<std::size_t>(it - idx.begin());
      std::rotate(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(pos), idx.begin() + static_cast<std::ptrdiff_t>(pos) + 1);
      std::rotate(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(pos), dist.begin() + static_cast<std::ptrdiff_t>(pos) + 1);
    }
    for (std::size_t j = 0; j < r.k; ++j) {
      r.idx[i * r.k + j] = idx[j];
      r.dist[i * r.k + j] = dist[j];
    }
  });
  return r;
}

}  // namespace rifs::detail
