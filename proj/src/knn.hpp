#pragma once

#include <cstddef>
#include <vector>

namespace rifs::detail {

// Row-major point cloud view.
struct Points {
  const double* data = nullptr;
  std::size_t n = 0;
  int dim = 0;

  const double* operator[](std::size_t i) const { return data + i * static_cast<std::size_t>(dim); }
};

double sqdist(const double* a, const double* b, int dim);

// k-d tree over a point cloud; queries return neighbours ordered by
// (distance, index) so ties resolve the same way every run.
class KdTree {
 public:
  explicit KdTree(Points pts);

  // The k nearest points to q (fewer if the cloud is smaller). Distances are
  // Euclidean, not squared.
  void query(const double* q, std::size_t k, std::vector<std::size_t>& idx, std::vector<double>& dist) const;
  // Distance to the nearest point.
  double nearest(const double* q, std::size_t* which = nullptr) const;

  const Points& points() const { return pts_; }

 private:
  struct Node {
    std::size_t begin, end;  // range in perm_
    int axis;
    double split;
    int left = -1, right = -1;
  };
  int build(std::size_t begin, std::size_t end, int depth);

  Points pts_;
  std::vector<std::size_t> perm_;
  std::vector<Node> nodes_;
};

struct KnnResult {
  std::size_t k = 0;
  std::vector<std::size_t> idx;  // n x k
  std::vector<double> dist;      // n x k

  const std::size_t* row(std::size_t i) const { return idx.data() + i * k; }
  const double* drow(std::size_t i) const { return dist.data() + i * k; }
};

// k nearest neighbours of every point, the point itself first.
KnnResult knn_self(Points pts, std::size_t k);

}  // namespace rifs::detail
