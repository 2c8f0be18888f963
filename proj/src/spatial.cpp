#include "dualreg/spatial.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>

namespace dualreg {
namespace {

constexpr std::uint32_t kLeafSize = 12;

// Lexicographic (squared distance, index) order used for every tie rule.
bool closer(double d2a, std::size_t ia, double d2b, std::size_t ib) {
  return d2a < d2b || (d2a == d2b && ia < ib);
}

}  // namespace

SpatialIndex::SpatialIndex(std::vector<Point3> points) : points_(std::move(points)) {
  if (points_.empty()) {
    throw DegenerateInput("cannot build a spatial index over zero points");
  }
  if (points_.size() >= std::numeric_limits<std::uint32_t>::max()) {
    throw DegenerateInput("too many points for spatial index");
  }
  order_.resize(points_.size());
  std::iota(order_.begin(), order_.end(), 0u);
  nodes_.reserve(2 * points_.size() / kLeafSize + 2);
  build(0, static_cast<std::uint32_t>(points_.size()));
}

std::uint32_t SpatialIndex::build(std::uint32_t begin, std::uint32_t end) {
  const auto id = static_cast<std::uint32_t>(nodes_.size());
  nodes_.push_back(Node{begin, end});
  if (end - begin <= kLeafSize) return id;

  Eigen::Vector3d lo = Eigen::Vector3d::Constant(std::numeric_limits<double>::infinity());
  Eigen::Vector3d hi = -lo;
  for (std::uint32_t i = begin; i < end; ++i) {
    lo = lo.cwiseMin(points_[order_[i]]);
    hi = hi.cwiseMax(points_[order_[i]]);
  }
  int axis = 0;
  (hi - lo).maxCoeff(&axis);
  if (hi[axis] == lo[axis]) return id;  // all coincident

  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) {
                     const double ca = points_[a][axis];
                     const double cb = points_[b][axis];
                     return ca < cb || (ca == cb && a < b);
                   });
  const double split = points_[order_[mid]][axis];
  const std::uint32_t left = build(begin, mid);
  const std::uint32_t right = build(mid, end);
  Node& n = nodes_[id];
  n.axis = axis;
  n.split = split;
  n.left = left;
  n.right = right;
  return id;
}

// Visit must provide `double bound2() const` (subtrees whose slab distance
// squared exceeds it are skipped) and `void leaf(index, d2)`.
template <typename Visit>
void SpatialIndex::search(std::uint32_t node_id, const Point3& q, Visit& visit) const {
  const Node& node = nodes_[node_id];
  if (node.axis < 0) {
    for (std::uint32_t i = node.begin; i < node.end; ++i) {
      const std::uint32_t idx = order_[i];
      visit.leaf(idx, (points_[idx] - q).squaredNorm());
    }
    return;
  }
  const double diff = q[node.axis] - node.split;
  const std::uint32_t near = diff < 0.0 ? node.left : node.right;
  const std::uint32_t far = diff < 0.0 ? node.right : node.left;
  search(near, q, visit);
  if (diff * diff <= visit.bound2()) search(far, q, visit);
}

Neighbor SpatialIndex::nearest(const Point3& q) const {
  Neighbor out;
  nearest_beyond(q, -1.0, out);
  return out;
}

bool SpatialIndex::nearest_beyond(const Point3& q, double min_distance, Neighbor& out) const {
  struct Visit {
    double floor2;
    double best2 = std::numeric_limits<double>::infinity();
    std::size_t best = std::numeric_limits<std::size_t>::max();
    double bound2() const { return best2; }
    void leaf(std::size_t idx, double d2) {
      if (d2 > floor2 && closer(d2, idx, best2, best)) {
        best2 = d2;
        best = idx;
      }
    }
  } visit{min_distance < 0.0 ? -1.0 : min_distance * min_distance};
  search(0, q, visit);
  if (visit.best == std::numeric_limits<std::size_t>::max()) return false;
  out = {visit.best, std::sqrt(visit.best2)};
  return true;
}

std::vector<std::size_t> SpatialIndex::radius_search(const Point3& q, double r) const {
  struct Visit {
    double r2;
    std::vector<std::size_t> hits;
    double bound2() const { return std::nextafter(r2, 0.0); }
    void leaf(std::size_t idx, double d2) {
      if (d2 < r2) hits.push_back(idx);
    }
  } visit{r * r, {}};
  if (r > 0.0) search(0, q, visit);
  std::sort(visit.hits.begin(), visit.hits.end());
  return std::move(visit.hits);
}

std::vector<Neighbor> SpatialIndex::k_nearest(const Point3& q, std::size_t k) const {
  k = std::min(k, points_.size());
  if (k == 0) return {};
  struct Entry {
    double d2;
    std::size_t idx;
    bool operator<(const Entry& o) const { return closer(d2, idx, o.d2, o.idx); }
  };
  struct Visit {
    std::size_t k;
    std::priority_queue<Entry> heap;  // worst on top
    double bound2() const {
      return heap.size() < k ? std::numeric_limits<double>::infinity() : heap.top().d2;
    }
    void leaf(std::size_t idx, double d2) {
      Entry e{d2, idx};
      if (heap.size() < k) {
        heap.push(e);
      } else if (e < heap.top()) {
        heap.pop();
        heap.push(e);
      }
    }
  } visit{k, {}};
  search(0, q, visit);
  std::vector<Neighbor> out(visit.heap.size());
  for (std::size_t i = out.size(); i-- > 0;) {
    out[i] = {visit.heap.top().idx, std::sqrt(visit.heap.top().d2)};
    visit.heap.pop();
  }
  return out;
}

}  // namespace dualreg
