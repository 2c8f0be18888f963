#pragma once

#include "dualreg/types.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace dualreg {

struct Neighbor {
  std::size_t index = 0;
  double distance = 0.0;
};

/// Exact kd-tree over a fixed point sequence.
///
/// Results are identical to an exhaustive scan: nearest-neighbor ties go to
/// the smallest index and radius queries use a strict `< r` bound. Queries
/// are const and may run concurrently.
class SpatialIndex {
 public:
  /// Throws DegenerateInput on an empty sequence.
  explicit SpatialIndex(std::vector<Point3> points);

  std::size_t size() const { return points_.size(); }
  const std::vector<Point3>& points() const { return points_; }

  Neighbor nearest(const Point3& q) const;

  /// Nearest point strictly farther than `min_distance` from q; returns
  /// false when no such point exists.
  bool nearest_beyond(const Point3& q, double min_distance, Neighbor& out) const;

  /// Indices with distance strictly below r, ascending.
  std::vector<std::size_t> radius_search(const Point3& q, double r) const;

  /// The k closest points ordered by (distance, index). k is clamped to size().
  std::vector<Neighbor> k_nearest(const Point3& q, std::size_t k) const;

 private:
  struct Node {
    // Leaf when axis < 0; covers order_[begin, end).
    std::uint32_t begin = 0;
    std::uint32_t end = 0;
    int axis = -1;
    double split = 0.0;
    std::uint32_t left = 0;
    std::uint32_t right = 0;
  };

  std::uint32_t build(std::uint32_t begin, std::uint32_t end);
  template <typename Visit>
  void search(std::uint32_t node, const Point3& q, Visit& visit) const;

  std::vector<Point3> points_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
};

}  // namespace dualreg
