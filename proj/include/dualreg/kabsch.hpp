#pragma once

#include "dualreg/types.hpp"

#include <vector>

namespace dualreg {

/// Paired points with non-negative weights.
struct WeightedPairSet {
  std::vector<Point3> sources;
  std::vector<Point3> targets;
  std::vector<double> weights;

  std::size_t size() const { return sources.size(); }
  void add(const Point3& s, const Point3& t, double w = 1.0) {
    sources.push_back(s);
    targets.push_back(t);
    weights.push_back(w);
  }
  /// Throws Error unless the sequences agree in length, are non-empty and
  /// the weights are non-negative with a positive sum.
  void validate() const;
};

struct OrthogonalSolution {
  Matrix3 matrix = Matrix3::Identity();
  /// False when fewer than three pairs are given or the centered
  /// cross-covariance has rank below two.
  bool determinate = false;
  double determinant() const { return matrix.determinant(); }
};

/// Unweighted orthogonal Procrustes: M = V U^T from the SVD of the centered
/// cross-covariance, with no determinant correction. When the cross-covariance
/// has rank exactly two both signs of the last singular direction are optimal
/// and the proper one is returned.
OrthogonalSolution solve_orthogonal(const WeightedPairSet& pairs);

/// Weighted least-squares proper rigid alignment (Kabsch/Umeyama without
/// scale). Throws DegenerateInput when fewer than three pairs are given, the
/// source points are collinear, or all weights vanish.
RigidTransform solve_rigid(const WeightedPairSet& pairs);

/// sum_i w_i |R s_i + t - t_i|^2
double weighted_objective(const WeightedPairSet& pairs, const RigidTransform& t);

}  // namespace dualreg
