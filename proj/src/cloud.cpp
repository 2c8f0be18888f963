#include "dualreg/cloud.hpp"

#include "dualreg/spatial.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <cmath>
#include <map>

namespace dualreg {

double cloud_resolution(std::span<const Point3> points) {
  if (points.size() < 2) {
    throw DegenerateInput("cloud resolution needs at least two points");
  }
  const SpatialIndex index({points.begin(), points.end()});
  std::vector<double> nn;
  nn.reserve(points.size());
  for (const Point3& p : points) {
    Neighbor n;
    if (index.nearest_beyond(p, 0.0, n)) nn.push_back(n.distance);
  }
  if (nn.empty()) {
    throw DegenerateInput("cloud resolution undefined: all points coincide");
  }
  const std::size_t mid = nn.size() / 2;
  std::nth_element(nn.begin(), nn.begin() + mid, nn.end());
  const double upper = nn[mid];
  if (nn.size() % 2 == 1) return upper;
  const double lower = *std::max_element(nn.begin(), nn.begin() + mid);
  return 0.5 * (lower + upper);
}

OrientedPointCloud voxel_downsample(const OrientedPointCloud& cloud, double voxel_size) {
  if (!(voxel_size > 0.0)) throw Error("voxel size must be positive");
  using Key = std::array<std::int64_t, 3>;
  std::map<Key, std::vector<std::size_t>> cells;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Point3& p = cloud.points[i];
    const Key key{static_cast<std::int64_t>(std::floor(p.x() / voxel_size)),
                  static_cast<std::int64_t>(std::floor(p.y() / voxel_size)),
                  static_cast<std::int64_t>(std::floor(p.z() / voxel_size))};
    cells[key].push_back(i);
  }

  const bool normals = cloud.has_normals() && !cloud.empty();
  OrientedPointCloud out;
  out.points.reserve(cells.size());
  if (normals) out.normals.reserve(cells.size());
  for (const auto& [key, members] : cells) {
    Point3 centroid = Point3::Zero();
    for (std::size_t i : members) centroid += cloud.points[i];
    centroid /= static_cast<double>(members.size());
    out.points.push_back(centroid);
    if (!normals) continue;

    Vector3 mean = Vector3::Zero();
    for (std::size_t i : members) mean += cloud.normals[i];
    const double norm = mean.norm();
    if (norm > 1e-12) {
      out.normals.push_back(mean / norm);
      continue;
    }
    std::size_t closest = members.front();
    double best = (cloud.points[closest] - centroid).squaredNorm();
    for (std::size_t i : members) {
      const double d2 = (cloud.points[i] - centroid).squaredNorm();
      if (d2 < best) {
        best = d2;
        closest = i;
      }
    }
    out.normals.push_back(cloud.normals[closest]);
  }
  return out;
}

OrientedPointCloud estimate_normals(std::span<const Point3> points, int k,
                                    const Point3& viewpoint) {
  if (k < 3) throw Error("normal estimation needs k >= 3");
  if (points.size() < static_cast<std::size_t>(k)) {
    throw DegenerateInput("normal estimation needs at least k = " + std::to_string(k) +
                          " points, got " + std::to_string(points.size()));
  }
  OrientedPointCloud out;
  out.points.assign(points.begin(), points.end());
  out.normals.resize(points.size());
  const SpatialIndex index(out.points);

  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto nbrs = index.k_nearest(points[i], static_cast<std::size_t>(k));
    Point3 centroid = Point3::Zero();
    for (const Neighbor& n : nbrs) centroid += out.points[n.index];
    centroid /= static_cast<double>(nbrs.size());
    Matrix3 cov = Matrix3::Zero();
    for (const Neighbor& n : nbrs) {
      const Vector3 d = out.points[n.index] - centroid;
      cov += d * d.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Matrix3> eig(cov);
    const Vector3 evals = eig.eigenvalues();  // ascending
    Vector3 normal;
    const double scale = evals[2];
    if (scale <= 1e-300) {
      normal = Vector3::UnitZ();
    } else if (evals[1] <= 1e-12 * scale) {
      // Collinear: pick the coordinate axis least aligned with the line and
      // project it off the line direction.
      const Vector3 line = eig.eigenvectors().col(2);
      int axis = 0;
      line.cwiseAbs().minCoeff(&axis);
      const Vector3 e = Vector3::Unit(axis);
      normal = (e - e.dot(line) * line).normalized();
    } else {
      normal = eig.eigenvectors().col(0).normalized();
    }
    if (normal.dot(viewpoint - centroid) < 0.0) normal = -normal;
    out.normals[i] = normal;
  }
  return out;
}

}  // namespace dualreg
