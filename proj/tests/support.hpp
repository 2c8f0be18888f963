#pragma once

#include "dualreg/types.hpp"

#include <Eigen/Geometry>

#include <filesystem>
#include <numbers>
#include <random>
#include <string>
#include <vector>

namespace testing {

using dualreg::Matrix3;
using dualreg::Point3;
using dualreg::RigidTransform;
using dualreg::Vector3;

inline double deg(double rad) { return rad * 180.0 / std::numbers::pi; }
inline double rad(double deg) { return deg * std::numbers::pi / 180.0; }

inline Vector3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  for (;;) {
    Vector3 v(n(rng), n(rng), n(rng));
    if (v.norm() > 1e-6) return v.normalized();
  }
}

inline Point3 random_point(std::mt19937_64& rng, double half = 1.0) {
  std::uniform_real_distribution<double> u(-half, half);
  return {u(rng), u(rng), u(rng)};
}

// Uniform on SO(3) via a unit quaternion, translation uniform in a cube.
inline RigidTransform random_rigid(std::mt19937_64& rng, double max_translation = 1.0) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
  q.normalize();
  return RigidTransform::from_approximate(q.toRotationMatrix(),
                                          random_point(rng, max_translation));
}

inline RigidTransform rot_z(double angle_deg, const Vector3& t = Vector3::Zero()) {
  return RigidTransform::from_axis_angle(Vector3::UnitZ(), rad(angle_deg), t);
}

// Source points in a box with random unit normals, target = gt(source)
// with transported normals. Correspondences (i, i) for the first
// `n_inliers` points, then `n_outliers` pairs to random far-away targets.
struct Scene {
  dualreg::OrientedPointCloud source, target;
  dualreg::CorrespondenceSet corr;
  RigidTransform gt;
};

inline Scene rigid_scene(std::mt19937_64& rng, std::size_t n_inliers, std::size_t n_outliers,
                         double noise = 0.0, double half = 1.0) {
  Scene s;
  s.gt = random_rigid(rng, 2.0);
  std::normal_distribution<double> jitter(0.0, noise > 0.0 ? noise : 1.0);
  const std::size_t n = n_inliers + n_outliers;
  for (std::size_t i = 0; i < n; ++i) {
    const Point3 p = random_point(rng, half);
    const Vector3 nrm = random_unit(rng);
    s.source.points.push_back(p);
    s.source.normals.push_back(nrm);
    Point3 q = s.gt.apply(p);
    if (noise > 0.0) q += Vector3(jitter(rng), jitter(rng), jitter(rng));
    s.target.points.push_back(q);
    s.target.normals.push_back(s.gt.rotation() * nrm);
  }
  for (std::size_t i = 0; i < n_inliers; ++i) s.corr.push_back({i, i});
  std::uniform_int_distribution<std::size_t> any(0, n - 1);
  for (std::size_t i = n_inliers; i < n; ++i) {
    std::size_t j = any(rng);
    while ((s.target.points[j] - s.gt.apply(s.source.points[i])).norm() < 0.5 * half) j = any(rng);
    s.corr.push_back({i, j});
  }
  return s;
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("dualreg_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testing
