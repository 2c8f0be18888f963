#include "dualreg/types.hpp"

#include <Eigen/Geometry>
#include <Eigen/SVD>

#include <cmath>

namespace dualreg {

RigidTransform::RigidTransform(const Matrix3& rotation, const Vector3& translation)
    : rotation_(rotation), translation_(translation) {
  if (!rotation.allFinite() || !translation.allFinite()) {
    throw Error("rigid transform has non-finite entries");
  }
  const double ortho = (rotation.transpose() * rotation - Matrix3::Identity()).norm();
  if (ortho >= kTolerance) {
    throw Error("rotation is not orthonormal (|R^T R - I| = " + std::to_string(ortho) + ")");
  }
  if (std::abs(rotation.determinant() - 1.0) >= kTolerance) {
    throw Error("rotation determinant is not +1");
  }
}

RigidTransform RigidTransform::from_approximate(const Matrix3& rotation,
                                                const Vector3& translation) {
  Eigen::JacobiSVD<Matrix3> svd(rotation, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Matrix3 d = Matrix3::Identity();
  d(2, 2) = (svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  return {svd.matrixU() * d * svd.matrixV().transpose(), translation};
}

RigidTransform RigidTransform::from_axis_angle(const Vector3& axis, double angle_rad,
                                               const Vector3& translation) {
  const Matrix3 r = Eigen::AngleAxisd(angle_rad, axis.normalized()).toRotationMatrix();
  return from_approximate(r, translation);
}

Eigen::Matrix<double, 3, 4> RigidTransform::matrix() const {
  Eigen::Matrix<double, 3, 4> m;
  m.leftCols<3>() = rotation_;
  m.col(3) = translation_;
  return m;
}

Point3 apply(const RigidTransform& t, const Point3& p) { return t.apply(p); }

RigidTransform compose(const RigidTransform& a, const RigidTransform& b) {
  return {a.rotation() * b.rotation(), a.rotation() * b.translation() + a.translation()};
}

RigidTransform invert(const RigidTransform& t) {
  const Matrix3 rt = t.rotation().transpose();
  return {rt, -(rt * t.translation())};
}

double transform_distance(const RigidTransform& a, const RigidTransform& b) {
  return (a.matrix() - b.matrix()).norm();
}

void OrientedPointCloud::validate() const {
  if (!has_normals()) {
    throw DegenerateInput("point cloud has " + std::to_string(points.size()) + " points but " +
                          std::to_string(normals.size()) + " normals");
  }
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!points[i].allFinite()) {
      throw DegenerateInput("point " + std::to_string(i) + " has non-finite coordinates");
    }
    if (std::abs(normals[i].norm() - 1.0) > 1e-6) {
      throw DegenerateInput("normal " + std::to_string(i) + " is not unit length");
    }
  }
}

void check_correspondences(const CorrespondenceSet& corr, const OrientedPointCloud& source,
                           const OrientedPointCloud& target) {
  for (std::size_t k = 0; k < corr.size(); ++k) {
    if (corr[k].source_index >= source.size() || corr[k].target_index >= target.size()) {
      throw DegenerateInput("correspondence " + std::to_string(k) + " indexes outside the clouds");
    }
    if (!(corr[k].inlier_prob >= 0.0 && corr[k].inlier_prob <= 1.0)) {
      throw DegenerateInput("correspondence " + std::to_string(k) + " has probability outside [0,1]");
    }
  }
}

}  // namespace dualreg
