#pragma once

#include <Eigen/Core>
#include <Eigen/LU>

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace dualreg {

using Point3 = Eigen::Vector3d;
using Vector3 = Eigen::Vector3d;
using Matrix3 = Eigen::Matrix3d;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input geometry cannot support the requested operation (too few points,
/// collinear samples, empty proxy support, ...).
class DegenerateInput : public Error {
 public:
  using Error::Error;
};

/// A text input could not be parsed. `line()` is 1-based, 0 when unknown.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Rotation plus translation. Construction checks orthonormality and
/// det = +1 so every live instance is a proper rigid motion.
class RigidTransform {
 public:
  static constexpr double kTolerance = 1e-9;

  RigidTransform() : rotation_(Matrix3::Identity()), translation_(Vector3::Zero()) {}
  RigidTransform(const Matrix3& rotation, const Vector3& translation);

  static RigidTransform identity() { return {}; }
  /// Projects an approximately orthonormal matrix onto SO(3) before building.
  static RigidTransform from_approximate(const Matrix3& rotation, const Vector3& translation);
  static RigidTransform from_axis_angle(const Vector3& axis, double angle_rad,
                                        const Vector3& translation = Vector3::Zero());

  const Matrix3& rotation() const { return rotation_; }
  const Vector3& translation() const { return translation_; }

  Point3 apply(const Point3& p) const { return rotation_ * p + translation_; }
  Point3 operator()(const Point3& p) const { return apply(p); }

  /// The 3x4 matrix [R | t].
  Eigen::Matrix<double, 3, 4> matrix() const;

  bool operator==(const RigidTransform& other) const = default;

 private:
  Matrix3 rotation_;
  Vector3 translation_;
};

Point3 apply(const RigidTransform& t, const Point3& p);
/// apply(compose(a, b), p) == apply(a, apply(b, p))
RigidTransform compose(const RigidTransform& a, const RigidTransform& b);
RigidTransform invert(const RigidTransform& t);
/// Frobenius norm of the difference of the two 3x4 matrices.
double transform_distance(const RigidTransform& a, const RigidTransform& b);

/// Positions with unit normals; both sequences have equal length.
struct OrientedPointCloud {
  std::vector<Point3> points;
  std::vector<Vector3> normals;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  bool has_normals() const { return normals.size() == points.size(); }

  /// Throws DegenerateInput when a normal is missing, non-unit or a
  /// coordinate is not finite.
  void validate() const;
};

struct Correspondence {
  std::size_t source_index = 0;
  std::size_t target_index = 0;
  std::uint32_t score = 0;
  double inlier_prob = 0.5;

  bool operator==(const Correspondence&) const = default;
};

using CorrespondenceSet = std::vector<Correspondence>;

/// Throws DegenerateInput if any index falls outside its cloud.
void check_correspondences(const CorrespondenceSet& corr, const OrientedPointCloud& source,
                           const OrientedPointCloud& target);

}  // namespace dualreg
