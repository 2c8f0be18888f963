#include "dualreg/kabsch.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <cmath>

namespace dualreg {
namespace {

constexpr double kRankTolerance = 1e-9;

bool collinear(const std::vector<Point3>& pts) {
  Point3 c = Point3::Zero();
  for (const auto& p : pts) c += p;
  c /= static_cast<double>(pts.size());
  Matrix3 scatter = Matrix3::Zero();
  for (const auto& p : pts) scatter += (p - c) * (p - c).transpose();
  const Vector3 ev = Eigen::SelfAdjointEigenSolver<Matrix3>(scatter, Eigen::EigenvaluesOnly)
                         .eigenvalues();
  return ev[2] <= 0.0 || ev[1] <= 1e-12 * ev[2];
}

}  // namespace

void WeightedPairSet::validate() const {
  if (sources.size() != targets.size() || sources.size() != weights.size()) {
    throw Error("weighted pair set has mismatched sequence lengths");
  }
  if (sources.empty()) throw Error("weighted pair set is empty");
  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw Error("weights must be finite and non-negative");
    sum += w;
  }
  if (!(sum > 0.0)) throw DegenerateInput("weights sum to zero");
}

OrthogonalSolution solve_orthogonal(const WeightedPairSet& pairs) {
  OrthogonalSolution out;
  const std::size_t n = pairs.size();
  if (n < 3 || pairs.targets.size() != n) return out;

  Point3 sc = Point3::Zero();
  Point3 tc = Point3::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    sc += pairs.sources[i];
    tc += pairs.targets[i];
  }
  sc /= static_cast<double>(n);
  tc /= static_cast<double>(n);
  Matrix3 h = Matrix3::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    h += (pairs.sources[i] - sc) * (pairs.targets[i] - tc).transpose();
  }

  Eigen::JacobiSVD<Matrix3> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vector3 s = svd.singularValues();
  if (!(s[0] > 0.0) || s[1] <= kRankTolerance * s[0]) return out;

  Matrix3 d = Matrix3::Identity();
  if (s[2] <= kRankTolerance * s[0]) {
    d(2, 2) = (svd.matrixV() * svd.matrixU().transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  }
  out.matrix = svd.matrixV() * d * svd.matrixU().transpose();
  out.determinate = true;
  return out;
}

RigidTransform solve_rigid(const WeightedPairSet& pairs) {
  pairs.validate();
  const std::size_t n = pairs.size();
  if (n < 3) throw DegenerateInput("degenerate sample: rigid solve needs at least 3 pairs");
  if (collinear(pairs.sources)) throw DegenerateInput("degenerate sample: collinear points");

  double wsum = 0.0;
  Point3 sc = Point3::Zero();
  Point3 tc = Point3::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    wsum += pairs.weights[i];
    sc += pairs.weights[i] * pairs.sources[i];
    tc += pairs.weights[i] * pairs.targets[i];
  }
  sc /= wsum;
  tc /= wsum;
  Matrix3 h = Matrix3::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    h += pairs.weights[i] * (pairs.sources[i] - sc) * (pairs.targets[i] - tc).transpose();
  }

  Eigen::JacobiSVD<Matrix3> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Matrix3& u = svd.matrixU();
  const Matrix3& v = svd.matrixV();
  Matrix3 d = Matrix3::Identity();
  d(2, 2) = (v * u.transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  const Matrix3 r = v * d * u.transpose();
  return {r, tc - r * sc};
}

double weighted_objective(const WeightedPairSet& pairs, const RigidTransform& t) {
  double e = 0.0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    e += pairs.weights[i] * (t.apply(pairs.sources[i]) - pairs.targets[i]).squaredNorm();
  }
  return e;
}

}  // namespace dualreg
