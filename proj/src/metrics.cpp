#include "dualreg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace dualreg {

double rotation_error_deg(const RigidTransform& est, const RigidTransform& gt) {
  const double c = ((gt.rotation().transpose() * est.rotation()).trace() - 1.0) / 2.0;
  return std::acos(std::clamp(c, -1.0, 1.0)) * 180.0 / std::numbers::pi;
}

double translation_error(const RigidTransform& est, const RigidTransform& gt) {
  return (est.translation() - gt.translation()).norm();
}

double rmse(const RigidTransform& est, const RigidTransform& gt, std::span<const Point3> source) {
  if (source.empty()) throw DegenerateInput("rmse of an empty cloud is undefined");
  double sum = 0.0;
  for (const Point3& v : source) sum += (est.apply(v) - gt.apply(v)).squaredNorm();
  return std::sqrt(sum / static_cast<double>(source.size()));
}

bool is_success(double re, double te, const SuccessCriteria& c) {
  return re < c.max_rotation_deg && te < c.max_translation;
}

double registration_recall(std::span<const PoseErrors> errors, const SuccessCriteria& c) {
  if (errors.empty()) return 0.0;
  const auto hits = std::count_if(errors.begin(), errors.end(), [&](const PoseErrors& e) {
    return is_success(e.rotation_deg, e.translation, c);
  });
  return 100.0 * static_cast<double>(hits) / static_cast<double>(errors.size());
}

double inlier_ratio(const CorrespondenceSet& corr, const OrientedPointCloud& source,
                    const OrientedPointCloud& target, const RigidTransform& gt, double gamma) {
  if (corr.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& c : corr) {
    if ((gt.apply(source.points[c.source_index]) - target.points[c.target_index]).norm() < gamma) {
      ++hits;
    }
  }
  return static_cast<double>(hits) / static_cast<double>(corr.size());
}

}  // namespace dualreg
