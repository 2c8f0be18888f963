#pragma once

#include "dualreg/config.hpp"
#include "dualreg/types.hpp"

#include <span>

namespace dualreg {

/// Geodesic angle between the two rotations, in degrees.
double rotation_error_deg(const RigidTransform& est, const RigidTransform& gt);

/// Euclidean distance between the translations (same unit as the clouds).
double translation_error(const RigidTransform& est, const RigidTransform& gt);

/// Root mean square displacement between est and gt applied to each source
/// point. Throws DegenerateInput on an empty point set.
double rmse(const RigidTransform& est, const RigidTransform& gt, std::span<const Point3> source);

/// RE < max_rotation_deg and TE < max_translation, both strict.
bool is_success(double rotation_error_deg, double translation_error, const SuccessCriteria& c);

struct PoseErrors {
  double rotation_deg = 0.0;
  double translation = 0.0;
};

/// Percentage of entries meeting `c`. Empty input yields 0.
double registration_recall(std::span<const PoseErrors> errors, const SuccessCriteria& c);

/// Fraction of correspondences with |gt(v) - u| < gamma. Empty input yields 0.
double inlier_ratio(const CorrespondenceSet& corr, const OrientedPointCloud& source,
                    const OrientedPointCloud& target, const RigidTransform& gt, double gamma);

}  // namespace dualreg
