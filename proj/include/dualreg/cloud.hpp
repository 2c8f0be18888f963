#pragma once

#include "dualreg/types.hpp"

#include <span>

namespace dualreg {

/// Median distance from each point to its nearest neighbor at a strictly
/// positive distance. Throws DegenerateInput for fewer than two distinct
/// points.
double cloud_resolution(std::span<const Point3> points);
inline double cloud_resolution(const OrientedPointCloud& cloud) {
  return cloud_resolution(cloud.points);
}

/// Origin-anchored voxel grid. One centroid per occupied cube, emitted in
/// ascending lexicographic cube order; the normal is the normalized mean
/// normal (or the normal of the point closest to the centroid when the
/// mean vanishes). Missing normals stay missing.
OrientedPointCloud voxel_downsample(const OrientedPointCloud& cloud, double voxel_size);

/// PCA normals over the k nearest neighbors (self included), oriented so
/// that dot(n, viewpoint - local centroid) >= 0.
OrientedPointCloud estimate_normals(std::span<const Point3> points, int k = 20,
                                    const Point3& viewpoint = Point3::Zero());

}  // namespace dualreg
