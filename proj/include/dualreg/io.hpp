#pragma once

#include "dualreg/types.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace dualreg::io {

/// Reads ASCII PLY (vertex x y z [nx ny nz]) or whitespace-delimited
/// XYZ / XYZN text. The returned cloud has no normals when the file has
/// none. Throws ParseError with the offending line.
OrientedPointCloud read_points(const std::filesystem::path& path);

/// read_points followed by normal estimation (k neighbors) when the file
/// carries no normals.
OrientedPointCloud read_cloud(const std::filesystem::path& path, int normal_k = 20);

/// ASCII PLY with normals when present.
void write_ply(const std::filesystem::path& path, const OrientedPointCloud& cloud);

/// Correspondence text: `src tgt` index pairs or `vx vy vz ux uy uz`
/// coordinate pairs, `#` comments. Coordinate pairs append the points to the
/// clouds, borrowing the normal of the nearest existing point.
CorrespondenceSet read_correspondences(const std::filesystem::path& path,
                                       OrientedPointCloud& source, OrientedPointCloud& target);
void write_correspondences(const std::filesystem::path& path, const CorrespondenceSet& corr);

/// 12 numbers (row-major R then t) or 16 numbers (row-major 4x4).
RigidTransform read_transform(const std::filesystem::path& path);
/// Three rows of R followed by t.
void write_transform(const std::filesystem::path& path, const RigidTransform& t);
/// The 12 numbers on one line, row-major R then t.
std::string format_transform(const RigidTransform& t);

/// One evaluation job: `source target correspondences gt_transform`.
/// Relative paths resolve against the manifest's directory.
struct ManifestRow {
  std::size_t line = 0;
  std::filesystem::path source, target, correspondences, ground_truth;
  /// Non-empty when the row could not be parsed.
  std::string error;
};

std::vector<ManifestRow> read_manifest(const std::filesystem::path& path);

}  // namespace dualreg::io
