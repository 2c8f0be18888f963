#pragma once

#include "dualreg/pipeline.hpp"

#include <cstdint>

namespace dualreg {

/// Parameters of a synthetic registration problem.
struct SynthSpec {
  std::size_t n_points = 5000;       ///< per cloud
  double overlap_fraction = 0.7;     ///< share of each cloud seen by both
  double noise_sigma = 0.1 / 6.0;    ///< per-axis Gaussian position noise
  double max_rotation_deg = 180.0;
  double max_translation = 2.0;
  double inlier_ratio = 0.1;
  std::size_t n_correspondences = 1000;
  double gamma = 0.1;                ///< inlier residual threshold
  double scene_extent = 3.0;         ///< edge of the cube holding the patches
  int n_patches = 8;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Samples a surface made of random planar, spherical and cylindrical
/// patches, splits it into two overlapping views, moves the target view by
/// a random rigid motion and builds C_0 with exactly
/// floor(inlier_ratio * n_correspondences) pairs whose residual under the
/// ground truth is below gamma; the rest are random pairs at or above gamma.
/// The job's config is left at its defaults. Throws Error for infeasible specs.
RegistrationJob synth_scene(const SynthSpec& spec);

/// Uniform random axis, angle uniform in [0, max_rotation], translation with
/// uniform direction and length uniform in [0, max_translation].
RigidTransform random_transform(std::uint64_t seed, double max_rotation_deg,
                                double max_translation);

}  // namespace dualreg
