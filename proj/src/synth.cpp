#include "dualreg/synth.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

namespace dualreg {
namespace {

using Rng64 = std::mt19937_64;

Vector3 random_unit(Rng64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  for (;;) {
    const Vector3 v(n(rng), n(rng), n(rng));
    const double len = v.norm();
    if (len > 1e-9) return v / len;
  }
}

// Orthonormal frame (e1, e2) perpendicular to `axis`.
std::pair<Vector3, Vector3> frame(const Vector3& axis) {
  const Vector3 helper = std::abs(axis.x()) < 0.9 ? Vector3::UnitX() : Vector3::UnitY();
  const Vector3 e1 = axis.cross(helper).normalized();
  return {e1, axis.cross(e1)};
}

struct Patch {
  enum Kind { kPlane, kSphere, kCylinder } kind;
  Point3 center;
  Vector3 axis;
  Vector3 e1, e2;
  double a = 0, b = 0;  // plane half sizes / cylinder radius and height / sphere radius
  double span = 0;      // cap half-angle or cylinder arc
  double area = 0;

  void sample(Rng64& rng, Point3& p, Vector3& n) const {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    switch (kind) {
      case kPlane: {
        p = center + (2 * u(rng) - 1) * a * e1 + (2 * u(rng) - 1) * b * e2;
        n = axis;
        return;
      }
      case kSphere: {
        const double z = std::cos(span) + u(rng) * (1.0 - std::cos(span));
        const double phi = 2 * std::numbers::pi * u(rng);
        const double s = std::sqrt(std::max(0.0, 1 - z * z));
        n = s * std::cos(phi) * e1 + s * std::sin(phi) * e2 + z * axis;
        p = center + a * n;
        return;
      }
      case kCylinder: {
        const double phi = span * u(rng);
        n = std::cos(phi) * e1 + std::sin(phi) * e2;
        p = center + a * n + (u(rng) - 0.5) * b * axis;
        return;
      }
    }
  }
};

Patch random_patch(Rng64& rng, double extent) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Patch pt{};
  const double half = extent / 2;
  pt.center = Point3(u(rng) * 2 - 1, u(rng) * 2 - 1, u(rng) * 2 - 1) * 0.6 * half;
  pt.axis = random_unit(rng);
  std::tie(pt.e1, pt.e2) = frame(pt.axis);
  const double roll = u(rng);
  if (roll < 0.5) {
    pt.kind = Patch::kPlane;
    pt.a = (0.3 + 0.45 * u(rng)) * half;
    pt.b = (0.3 + 0.45 * u(rng)) * half;
    pt.area = 4 * pt.a * pt.b;
  } else if (roll < 0.75) {
    pt.kind = Patch::kSphere;
    pt.a = (0.15 + 0.25 * u(rng)) * half;
    pt.span = (60.0 + 60.0 * u(rng)) * std::numbers::pi / 180.0;
    pt.area = 2 * std::numbers::pi * pt.a * pt.a * (1 - std::cos(pt.span));
  } else {
    pt.kind = Patch::kCylinder;
    pt.a = (0.1 + 0.2 * u(rng)) * half;
    pt.b = (0.5 + 0.6 * u(rng)) * half;
    pt.span = std::numbers::pi * (1.0 + u(rng));
    pt.area = pt.a * pt.span * pt.b;
  }
  return pt;
}

}  // namespace

void SynthSpec::validate() const {
  auto fail = [](const char* m) { throw Error(std::string("invalid synthetic spec: ") + m); };
  if (n_points < 10) fail("n_points must be >= 10");
  if (!(overlap_fraction > 0.0 && overlap_fraction <= 1.0)) fail("overlap_fraction in (0,1]");
  if (!(noise_sigma >= 0.0)) fail("noise_sigma must be >= 0");
  if (!(max_rotation_deg >= 0.0 && max_rotation_deg <= 180.0)) fail("max_rotation_deg in [0,180]");
  if (!(max_translation >= 0.0)) fail("max_translation must be >= 0");
  if (!(inlier_ratio >= 0.0 && inlier_ratio <= 1.0)) fail("inlier_ratio in [0,1]");
  if (n_correspondences < 1) fail("n_correspondences must be >= 1");
  if (!(gamma > 0.0)) fail("gamma must be > 0");
  if (!(scene_extent > 0.0)) fail("scene_extent must be > 0");
  if (n_patches < 1) fail("n_patches must be >= 1");
}

RigidTransform random_transform(std::uint64_t seed, double max_rotation_deg,
                                double max_translation) {
  Rng64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const Vector3 axis = random_unit(rng);
  const double angle = u(rng) * max_rotation_deg * std::numbers::pi / 180.0;
  const Vector3 dir = random_unit(rng);
  const double len = u(rng) * max_translation;
  return RigidTransform::from_axis_angle(axis, angle, dir * len);
}

RegistrationJob synth_scene(const SynthSpec& spec) {
  spec.validate();
  const std::size_t n = spec.n_points;
  const auto common =
      static_cast<std::size_t>(std::llround(spec.overlap_fraction * static_cast<double>(n)));
  const auto n_inliers = static_cast<std::size_t>(
      std::floor(spec.inlier_ratio * static_cast<double>(spec.n_correspondences) + 1e-9));
  if (common < 1) throw Error("infeasible synthetic spec: overlap holds no points");
  if (n_inliers > common) {
    throw Error("infeasible synthetic spec: " + std::to_string(n_inliers) +
                " inliers requested but only " + std::to_string(common) + " overlap points");
  }

  Rng64 rng(spec.seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 1.0);

  std::vector<Patch> patches;
  double total_area = 0.0;
  for (int i = 0; i < spec.n_patches; ++i) {
    patches.push_back(random_patch(rng, spec.scene_extent));
    total_area += patches.back().area;
  }

  // Base surface, ordered along a random direction so the two views are
  // overlapping slabs.
  const std::size_t n_base = 2 * n - common;
  std::vector<Point3> base(n_base);
  std::vector<Vector3> base_normals(n_base);
  for (std::size_t i = 0; i < n_base; ++i) {
    double pick = u(rng) * total_area;
    std::size_t k = 0;
    while (k + 1 < patches.size() && pick >= patches[k].area) pick -= patches[k++].area;
    patches[k].sample(rng, base[i], base_normals[i]);
  }
  const Vector3 slab = random_unit(rng);
  std::vector<std::size_t> order(n_base);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return base[a].dot(slab) < base[b].dot(slab);
  });

  RegistrationJob job;
  const RigidTransform gt = random_transform(rng(), spec.max_rotation_deg, spec.max_translation);
  job.ground_truth = gt;
  auto jitter = [&]() -> Vector3 {
    return Vector3(noise(rng), noise(rng), noise(rng)) * spec.noise_sigma;
  };
  const std::size_t target_offset = n - common;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t b = order[i];
    job.source.points.push_back(base[b] + jitter());
    job.source.normals.push_back(base_normals[b]);
  }
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t b = order[target_offset + j];
    job.target.points.push_back(gt.apply(base[b]) + jitter());
    job.target.normals.push_back(gt.rotation() * base_normals[b]);
  }

  auto residual = [&](std::size_t s, std::size_t t) {
    return (gt.apply(job.source.points[s]) - job.target.points[t]).norm();
  };

  // Inliers: distinct overlap points whose noisy copies agree within gamma.
  std::vector<std::size_t> overlap(common);
  std::iota(overlap.begin(), overlap.end(), target_offset);
  std::shuffle(overlap.begin(), overlap.end(), rng);
  CorrespondenceSet corr;
  for (std::size_t s : overlap) {
    if (corr.size() == n_inliers) break;
    if (residual(s, s - target_offset) < spec.gamma) corr.push_back({s, s - target_offset});
  }
  if (corr.size() < n_inliers) {
    throw Error("infeasible synthetic spec: noise too large to place the requested inliers");
  }

  std::uniform_int_distribution<std::size_t> any(0, n - 1);
  const std::size_t max_attempts = 1000 * spec.n_correspondences + 1000;
  std::size_t attempts = 0;
  while (corr.size() < spec.n_correspondences) {
    if (++attempts > max_attempts) {
      throw Error("infeasible synthetic spec: cannot place outliers outside gamma");
    }
    const std::size_t s = any(rng);
    const std::size_t t = any(rng);
    if (residual(s, t) >= spec.gamma) corr.push_back({s, t});
  }
  std::shuffle(corr.begin(), corr.end(), rng);
  job.correspondences = std::move(corr);
  return job;
}

}  // namespace dualreg
