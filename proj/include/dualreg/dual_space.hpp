#pragma once

#include "dualreg/config.hpp"
#include "dualreg/spatial.hpp"
#include "dualreg/types.hpp"

#include <optional>
#include <span>
#include <vector>

namespace dualreg {

/// Aggregated neighborhoods around anchor correspondences.
///
/// `source_proxy` / `target_proxy` are the deduplicated unions of all points
/// lying strictly within beta of some anchor, in ascending cloud-index
/// order. Patches are only populated for ProxyAssignment::kPerPatch.
struct ProxySets {
  struct Patch {
    std::vector<std::size_t> source;  ///< positions in source_proxy
    std::vector<std::size_t> target;  ///< positions in target_proxy
    std::optional<SpatialIndex> index;
  };

  std::vector<std::size_t> source_cloud_indices;
  std::vector<std::size_t> target_cloud_indices;
  std::vector<Point3> source_proxy;
  std::vector<Point3> target_proxy;
  std::optional<SpatialIndex> target_index;
  ProxyAssignment mode = ProxyAssignment::kWhole;
  std::vector<Patch> patches;
};

/// Throws DegenerateInput("no proxy support") when either union is empty.
ProxySets build_proxies(std::span<const Point3> source_anchors,
                        std::span<const Point3> target_anchors,
                        std::span<const Point3> source_cloud, std::span<const Point3> target_cloud,
                        double beta, ProxyAssignment mode = ProxyAssignment::kWhole);

/// One proxy residual term: source_proxy[source] matched to target_proxy[target].
struct ProxyMatch {
  std::size_t source = 0;
  std::size_t target = 0;
};

/// Closest target proxy (ties to the smallest index) for every proxy term
/// under `t`. In per-patch mode each anchor's source patch is matched only
/// against that anchor's target patch and terms are listed patch by patch.
std::vector<ProxyMatch> assign_closest(const RigidTransform& t, const ProxySets& proxies);

/// exp(-r^2 / (2 sigma^2))
double robust_weight(double residual, double sigma);

/// Lower bound applied to sigma: max(1e-6, 0.01 gamma).
double sigma_floor(double gamma);

/// One third of the largest residual under `t` among the ceil(fraction * n)
/// anchors with highest probability (ties favor lower index), floored by
/// sigma_floor(gamma).
double compute_sigma(std::span<const Point3> source_anchors,
                     std::span<const Point3> target_anchors, std::span<const double> probs,
                     const RigidTransform& t, double subset_fraction, double gamma);

/// The dual-space energy
///   lambda/|C| sum_j w_j |R v_j + t - u_j|^2 + 1/|M| sum_i w~_i |R v~_i + t - u~_rho(i)|^2
/// where M is the list of proxy matches.
double dual_objective(const RigidTransform& t, std::span<const Point3> source_anchors,
                      std::span<const Point3> target_anchors,
                      std::span<const double> anchor_weights, const ProxySets& proxies,
                      std::span<const ProxyMatch> matches, std::span<const double> proxy_weights,
                      double lambda_bal);

struct SolverStep {
  double objective_before = 0.0;  ///< frozen-weight energy at T^(k-1)
  double objective_after = 0.0;   ///< frozen-weight energy at T^(k)
  double delta = 0.0;             ///< |[R|t]^(k) - [R|t]^(k-1)|_F
  std::size_t matches = 0;
};

struct DualSpaceResult {
  RigidTransform transform;
  std::vector<SolverStep> trace;
  double sigma = 0.0;
  bool converged = false;
  /// The weighted solve degenerated; `transform` is the last good iterate.
  bool stalled = false;
};

/// Alternates closest-point assignment, Gaussian re-weighting under the
/// previous iterate and a closed-form weighted rigid solve of the merged
/// anchor and proxy terms. Stops when delta < eps_term or after
/// max_dual_iters iterations; sigma stays fixed throughout.
DualSpaceResult solve_dual_space(std::span<const Point3> source_anchors,
                                 std::span<const Point3> target_anchors,
                                 const RigidTransform& init, const ProxySets& proxies,
                                 double sigma, const PipelineConfig& cfg);

}  // namespace dualreg
