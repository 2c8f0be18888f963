#pragma once

#include "dualreg/config.hpp"
#include "dualreg/types.hpp"

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace dualreg {

using Rng = std::mt19937_64;

/// Endpoint positions and normals of a correspondence set, packed so the
/// pairwise measures read contiguous memory.
class CorrespondenceGeometry {
 public:
  CorrespondenceGeometry(const CorrespondenceSet& corr, const OrientedPointCloud& source,
                         const OrientedPointCloud& target);

  std::size_t size() const { return v_.size(); }
  const Point3& source(std::size_t i) const { return v_[i]; }
  const Point3& target(std::size_t i) const { return u_[i]; }
  const Vector3& source_normal(std::size_t i) const { return nv_[i]; }
  const Vector3& target_normal(std::size_t i) const { return nu_[i]; }

  /// | |v_i - v_j| - |u_i - u_j| |
  double length_discrepancy(std::size_t i, std::size_t j) const;
  /// max(|d_ij^s - d_ij^t|, |d_ji^s - d_ji^t|) with point-to-plane terms
  /// d_ij^s = |(v_i - v_j) . n_i^s| and likewise on the target side.
  double tangential_distance(std::size_t i, std::size_t j) const;

 private:
  std::vector<Point3> v_, u_;
  std::vector<Vector3> nv_, nu_;
};

double length_discrepancy(const Correspondence& ci, const Correspondence& cj,
                          const OrientedPointCloud& source, const OrientedPointCloud& target);
double tangential_distance(const Correspondence& ci, const Correspondence& cj,
                           const OrientedPointCloud& source, const OrientedPointCloud& target);

/// A seed correspondence and the indices (into the full set) of its
/// consensus members, ascending and unique.
struct ConsensusSet {
  std::size_t seed = 0;
  std::vector<std::size_t> members;

  std::size_t size() const { return members.size(); }
  bool empty() const { return members.empty(); }
};

/// Every i with D_L(c_i, seed) < 2 tau and D_N(c_i, seed) < delta, ascending.
/// The seed itself is always included.
std::vector<std::size_t> initial_consensus(std::size_t seed, const CorrespondenceGeometry& geom,
                                           const PipelineConfig& cfg);

/// Greedy pairwise-consistent subset of `initial`: repeatedly drop the
/// member with the most D_L >= 2 tau violations against the remaining
/// members (ties drop the larger summed D_L over those violations, then
/// the larger index) until none are left.
ConsensusSet pairwise_consensus(std::size_t seed, std::span<const std::size_t> initial,
                                const CorrespondenceGeometry& geom, const PipelineConfig& cfg);

/// True when the set's two sides are related by a reflection, i.e. the
/// unconstrained orthogonal fit has det = -1. Sets smaller than three or
/// with rank < 2 cross-covariance are never symmetric.
bool symmetry_check(const ConsensusSet& set, const CorrespondenceGeometry& geom);

/// ceil(log(1 - confidence) / log(1 - (n_inliers / n_total)^sample_size)),
/// 1 when every correspondence is an inlier. Saturates at UINT64_MAX / 2.
/// Throws Error when n_total == 0 or n_inliers is out of [1, n_total].
std::uint64_t termination_bound(std::size_t n_inliers, std::size_t n_total, double confidence,
                                int sample_size = 1);

struct CoarseFilterResult {
  /// Indices into the input set forming C_I, ascending.
  std::vector<std::size_t> members;
  /// Final confidence score for every input correspondence.
  std::vector<std::uint32_t> scores;
  std::size_t iterations = 0;
  std::size_t est_inliers = 1;
  /// No consensus set survived; `members` is the largest initial consensus.
  bool low_confidence = false;
  /// Per-iteration N_I and K_I, for diagnostics and tests.
  std::vector<std::size_t> est_inliers_trace;
  std::vector<std::uint64_t> max_iters_trace;
  /// Every pairwise consensus set that was computed, keyed by seed order.
  std::vector<ConsensusSet> saved_sets;

  /// The selected members with their scores attached.
  CorrespondenceSet select(const CorrespondenceSet& c0) const;
};

/// One-point RANSAC over c0: uniform seed draws, consensus sets, symmetry
/// rejection, score voting, adaptive stopping and best-total-score
/// selection. Throws DegenerateInput on an empty c0.
CoarseFilterResult run_coarse_filter(const CorrespondenceSet& c0, const OrientedPointCloud& source,
                                     const OrientedPointCloud& target, const PipelineConfig& cfg,
                                     Rng& rng);

}  // namespace dualreg
