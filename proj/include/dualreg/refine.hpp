#pragma once

#include "dualreg/coarse_filter.hpp"
#include "dualreg/config.hpp"
#include "dualreg/types.hpp"

#include <array>
#include <span>
#include <vector>

namespace dualreg {

/// Odds multipliers and clamp range of the inlier-probability update.
inline constexpr double kInlierOddsFactor = 2.0;
inline constexpr double kOutlierOddsFactor = 0.5;
inline constexpr double kMinInlierProb = 0.01;
inline constexpr double kMaxInlierProb = 0.99;
inline constexpr double kInitialInlierProb = 0.5;

struct RefineState {
  std::vector<double> probs;
  RigidTransform best_transform;
  /// Indices into the refined set, ascending.
  std::vector<std::size_t> best_inliers;
  std::uint64_t max_iters = 0;
};

/// Three distinct indices drawn one after another without replacement,
/// each proportionally to its current probability among those remaining.
/// Throws DegenerateInput when fewer than three candidates exist.
std::array<std::size_t, 3> sample_triple(std::span<const double> probs, Rng& rng);

/// Indices i with |R v_i + t - u_i| < gamma, ascending.
std::vector<std::size_t> evaluate_hypothesis(const RigidTransform& t,
                                             const CorrespondenceGeometry& geom, double gamma);

/// Odds update: members of `inliers` (ascending) get odds x2, everyone else
/// x0.5; results are clamped to [0.01, 0.99].
void update_probabilities(std::vector<double>& probs, std::span<const std::size_t> inliers);

struct RefineResult {
  RefineState state;
  std::size_t iterations = 0;
  std::size_t degenerate_samples = 0;
  /// Size of the best inlier set after each iteration.
  std::vector<std::size_t> best_count_trace;
};

/// Probability-weighted three-point RANSAC over `ci`. Stops once the
/// iteration count reaches the cubic termination bound computed from the
/// best inlier count and |ci|, or cfg.refine_max_iters. Throws
/// DegenerateInput when |ci| < 3 or no sampled triple was solvable.
RefineResult run_refinement(const CorrespondenceSet& ci, const OrientedPointCloud& source,
                            const OrientedPointCloud& target, const PipelineConfig& cfg, Rng& rng);

}  // namespace dualreg
