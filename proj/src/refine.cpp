#include "dualreg/refine.hpp"

#include "dualreg/kabsch.hpp"

#include <algorithm>
#include <limits>

namespace dualreg {

std::array<std::size_t, 3> sample_triple(std::span<const double> probs, Rng& rng) {
  if (probs.size() < 3) {
    throw DegenerateInput("insufficient correspondences: need at least 3 for a triple");
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::array<std::size_t, 3> out{};
  for (std::size_t draw = 0; draw < 3; ++draw) {
    auto taken = [&](std::size_t i) {
      return std::find(out.begin(), out.begin() + draw, i) != out.begin() + draw;
    };
    double total = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      if (!taken(i)) total += probs[i];
    }
    const double x = unit(rng) * total;
    std::size_t pick = probs.size();
    std::size_t last = probs.size();
    double acc = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      if (taken(i)) continue;
      if (!(total > 0.0)) {
        pick = i;
        break;
      }
      if (probs[i] <= 0.0) continue;
      last = i;
      acc += probs[i];
      if (x < acc) {
        pick = i;
        break;
      }
    }
    if (pick == probs.size()) pick = last;  // x rounded up to the total
    out[draw] = pick;
  }
  return out;
}

std::vector<std::size_t> evaluate_hypothesis(const RigidTransform& t,
                                             const CorrespondenceGeometry& geom, double gamma) {
  std::vector<std::size_t> inliers;
  for (std::size_t i = 0; i < geom.size(); ++i) {
    if ((t.apply(geom.source(i)) - geom.target(i)).norm() < gamma) inliers.push_back(i);
  }
  return inliers;
}

void update_probabilities(std::vector<double>& probs, std::span<const std::size_t> inliers) {
  std::size_t next = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const bool inlier = next < inliers.size() && inliers[next] == i;
    if (inlier) ++next;
    const double p = std::clamp(probs[i], kMinInlierProb, kMaxInlierProb);
    const double odds = p / (1.0 - p) * (inlier ? kInlierOddsFactor : kOutlierOddsFactor);
    probs[i] = std::clamp(odds / (1.0 + odds), kMinInlierProb, kMaxInlierProb);
  }
}

RefineResult run_refinement(const CorrespondenceSet& ci, const OrientedPointCloud& source,
                            const OrientedPointCloud& target, const PipelineConfig& cfg,
                            Rng& rng) {
  if (ci.size() < 3) {
    throw DegenerateInput("insufficient correspondences: refinement needs at least 3, got " +
                          std::to_string(ci.size()));
  }
  const CorrespondenceGeometry geom(ci, source, target);
  const std::size_t m = ci.size();

  RefineResult res;
  RefineState& st = res.state;
  st.probs.assign(m, kInitialInlierProb);
  st.max_iters = std::numeric_limits<std::uint64_t>::max();
  bool have_best = false;

  const auto cap = static_cast<std::uint64_t>(cfg.refine_max_iters);
  std::uint64_t k = 0;
  while (k < cap) {
    ++k;
    const auto triple = sample_triple(st.probs, rng);
    WeightedPairSet pairs;
    for (std::size_t i : triple) pairs.add(geom.source(i), geom.target(i));
    RigidTransform hypothesis;
    try {
      hypothesis = solve_rigid(pairs);
    } catch (const DegenerateInput&) {
      ++res.degenerate_samples;
      res.best_count_trace.push_back(st.best_inliers.size());
      if (k >= st.max_iters) break;
      continue;
    }
    auto inliers = evaluate_hypothesis(hypothesis, geom, cfg.gamma);
    if (!have_best || inliers.size() > st.best_inliers.size()) {
      have_best = true;
      st.best_transform = hypothesis;
      st.best_inliers = inliers;
    }
    update_probabilities(st.probs, inliers);
    if (!st.best_inliers.empty()) {
      st.max_iters = termination_bound(st.best_inliers.size(), m, cfg.lambda_conf, 3);
    }
    res.best_count_trace.push_back(st.best_inliers.size());
    if (k >= st.max_iters) break;
  }
  res.iterations = static_cast<std::size_t>(k);
  if (!have_best) {
    throw DegenerateInput("degenerate sample: no sampled triple admitted a rigid solve");
  }
  return res;
}

}  // namespace dualreg
