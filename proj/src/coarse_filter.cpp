#include "dualreg/coarse_filter.hpp"

#include "dualreg/kabsch.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace dualreg {
namespace {

// |d_ij^s - d_ij^t| for the ordered pair (i, j).
double projected_gap(const Point3& vi, const Point3& vj, const Vector3& ni_s, const Point3& ui,
                     const Point3& uj, const Vector3& ni_t) {
  return std::abs(std::abs((vi - vj).dot(ni_s)) - std::abs((ui - uj).dot(ni_t)));
}

}  // namespace

CorrespondenceGeometry::CorrespondenceGeometry(const CorrespondenceSet& corr,
                                               const OrientedPointCloud& source,
                                               const OrientedPointCloud& target) {
  check_correspondences(corr, source, target);
  const bool normals = source.has_normals() && target.has_normals();
  v_.reserve(corr.size());
  u_.reserve(corr.size());
  nv_.reserve(corr.size());
  nu_.reserve(corr.size());
  for (const auto& c : corr) {
    v_.push_back(source.points[c.source_index]);
    u_.push_back(target.points[c.target_index]);
    nv_.push_back(normals ? source.normals[c.source_index] : Vector3::Zero());
    nu_.push_back(normals ? target.normals[c.target_index] : Vector3::Zero());
  }
}

double CorrespondenceGeometry::length_discrepancy(std::size_t i, std::size_t j) const {
  return std::abs((v_[i] - v_[j]).norm() - (u_[i] - u_[j]).norm());
}

double CorrespondenceGeometry::tangential_distance(std::size_t i, std::size_t j) const {
  return std::max(projected_gap(v_[i], v_[j], nv_[i], u_[i], u_[j], nu_[i]),
                  projected_gap(v_[j], v_[i], nv_[j], u_[j], u_[i], nu_[j]));
}

double length_discrepancy(const Correspondence& ci, const Correspondence& cj,
                          const OrientedPointCloud& source, const OrientedPointCloud& target) {
  return CorrespondenceGeometry({ci, cj}, source, target).length_discrepancy(0, 1);
}

double tangential_distance(const Correspondence& ci, const Correspondence& cj,
                           const OrientedPointCloud& source, const OrientedPointCloud& target) {
  return CorrespondenceGeometry({ci, cj}, source, target).tangential_distance(0, 1);
}

std::vector<std::size_t> initial_consensus(std::size_t seed, const CorrespondenceGeometry& geom,
                                           const PipelineConfig& cfg) {
  const double length_bound = 2.0 * cfg.tau;
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < geom.size(); ++i) {
    if (i == seed || (geom.length_discrepancy(i, seed) < length_bound &&
                      geom.tangential_distance(i, seed) < cfg.delta)) {
      out.push_back(i);
    }
  }
  return out;
}

ConsensusSet pairwise_consensus(std::size_t seed, std::span<const std::size_t> initial,
                                const CorrespondenceGeometry& geom, const PipelineConfig& cfg) {
  const double length_bound = 2.0 * cfg.tau;
  std::vector<std::size_t> members(initial.begin(), initial.end());
  std::sort(members.begin(), members.end());
  members.erase(std::unique(members.begin(), members.end()), members.end());
  const std::size_t m = members.size();

  // Violation count and summed D_L over violating pairs, per member.
  std::vector<std::size_t> violations(m, 0);
  std::vector<double> excess(m, 0.0);
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = a + 1; b < m; ++b) {
      const double d = geom.length_discrepancy(members[a], members[b]);
      if (!(d < length_bound)) {
        ++violations[a];
        ++violations[b];
        excess[a] += d;
        excess[b] += d;
      }
    }
  }

  auto worse = [&](std::size_t a, std::size_t b) {
    if (violations[a] != violations[b]) return violations[a] > violations[b];
    // Sums are updated incrementally, so compare them with a rounding margin.
    const double margin = 1e-12 * std::max({1.0, excess[a], excess[b]});
    if (std::abs(excess[a] - excess[b]) > margin) return excess[a] > excess[b];
    return a > b;
  };
  std::vector<char> alive(m, 1);
  for (;;) {
    std::size_t worst = m;
    for (std::size_t a = 0; a < m; ++a) {
      if (alive[a] && violations[a] > 0 && (worst == m || worse(a, worst))) worst = a;
    }
    if (worst == m) break;
    alive[worst] = 0;
    for (std::size_t b = 0; b < m; ++b) {
      if (!alive[b]) continue;
      const double d = geom.length_discrepancy(members[worst], members[b]);
      if (!(d < length_bound)) {
        --violations[b];
        excess[b] = violations[b] == 0 ? 0.0 : excess[b] - d;
      }
    }
  }

  ConsensusSet out{seed, {}};
  for (std::size_t a = 0; a < m; ++a) {
    if (alive[a]) out.members.push_back(members[a]);
  }
  return out;
}

bool symmetry_check(const ConsensusSet& set, const CorrespondenceGeometry& geom) {
  if (set.size() < 3) return false;
  WeightedPairSet pairs;
  for (std::size_t i : set.members) pairs.add(geom.source(i), geom.target(i));
  const OrthogonalSolution sol = solve_orthogonal(pairs);
  return sol.determinate && sol.determinant() < 0.0;
}

std::uint64_t termination_bound(std::size_t n_inliers, std::size_t n_total, double confidence,
                                int sample_size) {
  if (n_total == 0) throw Error("termination bound needs a non-empty correspondence set");
  if (n_inliers < 1 || n_inliers > n_total) {
    throw Error("termination bound needs 1 <= inliers <= total");
  }
  if (n_inliers == n_total) return 1;
  constexpr auto kSaturated = std::numeric_limits<std::uint64_t>::max() / 2;
  const double ratio =
      std::pow(static_cast<double>(n_inliers) / static_cast<double>(n_total), sample_size);
  const double denom = std::log1p(-ratio);
  if (denom == 0.0) return kSaturated;
  const double k = std::ceil(std::log1p(-confidence) / denom);
  if (!(k < static_cast<double>(kSaturated))) return kSaturated;
  return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(k));
}

CorrespondenceSet CoarseFilterResult::select(const CorrespondenceSet& c0) const {
  CorrespondenceSet out;
  out.reserve(members.size());
  for (std::size_t i : members) {
    Correspondence c = c0[i];
    c.score = scores[i];
    out.push_back(c);
  }
  return out;
}

CoarseFilterResult run_coarse_filter(const CorrespondenceSet& c0, const OrientedPointCloud& source,
                                     const OrientedPointCloud& target, const PipelineConfig& cfg,
                                     Rng& rng) {
  if (c0.empty()) throw DegenerateInput("insufficient correspondences: empty input set");
  const CorrespondenceGeometry geom(c0, source, target);
  const std::size_t n = c0.size();
  const std::uint64_t cap = static_cast<std::uint64_t>(cfg.coarse_cap_multiple) * n;

  CoarseFilterResult res;
  res.scores.assign(n, 0);
  // A seed's consensus set is a pure function of the seed, so a re-drawn
  // seed reuses its cached (possibly rejected) set.
  std::map<std::size_t, std::vector<std::size_t>> by_seed;
  std::vector<std::size_t> fallback;
  std::uniform_int_distribution<std::size_t> draw(0, n - 1);

  std::size_t est_inliers = 1;
  std::uint64_t max_iters = std::numeric_limits<std::uint64_t>::max();
  std::uint64_t k = 1;
  while (k < max_iters && k <= cap) {
    const std::size_t seed = draw(rng);
    auto it = by_seed.find(seed);
    if (it == by_seed.end()) {
      const auto init = initial_consensus(seed, geom, cfg);
      if (init.size() > fallback.size()) fallback = init;
      ConsensusSet set = pairwise_consensus(seed, init, geom, cfg);
      if (symmetry_check(set, geom)) set.members.clear();
      it = by_seed.emplace(seed, std::move(set.members)).first;
    }
    const auto& members = it->second;
    if (static_cast<double>(members.size()) > cfg.alpha * static_cast<double>(est_inliers)) {
      for (std::size_t i : members) ++res.scores[i];
    }
    est_inliers = std::max(est_inliers, members.size());
    max_iters = termination_bound(est_inliers, n, cfg.lambda_conf);
    res.est_inliers_trace.push_back(est_inliers);
    res.max_iters_trace.push_back(max_iters);
    ++k;
  }
  res.iterations = static_cast<std::size_t>(k - 1);
  res.est_inliers = est_inliers;

  const std::vector<std::size_t>* best = nullptr;
  std::uint64_t best_total = 0;
  for (const auto& [seed, members] : by_seed) {
    if (members.empty()) continue;
    res.saved_sets.push_back({seed, members});
    std::uint64_t total = 0;
    for (std::size_t i : members) total += res.scores[i];
    if (best == nullptr || total > best_total) {
      best = &members;
      best_total = total;
    }
  }
  if (best != nullptr) {
    res.members = *best;
  } else {
    res.members = fallback;
    res.low_confidence = true;
  }
  return res;
}

}  // namespace dualreg
