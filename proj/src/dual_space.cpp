#include "dualreg/dual_space.hpp"

#include "dualreg/kabsch.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace dualreg {
namespace {

std::vector<std::size_t> neighborhood_union(std::span<const Point3> anchors,
                                            const SpatialIndex& index, double beta,
                                            std::vector<std::vector<std::size_t>>* per_anchor) {
  std::vector<char> hit(index.size(), 0);
  for (const Point3& a : anchors) {
    auto nbrs = index.radius_search(a, beta);
    for (std::size_t i : nbrs) hit[i] = 1;
    if (per_anchor) per_anchor->push_back(std::move(nbrs));
  }
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < hit.size(); ++i) {
    if (hit[i]) out.push_back(i);
  }
  return out;
}

// Maps cloud indices (ascending in `all`) to their positions in `all`.
std::vector<std::size_t> positions_of(const std::vector<std::size_t>& all,
                                      const std::vector<std::size_t>& subset) {
  std::vector<std::size_t> out;
  out.reserve(subset.size());
  for (std::size_t c : subset) {
    out.push_back(static_cast<std::size_t>(std::lower_bound(all.begin(), all.end(), c) -
                                           all.begin()));
  }
  return out;
}

}  // namespace

ProxySets build_proxies(std::span<const Point3> source_anchors,
                        std::span<const Point3> target_anchors,
                        std::span<const Point3> source_cloud, std::span<const Point3> target_cloud,
                        double beta, ProxyAssignment mode) {
  if (source_anchors.empty() || source_anchors.size() != target_anchors.size()) {
    throw DegenerateInput("no proxy support: anchor set is empty or unpaired");
  }
  if (!(beta > 0.0)) throw Error("proxy radius must be positive");
  if (source_cloud.empty() || target_cloud.empty()) {
    throw DegenerateInput("no proxy support: empty cloud");
  }
  const SpatialIndex src_index({source_cloud.begin(), source_cloud.end()});
  const SpatialIndex tgt_index({target_cloud.begin(), target_cloud.end()});

  const bool per_patch = mode == ProxyAssignment::kPerPatch;
  std::vector<std::vector<std::size_t>> src_patches, tgt_patches;
  ProxySets out;
  out.mode = mode;
  out.source_cloud_indices =
      neighborhood_union(source_anchors, src_index, beta, per_patch ? &src_patches : nullptr);
  out.target_cloud_indices =
      neighborhood_union(target_anchors, tgt_index, beta, per_patch ? &tgt_patches : nullptr);
  if (out.source_cloud_indices.empty() || out.target_cloud_indices.empty()) {
    throw DegenerateInput("no proxy support: no cloud point lies within beta of an anchor");
  }
  for (std::size_t i : out.source_cloud_indices) out.source_proxy.push_back(source_cloud[i]);
  for (std::size_t i : out.target_cloud_indices) out.target_proxy.push_back(target_cloud[i]);
  out.target_index.emplace(out.target_proxy);

  if (per_patch) {
    for (std::size_t a = 0; a < src_patches.size(); ++a) {
      if (src_patches[a].empty() || tgt_patches[a].empty()) continue;
      ProxySets::Patch patch;
      patch.source = positions_of(out.source_cloud_indices, src_patches[a]);
      patch.target = positions_of(out.target_cloud_indices, tgt_patches[a]);
      std::vector<Point3> pts;
      for (std::size_t p : patch.target) pts.push_back(out.target_proxy[p]);
      patch.index.emplace(std::move(pts));
      out.patches.push_back(std::move(patch));
    }
    if (out.patches.empty()) {
      throw DegenerateInput("no proxy support: no anchor has neighbors on both sides");
    }
  }
  return out;
}

std::vector<ProxyMatch> assign_closest(const RigidTransform& t, const ProxySets& proxies) {
  std::vector<ProxyMatch> out;
  if (proxies.mode == ProxyAssignment::kWhole) {
    out.resize(proxies.source_proxy.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] = {i, proxies.target_index->nearest(t.apply(proxies.source_proxy[i])).index};
    }
    return out;
  }
  for (const auto& patch : proxies.patches) {
    for (std::size_t s : patch.source) {
      const Neighbor n = patch.index->nearest(t.apply(proxies.source_proxy[s]));
      out.push_back({s, patch.target[n.index]});
    }
  }
  return out;
}

double robust_weight(double residual, double sigma) {
  return std::exp(-(residual * residual) / (2.0 * sigma * sigma));
}

double sigma_floor(double gamma) { return std::max(1e-6, 0.01 * gamma); }

double compute_sigma(std::span<const Point3> source_anchors,
                     std::span<const Point3> target_anchors, std::span<const double> probs,
                     const RigidTransform& t, double subset_fraction, double gamma) {
  const std::size_t n = source_anchors.size();
  if (n == 0 || target_anchors.size() != n || probs.size() != n) {
    throw Error("sigma needs a non-empty anchor set with one probability per anchor");
  }
  auto take = static_cast<std::size_t>(std::ceil(subset_fraction * static_cast<double>(n) - 1e-9));
  take = std::clamp<std::size_t>(take, 1, n);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return probs[a] > probs[b]; });
  double worst = 0.0;
  for (std::size_t k = 0; k < take; ++k) {
    const std::size_t j = order[k];
    worst = std::max(worst, (t.apply(source_anchors[j]) - target_anchors[j]).norm());
  }
  return std::max(worst / 3.0, sigma_floor(gamma));
}

double dual_objective(const RigidTransform& t, std::span<const Point3> source_anchors,
                      std::span<const Point3> target_anchors,
                      std::span<const double> anchor_weights, const ProxySets& proxies,
                      std::span<const ProxyMatch> matches, std::span<const double> proxy_weights,
                      double lambda_bal) {
  double anchor_term = 0.0;
  for (std::size_t j = 0; j < source_anchors.size(); ++j) {
    anchor_term +=
        anchor_weights[j] * (t.apply(source_anchors[j]) - target_anchors[j]).squaredNorm();
  }
  double proxy_term = 0.0;
  for (std::size_t i = 0; i < matches.size(); ++i) {
    proxy_term += proxy_weights[i] * (t.apply(proxies.source_proxy[matches[i].source]) -
                                      proxies.target_proxy[matches[i].target])
                                         .squaredNorm();
  }
  double e = 0.0;
  if (!source_anchors.empty()) {
    e += lambda_bal / static_cast<double>(source_anchors.size()) * anchor_term;
  }
  if (!matches.empty()) e += proxy_term / static_cast<double>(matches.size());
  return e;
}

DualSpaceResult solve_dual_space(std::span<const Point3> source_anchors,
                                 std::span<const Point3> target_anchors,
                                 const RigidTransform& init, const ProxySets& proxies,
                                 double sigma, const PipelineConfig& cfg) {
  if (source_anchors.size() != target_anchors.size()) {
    throw Error("anchor sequences differ in length");
  }
  if (!(sigma > 0.0)) throw Error("sigma must be positive");
  DualSpaceResult res;
  res.transform = init;
  res.sigma = sigma;
  const std::size_t n_anchor = source_anchors.size();

  std::vector<double> anchor_w(n_anchor);
  std::vector<double> proxy_w;
  for (int k = 1; k <= cfg.max_dual_iters; ++k) {
    const RigidTransform& prev = res.transform;
    const auto matches = assign_closest(prev, proxies);

    for (std::size_t j = 0; j < n_anchor; ++j) {
      anchor_w[j] =
          robust_weight((prev.apply(source_anchors[j]) - target_anchors[j]).norm(), sigma);
    }
    proxy_w.resize(matches.size());
    for (std::size_t i = 0; i < matches.size(); ++i) {
      proxy_w[i] = robust_weight((prev.apply(proxies.source_proxy[matches[i].source]) -
                                  proxies.target_proxy[matches[i].target])
                                     .norm(),
                                 sigma);
    }

    // One weighted solve over both terms, each weight scaled by its term's
    // normalizer, minimizes the frozen energy exactly.
    WeightedPairSet pairs;
    const double anchor_scale = n_anchor ? cfg.lambda_bal / static_cast<double>(n_anchor) : 0.0;
    const double proxy_scale = matches.empty() ? 0.0 : 1.0 / static_cast<double>(matches.size());
    for (std::size_t j = 0; j < n_anchor; ++j) {
      pairs.add(source_anchors[j], target_anchors[j], anchor_scale * anchor_w[j]);
    }
    for (std::size_t i = 0; i < matches.size(); ++i) {
      pairs.add(proxies.source_proxy[matches[i].source], proxies.target_proxy[matches[i].target],
                proxy_scale * proxy_w[i]);
    }

    SolverStep step;
    step.matches = matches.size();
    step.objective_before = dual_objective(prev, source_anchors, target_anchors, anchor_w,
                                           proxies, matches, proxy_w, cfg.lambda_bal);
    RigidTransform next;
    try {
      next = solve_rigid(pairs);
    } catch (const DegenerateInput&) {
      res.stalled = true;
      break;
    }
    step.objective_after = dual_objective(next, source_anchors, target_anchors, anchor_w,
                                          proxies, matches, proxy_w, cfg.lambda_bal);
    step.delta = transform_distance(next, prev);
    res.trace.push_back(step);
    res.transform = next;
    if (step.delta < cfg.eps_term) {
      res.converged = true;
      break;
    }
  }
  return res;
}

}  // namespace dualreg
