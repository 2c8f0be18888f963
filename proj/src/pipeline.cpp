#include "dualreg/pipeline.hpp"

#include "dualreg/cloud.hpp"
#include "dualreg/dual_space.hpp"
#include "dualreg/metrics.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <thread>

namespace dualreg {
namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

template <typename F>
auto in_stage(const char* stage, F&& f) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, e.what());
  }
}

PoseMetrics pose_metrics(const RigidTransform& est, const RigidTransform& gt,
                         const OrientedPointCloud& source) {
  return {rotation_error_deg(est, gt), translation_error(est, gt), rmse(est, gt, source.points)};
}

std::optional<double> stage_ir(const RegistrationJob& job, const std::vector<std::size_t>& members,
                               double gamma) {
  if (!job.ground_truth) return std::nullopt;
  CorrespondenceSet subset;
  subset.reserve(members.size());
  for (std::size_t i : members) subset.push_back(job.correspondences[i]);
  return inlier_ratio(subset, job.source, job.target, *job.ground_truth, gamma);
}

struct Prepared {
  PipelineConfig cfg;
  double resolution = 0.0;
};

Prepared prepare(const RegistrationJob& job) {
  return in_stage("input", [&] {
    job.source.validate();
    job.target.validate();
    check_correspondences(job.correspondences, job.source, job.target);
    job.config.validate(false);
    Prepared p;
    p.resolution = 0.5 * (cloud_resolution(job.source) + cloud_resolution(job.target));
    p.cfg = job.config.resolve(p.resolution);
    p.cfg.validate();
    return p;
  });
}

// Runs the filters and fills the matching report fields. Returns the
// refinement state when `refine` is set.
std::optional<RefineResult> filter_stages(const RegistrationJob& job, const Prepared& prep,
                                          bool refine, Rng& rng, RegistrationReport& rep) {
  const auto& cfg = prep.cfg;
  rep.stats.initial = job.correspondences.size();
  rep.stats.resolution = prep.resolution;
  rep.stats.initial_ir = stage_ir(job, [&] {
    std::vector<std::size_t> all(job.correspondences.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    return all;
  }(), cfg.gamma);

  auto t0 = Clock::now();
  const CoarseFilterResult coarse = in_stage("coarse_filter", [&] {
    return run_coarse_filter(job.correspondences, job.source, job.target, cfg, rng);
  });
  rep.timings.coarse_ms = elapsed_ms(t0);
  rep.coarse_members = coarse.members;
  rep.stats.coarse = coarse.members.size();
  rep.stats.coarse_iterations = coarse.iterations;
  rep.stats.coarse_low_confidence = coarse.low_confidence;
  rep.stats.coarse_ir = stage_ir(job, coarse.members, cfg.gamma);
  if (!refine) return std::nullopt;

  t0 = Clock::now();
  const CorrespondenceSet ci = coarse.select(job.correspondences);
  RefineResult refined = in_stage("refinement", [&] {
    return run_refinement(ci, job.source, job.target, cfg, rng);
  });
  rep.timings.refine_ms = elapsed_ms(t0);
  for (std::size_t i : refined.state.best_inliers) {
    rep.refined_members.push_back(coarse.members[i]);
  }
  rep.refine_transform = refined.state.best_transform;
  rep.stats.refined = rep.refined_members.size();
  rep.stats.refine_iterations = refined.iterations;
  rep.stats.refined_ir = stage_ir(job, rep.refined_members, cfg.gamma);
  return refined;
}

void finish_metrics(const RegistrationJob& job, const Preset& preset, RegistrationReport& rep) {
  if (!job.ground_truth) return;
  rep.metrics = pose_metrics(rep.final_transform, *job.ground_truth, job.source);
  rep.refine_metrics = pose_metrics(rep.refine_transform, *job.ground_truth, job.source);
  rep.success = is_success(rep.metrics->rotation_deg, rep.metrics->translation, preset.criteria);
}

}  // namespace

RegistrationReport register_pair(const RegistrationJob& job, const Preset& preset) {
  const auto start = Clock::now();
  RegistrationReport rep;
  rep.preset = preset.name;
  const Prepared prep = prepare(job);
  const auto& cfg = prep.cfg;
  Rng rng(cfg.rng_seed);

  const RefineResult refined = *filter_stages(job, prep, true, rng, rep);
  if (rep.refined_members.empty()) {
    throw StageError("refinement", "no correspondence agrees with the best hypothesis");
  }

  std::vector<Point3> src_anchor, tgt_anchor;
  std::vector<double> probs;
  for (std::size_t k = 0; k < refined.state.best_inliers.size(); ++k) {
    const Correspondence& c = job.correspondences[rep.refined_members[k]];
    src_anchor.push_back(job.source.points[c.source_index]);
    tgt_anchor.push_back(job.target.points[c.target_index]);
    probs.push_back(refined.state.probs[refined.state.best_inliers[k]]);
  }

  auto t0 = Clock::now();
  const ProxySets proxies = in_stage("proxy", [&] {
    const OrientedPointCloud src_ds = voxel_downsample(job.source, cfg.voxel_size);
    const OrientedPointCloud tgt_ds = voxel_downsample(job.target, cfg.voxel_size);
    return build_proxies(src_anchor, tgt_anchor, src_ds.points, tgt_ds.points, cfg.beta,
                         cfg.proxy_assignment);
  });
  rep.stats.proxy_source = proxies.source_proxy.size();
  rep.stats.proxy_target = proxies.target_proxy.size();
  rep.timings.proxy_ms = elapsed_ms(t0);

  t0 = Clock::now();
  const DualSpaceResult dual = in_stage("dual_space", [&] {
    const double sigma = compute_sigma(src_anchor, tgt_anchor, probs, rep.refine_transform,
                                       cfg.subset_fraction, cfg.gamma);
    return solve_dual_space(src_anchor, tgt_anchor, rep.refine_transform, proxies, sigma, cfg);
  });
  rep.timings.dual_ms = elapsed_ms(t0);
  rep.final_transform = dual.transform;
  rep.stats.sigma = dual.sigma;
  rep.stats.dual_iterations = dual.trace.size();
  rep.stats.dual_converged = dual.converged;
  rep.stats.dual_stalled = dual.stalled;
  rep.dual_trace = dual.trace;

  rep.ok = true;
  finish_metrics(job, preset, rep);
  rep.timings.total_ms = elapsed_ms(start);
  return rep;
}

RegistrationReport try_register(const RegistrationJob& job, const Preset& preset) {
  try {
    return register_pair(job, preset);
  } catch (const StageError& e) {
    RegistrationReport rep;
    rep.preset = preset.name;
    rep.failed_stage = e.stage();
    rep.error = e.what();
    rep.stats.initial = job.correspondences.size();
    if (job.ground_truth) rep.success = false;
    return rep;
  }
}

RegistrationReport run_filters(const RegistrationJob& job, const Preset& preset, bool refine) {
  const auto start = Clock::now();
  RegistrationReport rep;
  rep.preset = preset.name;
  const Prepared prep = prepare(job);
  Rng rng(prep.cfg.rng_seed);
  filter_stages(job, prep, refine, rng, rep);
  rep.final_transform = rep.refine_transform;
  rep.ok = true;
  if (refine) finish_metrics(job, preset, rep);
  rep.timings.total_ms = elapsed_ms(start);
  return rep;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  // splitmix64 finalizer over the combined value
  std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::vector<RegistrationReport> run_batch(const std::vector<RegistrationJob>& jobs,
                                          const Preset& preset, unsigned threads) {
  std::vector<RegistrationReport> out(jobs.size());
  threads = std::clamp<unsigned>(threads, 1, static_cast<unsigned>(std::max<std::size_t>(1, jobs.size())));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      out[i] = try_register(jobs[i], preset);
    }
  };
  if (threads == 1) {
    worker();
    return out;
  }
  std::vector<std::jthread> pool;
  for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  pool.clear();
  return out;
}

}  // namespace dualreg
